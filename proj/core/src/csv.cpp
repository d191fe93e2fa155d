#include "caseidx/csv.hpp"

namespace caseidx {

bool CsvReader::next(CsvRow& row) {
  row.fields.clear();
  row.unterminated_quote = false;

  if (!started_) {
    started_ = true;
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(static_cast<unsigned char>(bom[1]) == 0xBB &&
            static_cast<unsigned char>(bom[2]) == 0xBF)) {
        in_.clear();
        in_.seekg(0);
      }
    }
  }

  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;

  row.line = line_;
  std::string field;
  bool in_quotes = false;
  bool quoted = false;
  while (true) {
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) row.unterminated_quote = true;
      row.fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
    } else if (ch == '"' && !quoted && field.empty()) {
      in_quotes = true;
      quoted = true;
    } else if (ch == ',') {
      row.fields.push_back(std::move(field));
      field.clear();
      quoted = false;
    } else if (ch == '\r' && in_.peek() == '\n') {
      // CRLF; the LF ends the row on the next iteration.
    } else if (ch == '\n') {
      ++line_;
      row.fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    c = in_.get();
  }
}

}  // namespace caseidx
