#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace caseidx {

struct CsvRow {
  std::size_t line = 0;  // 1-based physical line the row starts on
  std::vector<std::string> fields;
  bool unterminated_quote = false;
};

/// Comma-separated reader: double-quoted fields, "" escapes, embedded
/// newlines inside quotes, CRLF or LF line ends, leading UTF-8 BOM skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next row; returns false at end of input.
  bool next(CsvRow& row);

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  bool started_ = false;
};

}  // namespace caseidx
