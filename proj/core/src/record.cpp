#include "caseidx/record.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "caseidx/error.hpp"

namespace caseidx {

DuplicateIdError::DuplicateIdError(std::vector<std::uint64_t> ids, const std::string& context)
    : Error([&] {
        std::string msg = "duplicate record_id";
        if (!context.empty()) msg += " (" + context + ")";
        msg += ":";
        const std::size_t shown = std::min<std::size_t>(ids.size(), 16);
        for (std::size_t i = 0; i < shown; ++i) msg += " " + std::to_string(ids[i]);
        if (shown < ids.size()) msg += " ... (" + std::to_string(ids.size()) + " total)";
        return msg;
      }()),
      ids_(std::move(ids)) {}

std::string_view to_string(CaseStatus s) noexcept {
  switch (s) {
    case CaseStatus::kConfirmed: return "confirmed";
    case CaseStatus::kSuspected: return "suspected";
    case CaseStatus::kRecovered: return "recovered";
    case CaseStatus::kDead: return "dead";
    case CaseStatus::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CaseStatus> parse_status(std::string_view text) noexcept {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto s : {CaseStatus::kConfirmed, CaseStatus::kSuspected, CaseStatus::kRecovered,
                 CaseStatus::kDead, CaseStatus::kUnknown}) {
    if (lower == to_string(s)) return s;
  }
  return std::nullopt;
}

const Point& query_center(const Query& q) noexcept {
  return std::visit([](const auto& v) -> const Point& { return v.center; }, q);
}

bool is_knn(const Query& q) noexcept { return std::holds_alternative<KnnQuery>(q); }

void validate_query(const Query& q) {
  if (query_center(q).dimension() == 0) throw UsageError("query center has no coordinates");
  if (const auto* r = std::get_if<RangeQuery>(&q)) {
    if (!std::isfinite(r->radius)) throw UsageError("range radius is not finite");
    if (r->radius < 0.0) throw UsageError("range radius is negative");
  }
}

}  // namespace caseidx
