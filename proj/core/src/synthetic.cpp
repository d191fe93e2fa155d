#include "caseidx/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "caseidx/error.hpp"

namespace caseidx {

std::string_view to_string(SpatialDistribution d) noexcept {
  return d == SpatialDistribution::kUniform ? "uniform" : "clustered";
}

SpatialDistribution parse_distribution(std::string_view text) {
  if (text == "uniform") return SpatialDistribution::kUniform;
  if (text == "clustered") return SpatialDistribution::kClustered;
  throw UsageError("unknown distribution '" + std::string(text) + "'");
}

namespace {

constexpr double kDayMax = 120.0;

Point uniform_point(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> lat(kLatMin, kLatMax);
  std::uniform_real_distribution<double> lon(kLonMin, kLonMax);
  std::uniform_real_distribution<double> day(0.0, kDayMax);
  std::array<double, kMaxDimensions> c{};
  for (std::size_t i = 0; i < dim; ++i) c[i] = i == 0 ? lat(rng) : i == 1 ? lon(rng) : day(rng);
  return Point(std::span<const double>(c.data(), dim));
}

}  // namespace

std::vector<CaseRecord> generate_records(const SyntheticSpec& spec) {
  if (spec.dimension < 1 || spec.dimension > kMaxDimensions) {
    throw UsageError("dimension must be 1.." + std::to_string(kMaxDimensions));
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<Point> cities;
  if (spec.distribution == SpatialDistribution::kClustered) {
    if (spec.cities == 0) throw UsageError("clustered data needs at least one city");
    for (std::size_t i = 0; i < spec.cities; ++i) cities.push_back(uniform_point(rng, spec.dimension));
  }
  std::normal_distribution<double> jitter(0.0, spec.city_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> status(0, 4);
  std::uniform_int_distribution<int> age(0, 95);
  std::uniform_int_distribution<int> day(0, static_cast<int>(kDayMax) - 1);

  std::vector<CaseRecord> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    CaseRecord r;
    r.record_id = spec.first_id + i;
    if (cities.empty()) {
      r.position = uniform_point(rng, spec.dimension);
    } else {
      const Point& city = cities[rng() % cities.size()];
      if (unit(rng) < spec.duplicate_share) {
        r.position = city;
      } else {
        std::array<double, kMaxDimensions> c{};
        for (std::size_t d = 0; d < spec.dimension; ++d) {
          c[d] = d < 2 ? city[d] + jitter(rng) : city[d];
        }
        c[0] = std::clamp(c[0], kLatMin, kLatMax);
        if (spec.dimension > 1) c[1] = std::clamp(c[1], kLonMin, kLonMax);
        r.position = Point(std::span<const double>(c.data(), spec.dimension));
      }
    }
    r.status = static_cast<CaseStatus>(status(rng));
    r.event_day = day(rng);
    r.attributes = {{"age", std::to_string(age(rng))}, {"sex", unit(rng) < 0.5 ? "F" : "M"}};
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Point> generate_centers(std::span<const CaseRecord> records, std::size_t n,
                                    std::uint64_t seed, std::size_t dimension) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0 && !records.empty()) {
      out.push_back(records[rng() % records.size()].position);
    } else {
      out.push_back(uniform_point(rng, dimension));
    }
  }
  return out;
}

}  // namespace caseidx
