#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "caseidx/record.hpp"

namespace caseidx {

enum class SpatialDistribution { kUniform, kClustered };

std::string_view to_string(SpatialDistribution d) noexcept;
SpatialDistribution parse_distribution(std::string_view text);

/// Seeded case generator. Coordinates 0 and 1 are latitude and longitude in
/// degrees inside a fixed box; further coordinates are a day index in
/// [0, 120). Clustered data draws cases around city centres, and a share of
/// cases sits exactly on a centre so identical positions occur.
struct SyntheticSpec {
  std::size_t count = 10000;
  std::uint64_t seed = 1;
  SpatialDistribution distribution = SpatialDistribution::kUniform;
  std::size_t dimension = 2;
  std::size_t cities = 40;
  double city_sigma = 0.6;       // degrees
  double duplicate_share = 0.02;  // clustered only
  RecordId first_id = 1;
};

inline constexpr double kLatMin = 18.0;
inline constexpr double kLatMax = 54.0;
inline constexpr double kLonMin = 73.0;
inline constexpr double kLonMax = 135.0;

std::vector<CaseRecord> generate_records(const SyntheticSpec& spec);

/// Query centres: half are positions of existing records, half uniform in
/// the generator's box.
std::vector<Point> generate_centers(std::span<const CaseRecord> records, std::size_t n,
                                    std::uint64_t seed, std::size_t dimension = 2);

}  // namespace caseidx
