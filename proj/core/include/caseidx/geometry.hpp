#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>

namespace caseidx {

/// Largest index dimension a deployment may configure.
inline constexpr std::size_t kMaxDimensions = 4;

/// A finite point in index space. Unused trailing coordinates are kept at
/// zero so value equality is plain array equality.
class Point {
 public:
  Point() = default;
  explicit Point(std::span<const double> coords);
  Point(std::initializer_list<double> coords);

  std::size_t dimension() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return {coords_.data(), dim_}; }

  friend bool operator==(const Point&, const Point&) = default;

  std::string to_string() const;

 private:
  std::array<double, kMaxDimensions> coords_{};
  std::uint8_t dim_ = 0;
};

/// Closed axis-aligned box. Zero-extent (degenerate) boxes are allowed.
class Rect {
 public:
  Rect() = default;
  Rect(const Point& min, const Point& max);

  static Rect of_point(const Point& p) { return Rect(p, p); }

  const Point& min() const noexcept { return min_; }
  const Point& max() const noexcept { return max_; }
  std::size_t dimension() const noexcept { return min_.dimension(); }

  /// Product of extents; zero for any degenerate box.
  double volume() const noexcept;
  bool contains(const Point& p) const;
  bool contains(const Rect& r) const;

  friend bool operator==(const Rect&, const Rect&) = default;

  std::string to_string() const;

 private:
  Point min_;
  Point max_;
};

/// Euclidean distance. Throws DimensionError on mismatch.
double distance(const Point& a, const Point& b);

/// Minimum Euclidean distance from p to any point of r; 0 when p lies in r.
double mindist(const Point& p, const Rect& r);

/// Closed-box intersection: touching faces or corners count.
bool rect_intersects(const Rect& a, const Rect& b);

/// Smallest box containing both arguments.
Rect rect_union(const Rect& a, const Rect& b);
Rect rect_union(const Rect& a, const Point& p);

/// True when the intersection of a and b has positive volume.
bool interiors_overlap(const Rect& a, const Rect& b);

void require_same_dimension(std::size_t a, std::size_t b);

}  // namespace caseidx
