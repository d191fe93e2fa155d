#include "caseidx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "caseidx/error.hpp"

namespace caseidx {

Point::Point(std::span<const double> coords) {
  if (coords.empty() || coords.size() > kMaxDimensions) {
    throw DimensionError("point dimension " + std::to_string(coords.size()) +
                         " outside [1, " + std::to_string(kMaxDimensions) + "]");
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) {
      throw UsageError("point coordinate " + std::to_string(i) + " is not finite");
    }
    coords_[i] = coords[i];
  }
  dim_ = static_cast<std::uint8_t>(coords.size());
}

Point::Point(std::initializer_list<double> coords)
    : Point(std::span<const double>(coords.begin(), coords.size())) {}

std::string Point::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (std::size_t i = 0; i < dim_; ++i) {
    if (i) out << ", ";
    out << coords_[i];
  }
  out << ')';
  return out.str();
}

void require_same_dimension(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("dimension mismatch: " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

Rect::Rect(const Point& min, const Point& max) : min_(min), max_(max) {
  require_same_dimension(min.dimension(), max.dimension());
  for (std::size_t i = 0; i < min.dimension(); ++i) {
    if (min[i] > max[i]) {
      throw UsageError("rect min exceeds max on axis " + std::to_string(i));
    }
  }
}

double Rect::volume() const noexcept {
  double v = 1.0;
  for (std::size_t i = 0; i < dimension(); ++i) v *= max_[i] - min_[i];
  return v;
}

bool Rect::contains(const Point& p) const {
  require_same_dimension(dimension(), p.dimension());
  for (std::size_t i = 0; i < dimension(); ++i) {
    if (p[i] < min_[i] || p[i] > max_[i]) return false;
  }
  return true;
}

bool Rect::contains(const Rect& r) const {
  require_same_dimension(dimension(), r.dimension());
  for (std::size_t i = 0; i < dimension(); ++i) {
    if (r.min_[i] < min_[i] || r.max_[i] > max_[i]) return false;
  }
  return true;
}

std::string Rect::to_string() const {
  return '[' + min_.to_string() + ", " + max_.to_string() + ']';
}

double distance(const Point& a, const Point& b) {
  require_same_dimension(a.dimension(), b.dimension());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double mindist(const Point& p, const Rect& r) {
  require_same_dimension(p.dimension(), r.dimension());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.dimension(); ++i) {
    double gap = 0.0;
    if (p[i] < r.min()[i]) {
      gap = r.min()[i] - p[i];
    } else if (p[i] > r.max()[i]) {
      gap = p[i] - r.max()[i];
    }
    sum += gap * gap;
  }
  return std::sqrt(sum);
}

bool rect_intersects(const Rect& a, const Rect& b) {
  require_same_dimension(a.dimension(), b.dimension());
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    if (a.max()[i] < b.min()[i] || b.max()[i] < a.min()[i]) return false;
  }
  return true;
}

bool interiors_overlap(const Rect& a, const Rect& b) {
  require_same_dimension(a.dimension(), b.dimension());
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    if (std::min(a.max()[i], b.max()[i]) <= std::max(a.min()[i], b.min()[i])) return false;
  }
  return true;
}

Rect rect_union(const Rect& a, const Rect& b) {
  require_same_dimension(a.dimension(), b.dimension());
  std::array<double, kMaxDimensions> lo{};
  std::array<double, kMaxDimensions> hi{};
  const std::size_t d = a.dimension();
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = std::min(a.min()[i], b.min()[i]);
    hi[i] = std::max(a.max()[i], b.max()[i]);
  }
  return Rect(Point(std::span<const double>(lo.data(), d)),
              Point(std::span<const double>(hi.data(), d)));
}

Rect rect_union(const Rect& a, const Point& p) { return rect_union(a, Rect::of_point(p)); }

}  // namespace caseidx
