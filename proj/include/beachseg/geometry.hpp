#pragma once

// Polygon arithmetic for carrying annotations through tiling: area,
// rectangle clipping, translation and rasterization to pixel masks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beachseg/error.hpp"

namespace beachseg {

struct Point {
  double x = 0;
  double y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed vertex ring; the edge from the last vertex back to the first is
/// implicit. At least three vertices, no two consecutive ones identical.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) {
      throw Error(ErrorKind::InvalidPolygon,
                  "polygon needs at least 3 vertices, got " + std::to_string(vertices_.size()));
    }
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const Point& p = vertices_[i];
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw Error(ErrorKind::InvalidPolygon, "non-finite vertex");
      }
      if (p == vertices_[(i + 1) % vertices_.size()]) {
        throw Error(ErrorKind::InvalidPolygon,
                    "consecutive duplicate vertex at index " + std::to_string(i));
      }
    }
  }

  /// Drops consecutive duplicates (including across the closing edge);
  /// returns nullopt when fewer than three distinct vertices remain.
  static std::optional<Polygon> from_points(std::vector<Point> points) {
    std::vector<Point> ring;
    ring.reserve(points.size());
    for (const Point& p : points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
      if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
    }
    while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) return std::nullopt;
    return Polygon(std::move(ring));
  }

  std::span<const Point> vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const Point& operator[](std::size_t i) const { return vertices_[i]; }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<Point> vertices_;
};

struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int width = 1;
  int height = 1;

  int x1() const noexcept { return x0 + width; }  // exclusive
  int y1() const noexcept { return y0 + height; }
  double area() const noexcept { return static_cast<double>(width) * height; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct BoundingBox {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
    if (width < 0 || height < 0) throw Error(ErrorKind::InvalidArgument, "negative mask size");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { bits_[index(x, y)] = value ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  std::size_t popcount() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  friend bool operator==(const BitMask&, const BitMask&) = default;
  friend auto operator<=>(const BitMask&, const BitMask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline double signed_area(const Polygon& p) {
  double twice = 0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return twice / 2.0;
}

inline double polygon_area(const Polygon& p) { return std::fabs(signed_area(p)); }

inline double perimeter(const Polygon& p) {
  double total = 0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % n];
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

inline BoundingBox bounding_box(const Polygon& p) {
  BoundingBox box{p[0].x, p[0].y, p[0].x, p[0].y};
  for (const Point& v : p.vertices()) {
    box.min_x = std::min(box.min_x, v.x);
    box.min_y = std::min(box.min_y, v.y);
    box.max_x = std::max(box.max_x, v.x);
    box.max_y = std::max(box.max_y, v.y);
  }
  return box;
}

inline Polygon translate(const Polygon& p, double dx, double dy) {
  std::vector<Point> moved;
  moved.reserve(p.size());
  for (const Point& v : p.vertices()) moved.push_back({v.x + dx, v.y + dy});
  return Polygon(std::move(moved));
}

namespace detail {

// Intersection of segment ab with an axis-aligned line, computed from the
// lexicographically smaller endpoint so that both tiles sharing a boundary
// produce the same point.
inline Point cross_vertical(Point a, Point b, double x) {
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  const double t = (x - a.x) / (b.x - a.x);
  return {x, a.y + t * (b.y - a.y)};
}

inline Point cross_horizontal(Point a, Point b, double y) {
  if (b.y < a.y || (b.y == a.y && b.x < a.x)) std::swap(a, b);
  const double t = (y - a.y) / (b.y - a.y);
  return {a.x + t * (b.x - a.x), y};
}

inline int saturating_int(double v) {
  return static_cast<int>(std::clamp(v, -1.0e9, 1.0e9));
}

template <typename Inside, typename Cross>
std::vector<Point> clip_half_plane(const std::vector<Point>& in, Inside inside, Cross cross) {
  std::vector<Point> out;
  if (in.empty()) return out;
  out.reserve(in.size() + 4);
  Point prev = in.back();
  bool prev_in = inside(prev);
  for (const Point& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in) {
      if (!prev_in) out.push_back(cross(prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(cross(prev, cur));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

}  // namespace detail

inline constexpr double kSliverArea = 1.0;

/// Sutherland-Hodgman against the four sides of `r`. Results with zero area,
/// or area below `min_area`, come back as nullopt.
inline std::optional<Polygon> clip_to_rect(const Polygon& p, const PixelRect& r,
                                           double min_area = kSliverArea) {
  const double left = r.x0, right = r.x1(), top = r.y0, bottom = r.y1();
  std::vector<Point> ring(p.vertices().begin(), p.vertices().end());
  ring = detail::clip_half_plane(
      ring, [&](Point v) { return v.x >= left; },
      [&](Point a, Point b) { return detail::cross_vertical(a, b, left); });
  ring = detail::clip_half_plane(
      ring, [&](Point v) { return v.x <= right; },
      [&](Point a, Point b) { return detail::cross_vertical(a, b, right); });
  ring = detail::clip_half_plane(
      ring, [&](Point v) { return v.y >= top; },
      [&](Point a, Point b) { return detail::cross_horizontal(a, b, top); });
  ring = detail::clip_half_plane(
      ring, [&](Point v) { return v.y <= bottom; },
      [&](Point a, Point b) { return detail::cross_horizontal(a, b, bottom); });
  auto clipped = Polygon::from_points(std::move(ring));
  if (!clipped) return std::nullopt;
  const double area = polygon_area(*clipped);
  if (!(area > 0.0) || area < min_area) return std::nullopt;
  return clipped;
}

/// Even-odd point-in-polygon test.
inline bool contains(const Polygon& p, Point q) {
  bool inside = false;
  const std::size_t n = p.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = p[i];
    const Point& b = p[j];
    if ((a.y > q.y) != (b.y > q.y) && q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

/// Calls `span(row, col_begin, col_end)` for every run of frame pixels whose
/// centers fall inside `p` under the even-odd rule. Rows and columns are
/// frame-local. Crossing points use the same expression as `contains`, so
/// the two agree pixel for pixel.
template <typename SpanFn>
void scan_polygon(const Polygon& p, const PixelRect& frame, SpanFn&& span) {
  const BoundingBox box = bounding_box(p);
  const int row_begin =
      std::max(0, detail::saturating_int(std::floor(box.min_y - frame.y0 - 0.5)));
  const int row_end =
      std::min(frame.height, detail::saturating_int(std::ceil(box.max_y - frame.y0 + 0.5)) + 1);
  const std::size_t n = p.size();
  std::vector<double> crossings;
  // Smallest column in [0, width] whose center is >= bound.
  auto first_center_at_or_after = [&](double bound) {
    int c = std::clamp(detail::saturating_int(std::ceil(bound - frame.x0 - 0.5)), 0, frame.width);
    while (c < frame.width && frame.x0 + c + 0.5 < bound) ++c;
    while (c > 0 && frame.x0 + (c - 1) + 0.5 >= bound) --c;
    return c;
  };
  for (int row = row_begin; row < row_end; ++row) {
    const double cy = frame.y0 + row + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = p[i];
      const Point& b = p[j];
      if ((a.y > cy) != (b.y > cy)) {
        crossings.push_back((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Pixel centers cx with crossings[k] <= cx < crossings[k+1].
      const double lo = crossings[k];
      const double hi = crossings[k + 1];
      const int c0 = first_center_at_or_after(lo);
      const int c1 = first_center_at_or_after(hi);
      if (c0 < c1) span(row, c0, c1);
    }
  }
}

inline BitMask rasterize(const Polygon& p, const PixelRect& frame) {
  BitMask mask(frame.width, frame.height);
  scan_polygon(p, frame, [&](int row, int c0, int c1) {
    for (int c = c0; c < c1; ++c) mask.set(c, row);
  });
  return mask;
}

inline BitMask rasterize(const std::optional<Polygon>& p, const PixelRect& frame) {
  if (!p) return BitMask(frame.width, frame.height);
  return rasterize(*p, frame);
}

}  // namespace beachseg
