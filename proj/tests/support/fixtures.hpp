#pragma once

// Test-only fixture builders. Everything here is written independently of
// the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "beachseg/geometry.hpp"
#include "beachseg/image_io.hpp"
#include "beachseg/raster.hpp"

namespace beachseg::testing {

// ---------------------------------------------------------------- TIFF/EXIF

struct TiffEntry {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::vector<std::uint8_t> value;  // already in the target byte order
};

class TiffBuilder {
 public:
  explicit TiffBuilder(bool little_endian) : le_(little_endian) {}

  std::vector<std::uint8_t> u16(std::uint16_t v) const {
    return le_ ? std::vector<std::uint8_t>{std::uint8_t(v), std::uint8_t(v >> 8)}
               : std::vector<std::uint8_t>{std::uint8_t(v >> 8), std::uint8_t(v)};
  }
  std::vector<std::uint8_t> u32(std::uint32_t v) const {
    std::vector<std::uint8_t> out(4);
    for (int i = 0; i < 4; ++i) out[le_ ? i : 3 - i] = std::uint8_t(v >> (8 * i));
    return out;
  }
  std::vector<std::uint8_t> rationals(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> rs) const {
    std::vector<std::uint8_t> out;
    for (auto [n, d] : rs) {
      auto a = u32(n), b = u32(d);
      out.insert(out.end(), a.begin(), a.end());
      out.insert(out.end(), b.begin(), b.end());
    }
    return out;
  }
  TiffEntry ascii(std::uint16_t tag, const std::string& s) const {
    std::vector<std::uint8_t> v(s.begin(), s.end());
    v.push_back(0);
    return {tag, 2, static_cast<std::uint32_t>(v.size()), v};
  }
  TiffEntry rational(std::uint16_t tag,
                     std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> rs) const {
    return {tag, 5, static_cast<std::uint32_t>(rs.size()), rationals(rs)};
  }
  TiffEntry short_value(std::uint16_t tag, std::uint16_t v) const { return {tag, 3, 1, u16(v)}; }
  TiffEntry byte_value(std::uint16_t tag, std::uint8_t v) const { return {tag, 1, 1, {v}}; }

  /// Lays out IFD0 -> {Exif IFD, GPS IFD}. Pointer entries are added here.
  std::vector<std::uint8_t> build(std::vector<TiffEntry> ifd0, const std::vector<TiffEntry>& exif,
                                  const std::vector<TiffEntry>& gps) const {
    std::vector<std::uint8_t> out;
    out.push_back(le_ ? 'I' : 'M');
    out.push_back(le_ ? 'I' : 'M');
    append(out, u16(42));
    append(out, u32(8));
    // Sizes to place sub-IFDs after IFD0.
    const bool has_exif = !exif.empty(), has_gps = !gps.empty();
    if (has_exif) ifd0.push_back({0x8769, 4, 1, u32(0)});
    if (has_gps) ifd0.push_back({0x8825, 4, 1, u32(0)});
    std::sort(ifd0.begin(), ifd0.end(), [](auto& a, auto& b) { return a.tag < b.tag; });
    const std::uint32_t ifd0_size = ifd_size(ifd0);
    const std::uint32_t exif_at = 8 + ifd0_size;
    const std::uint32_t gps_at = exif_at + (has_exif ? ifd_size(exif) : 0);
    for (auto& e : ifd0) {
      if (e.tag == 0x8769) e.value = u32(exif_at);
      if (e.tag == 0x8825) e.value = u32(gps_at);
    }
    write_ifd(out, ifd0, 8);
    if (has_exif) write_ifd(out, exif, exif_at);
    if (has_gps) write_ifd(out, gps, gps_at);
    return out;
  }

 private:
  static void append(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& v) {
    out.insert(out.end(), v.begin(), v.end());
  }
  static std::uint32_t ifd_size(const std::vector<TiffEntry>& entries) {
    std::uint32_t size = 2 + 12 * static_cast<std::uint32_t>(entries.size()) + 4;
    for (const auto& e : entries) {
      if (e.value.size() > 4) size += static_cast<std::uint32_t>(e.value.size() + (e.value.size() & 1));
    }
    return size;
  }
  void write_ifd(std::vector<std::uint8_t>& out, const std::vector<TiffEntry>& entries,
                 std::uint32_t at) const {
    if (out.size() != at) throw std::logic_error("IFD layout mismatch");
    append(out, u16(static_cast<std::uint16_t>(entries.size())));
    std::uint32_t data_at = at + 2 + 12 * static_cast<std::uint32_t>(entries.size()) + 4;
    std::vector<std::uint8_t> data;
    for (const auto& e : entries) {
      append(out, u16(e.tag));
      append(out, u16(e.type));
      append(out, u32(e.count));
      if (e.value.size() <= 4) {
        auto v = e.value;
        v.resize(4, 0);
        append(out, v);
      } else {
        append(out, u32(data_at + static_cast<std::uint32_t>(data.size())));
        append(data, e.value);
        if (e.value.size() & 1) data.push_back(0);
      }
    }
    append(out, u32(0));
    append(out, data);
  }

  bool le_;
};

/// Flight fixture: 14 deg 48' N, 17 deg 18' W, altitude 10/1 m above sea
/// level, 1/500 s, f/2.8, ISO 100.
inline std::vector<std::uint8_t> flight_tiff(bool little_endian = true) {
  TiffBuilder b(little_endian);
  std::vector<TiffEntry> ifd0 = {b.ascii(0x010F, "DJI"), b.ascii(0x0110, "FC220")};
  std::vector<TiffEntry> exif = {b.rational(0x829A, {{1, 500}}), b.rational(0x829D, {{28, 10}}),
                                 b.short_value(0x8827, 100)};
  std::vector<TiffEntry> gps = {b.ascii(0x0001, "N"),
                                b.rational(0x0002, {{14, 1}, {48, 1}, {0, 1}}),
                                b.ascii(0x0003, "W"),
                                b.rational(0x0004, {{17, 1}, {18, 1}, {0, 1}}),
                                b.byte_value(0x0005, 0),
                                b.rational(0x0006, {{10, 1}})};
  return b.build(ifd0, exif, gps);
}

/// Splices an APP1/Exif segment right after SOI of an encoded JPEG.
inline std::vector<std::uint8_t> with_exif(const std::vector<std::uint8_t>& jpeg,
                                           const std::vector<std::uint8_t>& tiff) {
  const std::size_t length = tiff.size() + 8;
  std::vector<std::uint8_t> out;
  out.reserve(jpeg.size() + length + 2);
  for (std::uint8_t b : {0xFF, 0xD8, 0xFF, 0xE1}) out.push_back(b);
  out.push_back(std::uint8_t(length >> 8));
  out.push_back(std::uint8_t(length & 0xFF));
  for (char c : {'E', 'x', 'i', 'f', '\0', '\0'}) out.push_back(static_cast<std::uint8_t>(c));
  std::copy(tiff.begin(), tiff.end(), std::back_inserter(out));
  std::copy(jpeg.begin() + 2, jpeg.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------- images

inline RasterImage random_image(std::mt19937_64& rng, int w, int h, int channels, int lo = 0,
                                int hi = 255) {
  RasterImage img(w, h, channels);
  std::uniform_int_distribution<int> d(lo, hi);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

/// 4x4 RGB ramp with distinct, spread-out colors.
inline RasterImage ramp_fixture() {
  RasterImage img(4, 4, 3);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(40 + 12 * x + 3 * y);
      img.at(x, y, 1) = static_cast<std::uint8_t>(60 + 9 * y + 5 * x);
      img.at(x, y, 2) = static_cast<std::uint8_t>(90 + 7 * x + 11 * y);
    }
  }
  return img;
}

// ---------------------------------------------------------------- polygons

/// Simple star-shaped polygon around (cx, cy): one jittered angle per
/// sector keeps every angular gap below pi, so the center stays in the
/// kernel and the ring cannot self-intersect.
inline Polygon random_star_polygon(std::mt19937_64& rng, int n, double cx, double cy,
                                   double r_min, double r_max) {
  std::uniform_real_distribution<double> jitter(0.25, 0.75);
  std::uniform_real_distribution<double> radius(r_min, r_max);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * (i + jitter(rng)) / n;
    const double r = radius(rng);
    pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return *Polygon::from_points(pts);
}

/// Convex polygon: regular-ish n-gon with jittered angles and fixed radius.
inline Polygon random_convex_polygon(std::mt19937_64& rng, int n, double cx, double cy,
                                     double radius) {
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * (i + 0.5 + jitter(rng)) / n;
    pts.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  return *Polygon::from_points(pts);
}

inline Polygon rect_polygon(double x0, double y0, double x1, double y1) {
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

// ---------------------------------------------------------------- files

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("beachseg-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace beachseg::testing
