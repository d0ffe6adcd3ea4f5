#pragma once

// Histogram-clipping auto contrast/brightness.
//
// A gray histogram is built from the image, both tails are clipped by a
// fraction of the pixel count, and the surviving intensity range
// [minimum_gray, maximum_gray] is stretched linearly onto [0, 255]:
//
//   f = alpha * g + beta,  alpha = 255 / (maximum_gray - minimum_gray),
//                          beta  = -minimum_gray * alpha
//
// One (alpha, beta) pair is fitted per image and applied to every channel.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>

#include "beachseg/error.hpp"
#include "beachseg/raster.hpp"

namespace beachseg {

inline constexpr double kDefaultClipPercent = 0.01;

struct GrayHistogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;

  std::array<std::uint64_t, 256> cumulative() const {
    std::array<std::uint64_t, 256> cum{};
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      running += bins[i];
      cum[i] = running;
    }
    return cum;
  }
};

struct ClipRange {
  int minimum_gray = 0;
  int maximum_gray = 255;

  friend bool operator==(const ClipRange&, const ClipRange&) = default;
};

/// Rec.601 luma with round-half-up, computed in integers so that ties are
/// resolved identically on every platform.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  const std::uint32_t weighted = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>((weighted + 500u) / 1000u);
}

inline GrayHistogram compute_gray_histogram(const RasterImage& image) {
  GrayHistogram hist;
  const auto data = image.data();
  if (image.channels() == 1) {
    for (std::uint8_t v : data) ++hist.bins[v];
  } else {
    for (std::size_t i = 0; i + 2 < data.size(); i += 3) {
      ++hist.bins[luma(data[i], data[i + 1], data[i + 2])];
    }
  }
  hist.total = image.pixel_count();
  return hist;
}

/// Lower bound: smallest intensity whose cumulative count exceeds the lower
/// cut. Upper bound: largest intensity whose count of pixels at or above it
/// exceeds the upper cut. With clip_percent == 0 these are the darkest and
/// brightest intensities present.
inline ClipRange compute_clip_range(const GrayHistogram& hist, double clip_percent) {
  if (!(clip_percent >= 0.0 && clip_percent < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "clip_percent must lie in [0, 1)");
  }
  if (hist.total == 0) {
    throw Error(ErrorKind::InvalidArgument, "histogram is empty");
  }
  const double total = static_cast<double>(hist.total);
  const double tail = clip_percent * total / 2.0;
  const auto cum = hist.cumulative();

  int lo = 255;
  for (int i = 0; i < 256; ++i) {
    if (static_cast<double>(cum[i]) > tail) {
      lo = i;
      break;
    }
  }
  int hi = 0;
  for (int i = 255; i >= 0; --i) {
    const std::uint64_t below = i == 0 ? 0 : cum[i - 1];
    if (static_cast<double>(below) < total - tail) {
      hi = i;
      break;
    }
  }
  if (lo >= hi) {
    throw Error(ErrorKind::DegenerateRange, "clipped intensity range [" + std::to_string(lo) +
                                                ", " + std::to_string(hi) + "] is empty");
  }
  return {lo, hi};
}

/// Linear intensity map fitted from a clip range. The pair (minimum_gray,
/// maximum_gray) determines alpha and beta completely.
class LinearStretch {
 public:
  LinearStretch(int minimum_gray, int maximum_gray)
      : minimum_gray_(minimum_gray), maximum_gray_(maximum_gray) {
    if (minimum_gray < 0 || maximum_gray > 255 || minimum_gray >= maximum_gray) {
      throw Error(ErrorKind::DegenerateRange,
                  "cannot stretch [" + std::to_string(minimum_gray) + ", " +
                      std::to_string(maximum_gray) + "]");
    }
    const double span = static_cast<double>(maximum_gray - minimum_gray);
    alpha_ = 255.0 / span;
    // -minimum_gray * alpha with a single rounding; agrees with the
    // two-step product to within one ulp.
    beta_ = minimum_gray == 0 ? 0.0 : -(255.0 * minimum_gray) / span;
  }

  static LinearStretch identity() { return LinearStretch(0, 255); }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  int minimum_gray() const noexcept { return minimum_gray_; }
  int maximum_gray() const noexcept { return maximum_gray_; }

  /// alpha * g + beta, evaluated as alpha * (g - minimum_gray) so both
  /// endpoints land on 0 and 255 without cancellation error.
  double operator()(double g) const noexcept {
    return alpha_ * (g - static_cast<double>(minimum_gray_));
  }

  /// Clamped, rounded (half away from zero) output for every 8-bit input,
  /// computed exactly as 255 * (g - min) / (max - min) in integers.
  std::array<std::uint8_t, 256> lookup_table() const noexcept {
    std::array<std::uint8_t, 256> lut{};
    const std::int64_t span = maximum_gray_ - minimum_gray_;
    for (int g = 0; g < 256; ++g) {
      const std::int64_t num = 255 * static_cast<std::int64_t>(g - minimum_gray_);
      std::int64_t rounded;
      if (num >= 0) {
        rounded = (2 * num + span) / (2 * span);
      } else {
        rounded = -((-2 * num + span) / (2 * span));
      }
      if (rounded < 0) rounded = 0;
      if (rounded > 255) rounded = 255;
      lut[static_cast<std::size_t>(g)] = static_cast<std::uint8_t>(rounded);
    }
    return lut;
  }

  friend bool operator==(const LinearStretch& a, const LinearStretch& b) noexcept {
    return a.minimum_gray_ == b.minimum_gray_ && a.maximum_gray_ == b.maximum_gray_;
  }

 private:
  int minimum_gray_;
  int maximum_gray_;
  double alpha_;
  double beta_;
};

inline LinearStretch fit_stretch(int minimum_gray, int maximum_gray) {
  return LinearStretch(minimum_gray, maximum_gray);
}

inline RasterImage apply_stretch(const RasterImage& image, const LinearStretch& stretch) {
  const auto lut = stretch.lookup_table();
  RasterImage out(image.width(), image.height(), image.channels());
  const auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

struct EnhanceResult {
  RasterImage image;
  LinearStretch stretch;
};

inline EnhanceResult auto_enhance(const RasterImage& image,
                                  double clip_percent = kDefaultClipPercent) {
  const ClipRange range = compute_clip_range(compute_gray_histogram(image), clip_percent);
  LinearStretch stretch = fit_stretch(range.minimum_gray, range.maximum_gray);
  return {apply_stretch(image, stretch), stretch};
}

// Sidecar audit record: one key=value per line.

inline std::string format_audit_record(const LinearStretch& stretch, double clip_percent) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "alpha=%.17g\nbeta=%.17g\nminimum_gray=%d\nmaximum_gray=%d\nclip_percent=%.17g\n",
                stretch.alpha(), stretch.beta(), stretch.minimum_gray(), stretch.maximum_gray(),
                clip_percent);
  return buf;
}

}  // namespace beachseg
