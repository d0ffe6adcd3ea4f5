#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beachseg/error.hpp"

namespace beachseg {

/// Owned 8-bit pixel grid, row-major, channels interleaved. Holds either a
/// single gray channel or RGB.
class RasterImage {
 public:
  RasterImage(int width, int height, int channels)
      : RasterImage(width, height, channels,
                    std::vector<std::uint8_t>(checked_size(width, height, channels), 0)) {}

  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height, channels)) {
      throw Error(ErrorKind::InvalidArgument,
                  "raster data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(width) + "x" + std::to_string(height) + "x" +
                      std::to_string(channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(data_).subspan(index(0, y, 0), row_stride());
  }
  std::span<std::uint8_t> row(int y) {
    return std::span<std::uint8_t>(data_).subspan(index(0, y, 0), row_stride());
  }

  std::size_t row_stride() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(channels_);
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  static std::size_t checked_size(int width, int height, int channels) {
    if (width < 1 || height < 1) {
      throw Error(ErrorKind::InvalidArgument, "raster dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
      throw Error(ErrorKind::InvalidArgument,
                  "raster must have 1 or 3 channels, got " + std::to_string(channels));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(channels);
  }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_;
  int height_;
  int channels_;
  std::vector<std::uint8_t> data_;
};

}  // namespace beachseg
