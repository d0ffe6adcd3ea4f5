#pragma once

// Per-pixel (class, instance) labeling, stored on disk as an RGB PNG whose
// pixel value R + 256*G + 256^2*B is the segment id, plus a JSON sidecar
// describing each segment.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beachseg/error.hpp"
#include "beachseg/raster.hpp"

namespace beachseg {

inline constexpr std::uint32_t kBackgroundSegment = 0;
inline constexpr const char* kBackgroundLabel = "sand";
inline constexpr std::uint32_t kMaxSegmentId = (1u << 24) - 1;

struct SegmentInfo {
  std::uint32_t id = 0;
  std::string class_label;
  bool is_thing = false;
  int instance = 0;  // 1-based within its class for things, 0 for stuff
  std::uint64_t area = 0;

  friend bool operator==(const SegmentInfo&, const SegmentInfo&) = default;
};

class PanopticMap {
 public:
  PanopticMap(int width, int height)
      : width_(width), height_(height),
        ids_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), kBackgroundSegment) {
    if (width < 1 || height < 1) {
      throw Error(ErrorKind::InvalidArgument, "panoptic map dimensions must be positive");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint32_t> ids() const noexcept { return ids_; }
  std::span<std::uint32_t> ids() noexcept { return ids_; }
  std::uint32_t at(int x, int y) const {
    return ids_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)];
  }

  const std::vector<SegmentInfo>& segments() const noexcept { return segments_; }

  void set_segments(std::vector<SegmentInfo> segments) {
    std::sort(segments.begin(), segments.end(),
              [](const SegmentInfo& a, const SegmentInfo& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < segments.size(); ++i) {
      if (segments[i].id == segments[i - 1].id) {
        throw Error(ErrorKind::InvalidArgument,
                    "duplicate segment id " + std::to_string(segments[i].id));
      }
    }
    segments_ = std::move(segments);
  }

  const SegmentInfo* find(std::uint32_t id) const {
    auto it = std::lower_bound(segments_.begin(), segments_.end(), id,
                               [](const SegmentInfo& s, std::uint32_t v) { return s.id < v; });
    return it != segments_.end() && it->id == id ? &*it : nullptr;
  }

  /// Every pixel's id must appear in the segment table; recomputes areas.
  void validate_and_count() {
    for (auto& s : segments_) s.area = 0;
    for (std::uint32_t id : ids_) {
      auto it = std::lower_bound(segments_.begin(), segments_.end(), id,
                                 [](const SegmentInfo& s, std::uint32_t v) { return s.id < v; });
      if (it == segments_.end() || it->id != id) {
        throw Error(ErrorKind::InvalidArgument,
                    "pixel segment id " + std::to_string(id) + " missing from segment table");
      }
      ++it->area;
    }
  }

  friend bool operator==(const PanopticMap&, const PanopticMap&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint32_t> ids_;
  std::vector<SegmentInfo> segments_;
};

inline void encode_segment_id(std::uint32_t id, std::uint8_t& r, std::uint8_t& g,
                              std::uint8_t& b) {
  r = static_cast<std::uint8_t>(id & 0xFF);
  g = static_cast<std::uint8_t>((id >> 8) & 0xFF);
  b = static_cast<std::uint8_t>((id >> 16) & 0xFF);
}

inline std::uint32_t decode_segment_id(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint32_t>(r) + 256u * g + 65536u * b;
}

inline RasterImage panoptic_to_rgb(const PanopticMap& map) {
  RasterImage out(map.width(), map.height(), 3);
  auto data = out.data();
  const auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] > kMaxSegmentId) {
      throw Error(ErrorKind::InvalidArgument, "segment id does not fit in 24 bits");
    }
    encode_segment_id(ids[i], data[3 * i], data[3 * i + 1], data[3 * i + 2]);
  }
  return out;
}

inline nlohmann::ordered_json panoptic_sidecar(const PanopticMap& map,
                                               const std::string& file_name) {
  nlohmann::ordered_json doc;
  doc["file_name"] = file_name;
  doc["width"] = map.width();
  doc["height"] = map.height();
  auto segments = nlohmann::ordered_json::array();
  for (const SegmentInfo& s : map.segments()) {
    segments.push_back({{"id", s.id},
                        {"category", s.class_label},
                        {"isthing", s.is_thing},
                        {"instance", s.instance},
                        {"area", s.area}});
  }
  doc["segments"] = std::move(segments);
  return doc;
}

inline PanopticMap panoptic_from_rgb(const RasterImage& rgb, const nlohmann::json& sidecar) {
  if (rgb.channels() != 3) {
    throw Error(ErrorKind::InvalidArgument, "panoptic PNG must be RGB");
  }
  PanopticMap map(rgb.width(), rgb.height());
  try {
    if (sidecar.contains("width") &&
        (sidecar.at("width").get<int>() != rgb.width() ||
         sidecar.at("height").get<int>() != rgb.height())) {
      throw Error(ErrorKind::DimensionMismatch, "sidecar size differs from PNG size");
    }
    std::vector<SegmentInfo> segments;
    for (const auto& s : sidecar.at("segments")) {
      SegmentInfo info;
      info.id = s.at("id").get<std::uint32_t>();
      info.class_label = s.at("category").get<std::string>();
      info.is_thing = s.value("isthing", false);
      info.instance = s.value("instance", 0);
      segments.push_back(std::move(info));
    }
    map.set_segments(std::move(segments));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedAnnotation, std::string("panoptic sidecar: ") + e.what());
  }
  const auto data = rgb.data();
  auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = decode_segment_id(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
  }
  map.validate_and_count();
  return map;
}

}  // namespace beachseg
