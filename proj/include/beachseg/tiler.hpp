#pragma once

// Fixed-size tiling of large frames and remapping of annotations into
// tile-local coordinates.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "beachseg/annotation.hpp"
#include "beachseg/error.hpp"
#include "beachseg/geometry.hpp"
#include "beachseg/raster.hpp"
#include "beachseg/text_format.hpp"

namespace beachseg {

enum class TilePolicy {
  DropPartial,    // only tiles fully inside the frame
  PadToCover,     // cover the frame; edge tiles extend past it and are zero-filled
  OverlapToCover  // cover the frame; last row/column shifted inward to stay inside
};

inline std::string_view to_string(TilePolicy policy) {
  switch (policy) {
    case TilePolicy::DropPartial: return "drop-partial";
    case TilePolicy::PadToCover: return "pad-to-cover";
    case TilePolicy::OverlapToCover: return "overlap-to-cover";
  }
  return "?";
}

inline TilePolicy parse_tile_policy(std::string_view text) {
  if (text == "drop-partial" || text == "drop") return TilePolicy::DropPartial;
  if (text == "pad-to-cover" || text == "pad") return TilePolicy::PadToCover;
  if (text == "overlap-to-cover" || text == "overlap") return TilePolicy::OverlapToCover;
  throw Error(ErrorKind::InvalidArgument, "unknown tile policy '" + std::string(text) + "'");
}

struct Tile {
  int row = 0;
  int col = 0;
  PixelRect rect;

  friend bool operator==(const Tile&, const Tile&) = default;
};

struct TilePlan {
  int source_width = 0;
  int source_height = 0;
  int tile_size = 0;
  TilePolicy policy = TilePolicy::PadToCover;
  std::vector<Tile> tiles;  // row-major
  int rows = 0;
  int cols = 0;

  friend bool operator==(const TilePlan&, const TilePlan&) = default;
};

namespace detail {

// Tile origins along one axis of length `extent`.
inline std::vector<int> tile_origins(int extent, int tile_size, TilePolicy policy) {
  std::vector<int> origins;
  switch (policy) {
    case TilePolicy::DropPartial:
      for (int x = 0; x + tile_size <= extent; x += tile_size) origins.push_back(x);
      break;
    case TilePolicy::PadToCover:
      for (int x = 0; x < extent; x += tile_size) origins.push_back(x);
      break;
    case TilePolicy::OverlapToCover:
      for (int x = 0; x < extent; x += tile_size) {
        origins.push_back(std::min(x, extent - tile_size));
      }
      break;
  }
  return origins;
}

}  // namespace detail

inline TilePlan plan_tiles(int width, int height, int tile_size,
                           TilePolicy policy = TilePolicy::PadToCover) {
  if (width < 1 || height < 1 || tile_size < 1) {
    throw Error(ErrorKind::InvalidArgument, "frame and tile sizes must be positive");
  }
  if (policy != TilePolicy::PadToCover && (tile_size > width || tile_size > height)) {
    throw Error(ErrorKind::InvalidTileSize,
                "tile size " + std::to_string(tile_size) + " does not fit inside " +
                    std::to_string(width) + "x" + std::to_string(height) + " under " +
                    std::string(to_string(policy)));
  }
  TilePlan plan{width, height, tile_size, policy, {}, 0, 0};
  const auto xs = detail::tile_origins(width, tile_size, policy);
  const auto ys = detail::tile_origins(height, tile_size, policy);
  plan.rows = static_cast<int>(ys.size());
  plan.cols = static_cast<int>(xs.size());
  plan.tiles.reserve(xs.size() * ys.size());
  for (int r = 0; r < plan.rows; ++r) {
    for (int c = 0; c < plan.cols; ++c) {
      plan.tiles.push_back({r, c, PixelRect{xs[c], ys[r], tile_size, tile_size}});
    }
  }
  return plan;
}

/// Copies `rect` out of `image`; pixels beyond the frame are zero. The rect
/// must start inside the frame.
inline RasterImage extract_tile(const RasterImage& image, const PixelRect& rect) {
  if (rect.width < 1 || rect.height < 1 || rect.x0 < 0 || rect.y0 < 0 ||
      rect.x0 >= image.width() || rect.y0 >= image.height()) {
    throw Error(ErrorKind::RectMismatch, "tile rect does not start inside the " +
                                             std::to_string(image.width()) + "x" +
                                             std::to_string(image.height()) + " frame");
  }
  RasterImage tile(rect.width, rect.height, image.channels());
  const int copy_w = std::min(rect.width, image.width() - rect.x0);
  const int copy_h = std::min(rect.height, image.height() - rect.y0);
  const std::size_t ch = static_cast<std::size_t>(image.channels());
  for (int y = 0; y < copy_h; ++y) {
    const auto src = image.row(rect.y0 + y).subspan(static_cast<std::size_t>(rect.x0) * ch,
                                                    static_cast<std::size_t>(copy_w) * ch);
    std::copy(src.begin(), src.end(), tile.row(y).begin());
  }
  return tile;
}

/// Plan-checked extraction: the image must be the frame the plan was built
/// for, and non-padding policies never read past the frame.
inline RasterImage extract_tile(const RasterImage& image, const TilePlan& plan,
                                const Tile& tile) {
  if (image.width() != plan.source_width || image.height() != plan.source_height) {
    throw Error(ErrorKind::RectMismatch, "image size differs from the tile plan's source");
  }
  if (plan.policy != TilePolicy::PadToCover &&
      (tile.rect.x1() > image.width() || tile.rect.y1() > image.height())) {
    throw Error(ErrorKind::RectMismatch, "tile extends past the frame under " +
                                             std::string(to_string(plan.policy)));
  }
  return extract_tile(image, tile.rect);
}

/// A clipped child of a source region, in tile-local coordinates.
struct TileAnnotation {
  std::uint64_t parent_region_id = 0;
  std::string class_label;
  Polygon polygon;

  friend bool operator==(const TileAnnotation&, const TileAnnotation&) = default;
};

/// Result is indexed like `plan.tiles`. Pass min_area = 0 to keep slivers.
inline std::vector<std::vector<TileAnnotation>> remap_annotations(
    std::span<const AnnotatedRegion> regions, const TilePlan& plan,
    double min_area = kSliverArea) {
  std::vector<std::vector<TileAnnotation>> per_tile(plan.tiles.size());
  for (const AnnotatedRegion& region : regions) {
    const BoundingBox box = bounding_box(region.polygon);
    for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
      const PixelRect& r = plan.tiles[t].rect;
      if (box.max_x <= r.x0 || box.min_x >= r.x1() || box.max_y <= r.y0 ||
          box.min_y >= r.y1()) {
        continue;
      }
      auto clipped = clip_to_rect(region.polygon, r, min_area);
      if (!clipped) continue;
      per_tile[t].push_back({region.region_id, region.class_label,
                             translate(*clipped, -r.x0, -r.y0)});
    }
  }
  return per_tile;
}

/// `<stem>_r<row>_c<col>.png`
inline std::string tile_file_name(std::string_view stem, const Tile& tile) {
  return std::string(stem) + "_r" + std::to_string(tile.row) + "_c" + std::to_string(tile.col) +
         ".png";
}

struct LineageRow {
  std::string tile_file;
  std::string source_file;
  Tile tile;
  int tile_size = 0;
  TilePolicy policy = TilePolicy::PadToCover;
};

inline std::string lineage_csv(std::span<const LineageRow> rows) {
  std::ostringstream out;
  out << "tile_file,source_file,row,col,x0,y0,tile_size,policy\n";
  for (const LineageRow& r : rows) {
    out << csv_field(r.tile_file) << ',' << csv_field(r.source_file) << ',' << r.tile.row << ','
        << r.tile.col << ',' << r.tile.rect.x0 << ',' << r.tile.rect.y0 << ',' << r.tile_size << ','
        << to_string(r.policy) << '\n';
  }
  return out.str();
}

}  // namespace beachseg
