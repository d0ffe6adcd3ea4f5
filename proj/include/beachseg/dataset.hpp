#pragma once

// Annotation corpus: VGG Image Annotator (VIA) polygon ingest, seeded
// train/test/val split, COCO instance export and panoptic ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beachseg/annotation.hpp"
#include "beachseg/error.hpp"
#include "beachseg/geometry.hpp"
#include "beachseg/panoptic.hpp"
#include "beachseg/text_format.hpp"

namespace beachseg {

using ordered_json = nlohmann::ordered_json;

inline std::vector<std::string> default_label_set() { return {"Litter", "Algae"}; }

struct ImageRecord {
  std::string id;  // file name as referenced by the annotations
  std::string file_path;
  int width = 0;  // 0 until bound to the actual file
  int height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Corpus {
  std::vector<ImageRecord> images;
  std::vector<AnnotatedRegion> regions;
  std::vector<std::string> label_set = default_label_set();

  const ImageRecord* find_image(std::string_view id) const {
    for (const auto& img : images) {
      if (img.id == id) return &img;
    }
    return nullptr;
  }

  std::vector<const AnnotatedRegion*> regions_for(std::string_view image_id) const {
    std::vector<const AnnotatedRegion*> out;
    for (const auto& r : regions) {
      if (r.image_ref == image_id) out.push_back(&r);
    }
    std::sort(out.begin(), out.end(), [](const AnnotatedRegion* a, const AnnotatedRegion* b) {
      return a->region_id < b->region_id;
    });
    return out;
  }

  /// 1-based category id, 0 when the label is not in the set.
  int category_id(std::string_view label) const {
    for (std::size_t i = 0; i < label_set.size(); ++i) {
      if (label_set[i] == label) return static_cast<int>(i) + 1;
    }
    return 0;
  }

  void validate() const {
    std::set<std::string_view> ids;
    for (const auto& img : images) {
      if (!ids.insert(img.id).second) {
        throw Error(ErrorKind::MalformedAnnotation, "duplicate image id '" + img.id + "'");
      }
    }
    std::set<std::uint64_t> region_ids;
    for (const auto& r : regions) {
      if (!ids.contains(r.image_ref)) {
        throw Error(ErrorKind::MalformedAnnotation, "region " + std::to_string(r.region_id) +
                                                        " references unknown image '" +
                                                        r.image_ref + "'");
      }
      if (category_id(r.class_label) == 0) {
        throw Error(ErrorKind::MalformedAnnotation, "region " + std::to_string(r.region_id) +
                                                        " has label '" + r.class_label +
                                                        "' outside the label set");
      }
      if (!region_ids.insert(r.region_id).second) {
        throw Error(ErrorKind::MalformedAnnotation,
                    "duplicate region id " + std::to_string(r.region_id));
      }
    }
  }
};

// ---------------------------------------------------------------- VIA

struct ViaOptions {
  std::vector<std::string> label_set = default_label_set();
  std::string class_attribute = "class";
  std::uint64_t first_region_id = 1;
  std::string source_name = "<via>";  // used in error messages
};

struct ViaParseResult {
  Corpus corpus;
  std::size_t skipped_non_polygon = 0;
  std::size_t dropped_unknown_label = 0;
  std::vector<std::string> unknown_labels;  // sorted, unique
};

namespace detail {

[[noreturn]] inline void bad_annotation(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::MalformedAnnotation, where + ": " + what);
}

inline std::string region_label(const nlohmann::ordered_json& attrs,
                                const std::string& attribute) {
  if (!attrs.is_object() || !attrs.contains(attribute)) return {};
  const auto& v = attrs.at(attribute);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object()) {  // checkbox-style {"Litter": true}
    for (const auto& [key, flag] : v.items()) {
      if (flag.is_boolean() && flag.get<bool>()) return key;
    }
  }
  return {};
}

inline std::vector<double> number_list(const nlohmann::ordered_json& v,
                                       const std::string& where, const char* name) {
  if (!v.is_array()) bad_annotation(where, std::string(name) + " is not an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& n : v) {
    if (!n.is_number()) bad_annotation(where, std::string(name) + " holds a non-number");
    out.push_back(n.get<double>());
  }
  return out;
}

}  // namespace detail

/// Accepts both a bare VIA export (map of image records) and a VIA project
/// file (records under "_via_img_metadata"). Region lists may be arrays or
/// index-keyed objects. Regions are numbered in file order.
inline ViaParseResult parse_via(std::string_view json_text, const ViaOptions& options = {}) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::bad_annotation(options.source_name, std::string("invalid JSON: ") + e.what());
  }
  const ordered_json* records = &doc;
  if (doc.is_object() && doc.contains("_via_img_metadata")) records = &doc["_via_img_metadata"];
  if (!records->is_object()) detail::bad_annotation(options.source_name, "expected an object");

  ViaParseResult result;
  result.corpus.label_set = options.label_set;
  std::set<std::string> unknown;
  std::uint64_t next_id = options.first_region_id;

  for (const auto& [key, record] : records->items()) {
    const std::string where_image = options.source_name + ": image '" + key + "'";
    if (!record.is_object() || !record.contains("filename") || !record["filename"].is_string()) {
      detail::bad_annotation(where_image, "record lacks a filename");
    }
    ImageRecord image;
    image.id = record["filename"].get<std::string>();
    image.file_path = image.id;
    if (record.contains("file_attributes") && record["file_attributes"].is_object()) {
      const auto& fa = record["file_attributes"];
      if (fa.contains("width") && fa["width"].is_number_integer()) image.width = fa["width"];
      if (fa.contains("height") && fa["height"].is_number_integer()) image.height = fa["height"];
    }
    if (result.corpus.find_image(image.id)) {
      detail::bad_annotation(where_image, "duplicate filename '" + image.id + "'");
    }
    result.corpus.images.push_back(image);

    if (!record.contains("regions")) continue;
    const auto& regions = record["regions"];
    if (!regions.is_array() && !regions.is_object()) {
      detail::bad_annotation(where_image, "regions is neither array nor object");
    }
    std::size_t index = 0;
    for (const auto& [rkey, region] : regions.items()) {
      const std::string where =
          options.source_name + ": image '" + image.id + "' region " + std::to_string(index++);
      if (!region.is_object() || !region.contains("shape_attributes")) {
        detail::bad_annotation(where, "region lacks shape_attributes");
      }
      const auto& shape = region["shape_attributes"];
      if (!shape.is_object() || shape.value("name", std::string()) != "polygon") {
        ++result.skipped_non_polygon;
        continue;
      }
      if (!shape.contains("all_points_x") || !shape.contains("all_points_y")) {
        detail::bad_annotation(where, "polygon lacks all_points_x/all_points_y");
      }
      const auto xs = detail::number_list(shape["all_points_x"], where, "all_points_x");
      const auto ys = detail::number_list(shape["all_points_y"], where, "all_points_y");
      if (xs.size() != ys.size()) {
        detail::bad_annotation(where, "all_points_x has " + std::to_string(xs.size()) +
                                          " entries but all_points_y has " +
                                          std::to_string(ys.size()));
      }
      if (xs.size() < 3) detail::bad_annotation(where, "polygon has fewer than 3 points");
      std::vector<Point> points;
      points.reserve(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) points.push_back({xs[i], ys[i]});
      auto polygon = Polygon::from_points(std::move(points));
      if (!polygon) detail::bad_annotation(where, "polygon has fewer than 3 distinct points");

      const std::string label =
          detail::region_label(region.value("region_attributes", ordered_json::object()),
                               options.class_attribute);
      if (std::find(options.label_set.begin(), options.label_set.end(), label) ==
          options.label_set.end()) {
        unknown.insert(label.empty() ? "<missing>" : label);
        ++result.dropped_unknown_label;
        continue;
      }
      result.corpus.regions.push_back({next_id++, image.id, label, std::move(*polygon)});
    }
  }
  result.unknown_labels.assign(unknown.begin(), unknown.end());
  return result;
}

namespace detail {

// Integral coordinates are written as JSON integers, as VIA itself does.
inline ordered_json json_number(double v) {
  if (std::nearbyint(v) == v && std::fabs(v) < 9.0e15) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

}  // namespace detail

/// Writes a VIA export that `parse_via` reads back to the same corpus.
/// Known image sizes travel in file_attributes.
inline ordered_json write_via(const Corpus& corpus, const std::string& class_attribute = "class") {
  ordered_json doc = ordered_json::object();
  for (const ImageRecord& image : corpus.images) {
    ordered_json record;
    record["filename"] = image.id;
    record["size"] = -1;
    auto regions = ordered_json::array();
    for (const AnnotatedRegion* r : corpus.regions_for(image.id)) {
      auto xs = ordered_json::array();
      auto ys = ordered_json::array();
      for (const Point& p : r->polygon.vertices()) {
        xs.push_back(detail::json_number(p.x));
        ys.push_back(detail::json_number(p.y));
      }
      ordered_json shape;
      shape["name"] = "polygon";
      shape["all_points_x"] = std::move(xs);
      shape["all_points_y"] = std::move(ys);
      ordered_json attrs;
      attrs[class_attribute] = r->class_label;
      regions.push_back({{"shape_attributes", std::move(shape)},
                         {"region_attributes", std::move(attrs)}});
    }
    record["regions"] = std::move(regions);
    ordered_json file_attributes = ordered_json::object();
    if (image.width > 0 && image.height > 0) {
      file_attributes["width"] = image.width;
      file_attributes["height"] = image.height;
    }
    record["file_attributes"] = std::move(file_attributes);
    doc[image.id] = std::move(record);
  }
  return doc;
}

// ---------------------------------------------------------------- split

enum class SplitGroup { Train, Test, Val };

inline std::string_view to_string(SplitGroup g) {
  switch (g) {
    case SplitGroup::Train: return "train";
    case SplitGroup::Test: return "test";
    case SplitGroup::Val: return "val";
  }
  return "?";
}

inline SplitGroup parse_split_group(std::string_view s) {
  if (s == "train") return SplitGroup::Train;
  if (s == "test") return SplitGroup::Test;
  if (s == "val") return SplitGroup::Val;
  throw Error(ErrorKind::InvalidArgument, "unknown split group '" + std::string(s) + "'");
}

inline constexpr std::array<SplitGroup, 3> kSplitGroups = {SplitGroup::Train, SplitGroup::Test,
                                                           SplitGroup::Val};

struct SplitFractions {
  double train = 0.55;
  double test = 0.35;
  double val = 0.10;

  std::array<double, 3> as_array() const { return {train, test, val}; }
  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

struct SplitAssignment {
  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::map<std::string, SplitGroup> assignment;

  std::array<std::size_t, 3> group_sizes() const {
    std::array<std::size_t, 3> sizes{};
    for (const auto& [id, g] : assignment) ++sizes[static_cast<std::size_t>(g)];
    return sizes;
  }
  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Hamilton's method: floor every quota, then hand the leftover seats to the
/// largest fractional remainders (ties to the earlier group).
inline std::array<std::size_t, 3> apportion(std::size_t total, const SplitFractions& f) {
  const auto fr = f.as_array();
  std::array<std::size_t, 3> seats{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = fr[i] * static_cast<double>(total);
    // Quotas that are integers up to rounding noise (0.55 * 1500) count as exact.
    const double nearest = std::nearbyint(quota);
    const double q = std::fabs(quota - nearest) <= 1e-9 * std::max(1.0, quota) ? nearest : quota;
    seats[i] = static_cast<std::size_t>(std::floor(q));
    // Snapped so that remainders equal up to rounding tie exactly.
    remainder[i] = std::round((q - std::floor(q)) * 1e9) / 1e9;
    assigned += seats[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++seats[order[k % 3]];
  return seats;
}

namespace detail {

// Unbiased draw in [0, bound) from a 64-bit engine whose output sequence is
// fixed by the standard, so shuffles are identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace detail

inline void validate_fractions(const SplitFractions& f) {
  const auto fr = f.as_array();
  for (double v : fr) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::BadFractions, "split fractions must lie in [0, 1]");
    }
  }
  if (std::fabs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::BadFractions, "split fractions must sum to 1");
  }
}

/// Image ids are sorted, Fisher-Yates shuffled with a seeded mt19937_64 and
/// cut into consecutive train/test/val blocks of apportioned size.
inline SplitAssignment split(const Corpus& corpus, const SplitFractions& fractions,
                             std::uint64_t seed) {
  validate_fractions(fractions);
  if (corpus.images.empty()) throw Error(ErrorKind::InvalidArgument, "corpus has no images");
  std::vector<std::string> ids;
  ids.reserve(corpus.images.size());
  for (const auto& img : corpus.images) ids.push_back(img.id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[detail::uniform_below(rng, i + 1)]);
  }
  const auto sizes = apportion(ids.size(), fractions);
  SplitAssignment out{seed, fractions, {}};
  std::size_t pos = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t k = 0; k < sizes[g]; ++k) out.assignment[ids[pos++]] = kSplitGroups[g];
  }
  return out;
}

inline std::string manifest_csv(const SplitAssignment& split) {
  std::ostringstream out;
  out << "image_id,group\n";
  for (const auto& [id, g] : split.assignment) out << csv_field(id) << ',' << to_string(g) << '\n';
  return out.str();
}

inline std::map<std::string, SplitGroup> parse_manifest_csv(const std::string& text) {
  std::map<std::string, SplitGroup> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw Error(ErrorKind::InvalidArgument, "bad manifest row: " + line);
    out[fields[0]] = parse_split_group(fields[1]);
  }
  return out;
}

// ---------------------------------------------------------------- COCO

struct Bbox {
  double x = 0, y = 0, w = 0, h = 0;
};

inline Bbox polygon_bbox(const Polygon& p) {
  const BoundingBox b = bounding_box(p);
  return {b.min_x, b.min_y, b.max_x - b.min_x, b.max_y - b.min_y};
}

/// COCO image ids are 1-based positions in `corpus.images`, stable across
/// splits. Annotation ids are region ids.
inline ordered_json export_coco_instances(const Corpus& corpus,
                                          const std::map<std::string, SplitGroup>& assignment,
                                          std::optional<SplitGroup> group) {
  ordered_json doc;
  auto images = ordered_json::array();
  std::map<std::string, int> image_ids;
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    const ImageRecord& img = corpus.images[i];
    if (group) {
      auto it = assignment.find(img.id);
      if (it == assignment.end() || it->second != *group) continue;
    }
    const int id = static_cast<int>(i) + 1;
    image_ids[img.id] = id;
    images.push_back({{"id", id},
                      {"file_name", img.id},
                      {"width", img.width},
                      {"height", img.height}});
  }
  auto categories = ordered_json::array();
  for (std::size_t i = 0; i < corpus.label_set.size(); ++i) {
    categories.push_back({{"id", static_cast<int>(i) + 1},
                          {"name", corpus.label_set[i]},
                          {"supercategory", "object"}});
  }
  std::vector<const AnnotatedRegion*> regions;
  for (const auto& r : corpus.regions) {
    if (image_ids.contains(r.image_ref)) regions.push_back(&r);
  }
  std::sort(regions.begin(), regions.end(), [](const AnnotatedRegion* a, const AnnotatedRegion* b) {
    return a->region_id < b->region_id;
  });
  auto annotations = ordered_json::array();
  for (const AnnotatedRegion* r : regions) {
    auto flat = ordered_json::array();
    for (const Point& p : r->polygon.vertices()) {
      flat.push_back(detail::json_number(p.x));
      flat.push_back(detail::json_number(p.y));
    }
    const Bbox box = polygon_bbox(r->polygon);
    annotations.push_back({{"id", r->region_id},
                           {"image_id", image_ids.at(r->image_ref)},
                           {"category_id", corpus.category_id(r->class_label)},
                           {"segmentation", ordered_json::array({std::move(flat)})},
                           {"area", polygon_area(r->polygon)},
                           {"bbox",
                            {detail::json_number(box.x), detail::json_number(box.y),
                             detail::json_number(box.w), detail::json_number(box.h)}},
                           {"iscrowd", 0}});
  }
  doc["images"] = std::move(images);
  doc["categories"] = std::move(categories);
  doc["annotations"] = std::move(annotations);
  return doc;
}

/// One scored instance read back from COCO JSON. Instance files carry no
/// score; their annotations read as score 1.
struct CocoInstance {
  std::uint64_t id = 0;
  int image_id = 0;
  std::string class_label;
  double score = 1.0;
  std::vector<Polygon> polygons;
};

struct CocoDocument {
  Corpus corpus;  // images and categories; regions from the first polygon of each annotation
  std::map<int, std::string> image_names;
  std::vector<CocoInstance> instances;
};

namespace detail {

inline std::vector<Polygon> coco_polygons(const nlohmann::json& seg, const std::string& where) {
  std::vector<Polygon> out;
  if (!seg.is_array()) bad_annotation(where, "segmentation must be a polygon list");
  for (const auto& ring : seg) {
    if (!ring.is_array() || ring.size() % 2 != 0) {
      bad_annotation(where, "polygon must be a flat list of x,y pairs");
    }
    std::vector<Point> points;
    for (std::size_t i = 0; i + 1 < ring.size(); i += 2) {
      if (!ring[i].is_number() || !ring[i + 1].is_number()) {
        bad_annotation(where, "polygon holds a non-number");
      }
      points.push_back({ring[i].get<double>(), ring[i + 1].get<double>()});
    }
    auto polygon = Polygon::from_points(std::move(points));
    if (!polygon) bad_annotation(where, "polygon has fewer than 3 distinct points");
    out.push_back(std::move(*polygon));
  }
  if (out.empty()) bad_annotation(where, "empty segmentation");
  return out;
}

inline std::vector<CocoInstance> coco_instances(const nlohmann::json& list,
                                                const std::map<int, std::string>& categories,
                                                const std::string& source) {
  std::vector<CocoInstance> out;
  std::size_t index = 0;
  for (const auto& a : list) {
    const std::string where = source + ": annotation " + std::to_string(index++);
    try {
      CocoInstance inst;
      inst.id = a.value("id", static_cast<std::uint64_t>(index));
      inst.image_id = a.at("image_id").get<int>();
      const int cat = a.at("category_id").get<int>();
      auto it = categories.find(cat);
      if (it == categories.end()) {
        throw Error(ErrorKind::LabelMismatch,
                    where + ": category_id " + std::to_string(cat) + " is not a known class");
      }
      inst.class_label = it->second;
      inst.score = a.value("score", 1.0);
      if (!(inst.score >= 0.0 && inst.score <= 1.0)) bad_annotation(where, "score outside [0,1]");
      inst.polygons = coco_polygons(a.at("segmentation"), where);
      out.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      bad_annotation(where, e.what());
    }
  }
  return out;
}

}  // namespace detail

inline CocoDocument parse_coco_instances(std::string_view json_text,
                                         const std::string& source = "<coco>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::bad_annotation(source, std::string("invalid JSON: ") + e.what());
  }
  CocoDocument out;
  std::map<int, std::string> categories;
  try {
    std::vector<std::pair<int, std::string>> cats;
    for (const auto& c : doc.at("categories")) {
      cats.emplace_back(c.at("id").get<int>(), c.at("name").get<std::string>());
    }
    std::sort(cats.begin(), cats.end());
    out.corpus.label_set.clear();
    for (const auto& [id, name] : cats) {
      categories[id] = name;
      out.corpus.label_set.push_back(name);
    }
    for (const auto& img : doc.at("images")) {
      ImageRecord rec;
      rec.id = img.at("file_name").get<std::string>();
      rec.file_path = rec.id;
      rec.width = img.value("width", 0);
      rec.height = img.value("height", 0);
      out.image_names[img.at("id").get<int>()] = rec.id;
      out.corpus.images.push_back(rec);
    }
  } catch (const nlohmann::json::exception& e) {
    detail::bad_annotation(source, e.what());
  }
  out.instances = detail::coco_instances(doc.value("annotations", nlohmann::json::array()),
                                         categories, source);
  for (const CocoInstance& inst : out.instances) {
    auto it = out.image_names.find(inst.image_id);
    if (it == out.image_names.end()) {
      detail::bad_annotation(source, "annotation " + std::to_string(inst.id) +
                                         " references unknown image_id " +
                                         std::to_string(inst.image_id));
    }
    out.corpus.regions.push_back({inst.id, it->second, inst.class_label, inst.polygons.front()});
  }
  return out;
}

/// COCO results list (`[{image_id, category_id, segmentation, score}, ...]`)
/// or a full instance document, resolved against the truth's categories.
inline std::vector<CocoInstance> parse_coco_results(std::string_view json_text,
                                                    const std::vector<std::string>& label_set,
                                                    const std::string& source = "<results>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::bad_annotation(source, std::string("invalid JSON: ") + e.what());
  }
  std::map<int, std::string> categories;
  for (std::size_t i = 0; i < label_set.size(); ++i) {
    categories[static_cast<int>(i) + 1] = label_set[i];
  }
  if (doc.is_object()) {
    if (!doc.contains("annotations")) detail::bad_annotation(source, "no annotations list");
    return detail::coco_instances(doc["annotations"], categories, source);
  }
  if (!doc.is_array()) detail::bad_annotation(source, "expected a results list");
  return detail::coco_instances(doc, categories, source);
}

// ---------------------------------------------------------------- panoptic

/// Paints the image's regions in region-id order (later regions win on
/// overlap) over the background class 0. Segment ids are 1-based region
/// ordinals within the image; segments left with no pixels are omitted.
inline PanopticMap export_panoptic_truth(const Corpus& corpus, std::string_view image_id) {
  const ImageRecord* image = corpus.find_image(image_id);
  if (!image) {
    throw Error(ErrorKind::InvalidArgument, "unknown image '" + std::string(image_id) + "'");
  }
  if (image->width < 1 || image->height < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "image '" + image->id + "' has no known size; bind it before export");
  }
  PanopticMap map(image->width, image->height);
  const PixelRect frame{0, 0, image->width, image->height};
  const auto regions = corpus.regions_for(image_id);
  if (regions.size() > kMaxSegmentId) {
    throw Error(ErrorKind::InvalidArgument, "too many regions for 24-bit segment ids");
  }
  auto ids = map.ids();
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const auto segment = static_cast<std::uint32_t>(k + 1);
    scan_polygon(regions[k]->polygon, frame, [&](int row, int c0, int c1) {
      const std::size_t base = static_cast<std::size_t>(row) * static_cast<std::size_t>(frame.width);
      std::fill(ids.begin() + static_cast<std::ptrdiff_t>(base + c0),
                ids.begin() + static_cast<std::ptrdiff_t>(base + c1), segment);
    });
  }
  std::vector<std::uint64_t> area(regions.size() + 1, 0);
  for (std::uint32_t id : ids) ++area[id];

  std::vector<SegmentInfo> segments;
  if (area[0] > 0) segments.push_back({kBackgroundSegment, kBackgroundLabel, false, 0, area[0]});
  std::map<std::string, int> instance_counter;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (area[k + 1] == 0) continue;
    const std::string& label = regions[k]->class_label;
    segments.push_back({static_cast<std::uint32_t>(k + 1), label, true, ++instance_counter[label],
                        area[k + 1]});
  }
  map.set_segments(std::move(segments));
  return map;
}

}  // namespace beachseg
