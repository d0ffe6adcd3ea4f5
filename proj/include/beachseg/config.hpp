#pragma once

// Pipeline configuration in a flat key=value file. Command-line flags are
// layered on top by the CLI.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "beachseg/dataset.hpp"
#include "beachseg/error.hpp"
#include "beachseg/imaging.hpp"
#include "beachseg/metrics.hpp"
#include "beachseg/text_format.hpp"
#include "beachseg/tiler.hpp"

namespace beachseg {

inline constexpr const char* kConfigEnvVar = "BEACHSEG_CONFIG";

inline unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

struct PipelineConfig {
  std::string input_dir;
  std::string output_dir;
  double clip_percent = kDefaultClipPercent;
  int tile_size = 600;
  TilePolicy tile_policy = TilePolicy::PadToCover;
  SplitFractions split_fractions;
  std::uint64_t seed = 42;
  std::vector<std::string> labels = default_label_set();
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  double small_bound = 32.0;
  double large_bound = 96.0;
  std::size_t max_detections = 0;  // 0: no cap
  unsigned jobs = default_jobs();

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

  void validate() const {
    if (!(clip_percent >= 0.0 && clip_percent < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "clip_percent must lie in [0, 1)");
    }
    if (tile_size < 1) throw Error(ErrorKind::InvalidArgument, "tile_size must be positive");
    validate_fractions(split_fractions);
    if (labels.empty()) throw Error(ErrorKind::InvalidArgument, "label set is empty");
    if (iou_thresholds.empty()) {
      throw Error(ErrorKind::InvalidArgument, "iou_thresholds is empty");
    }
    for (double t : iou_thresholds) {
      if (!(t > 0.0 && t <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "IoU thresholds must lie in (0, 1]");
      }
    }
    if (!(small_bound > 0) || !(large_bound > 0)) {
      throw Error(ErrorKind::InvalidArgument, "size bounds must be positive");
    }
    if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be at least 1");
  }

  InstanceEvalConfig instance_eval() const {
    InstanceEvalConfig cfg;
    cfg.iou_thresholds = iou_thresholds;
    cfg.small_bound = small_bound;
    cfg.large_bound = large_bound;
    if (max_detections > 0) cfg.max_detections = max_detections;
    return cfg;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, key + ": '" + text + "' is not a number");
  }
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || end != text.c_str() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, key + ": '" + text + "' is not a non-negative integer");
  }
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline std::string join(const std::vector<std::string>& items, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::vector<double> parse_number_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : detail::split_list(text)) out.push_back(detail::parse_double(key, item));
  return out;
}

inline SplitFractions parse_fractions(const std::string& text) {
  const auto v = parse_number_list("split_fractions", text);
  if (v.size() != 3) {
    throw Error(ErrorKind::BadFractions, "split_fractions needs three values train,test,val");
  }
  return {v[0], v[1], v[2]};
}

/// Applies one key. Unknown keys are errors so typos do not pass silently.
inline void apply_config_value(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
  using namespace detail;
  if (key == "input_dir") {
    cfg.input_dir = value;
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "clip_percent") {
    cfg.clip_percent = parse_double(key, value);
  } else if (key == "tile_size") {
    cfg.tile_size = static_cast<int>(parse_unsigned(key, value));
  } else if (key == "tile_policy") {
    cfg.tile_policy = parse_tile_policy(value);
  } else if (key == "split_fractions") {
    cfg.split_fractions = parse_fractions(value);
  } else if (key == "seed") {
    cfg.seed = parse_unsigned(key, value);
  } else if (key == "labels") {
    cfg.labels = split_list(value);
  } else if (key == "iou_thresholds") {
    cfg.iou_thresholds = parse_number_list(key, value);
  } else if (key == "small_bound") {
    cfg.small_bound = parse_double(key, value);
  } else if (key == "large_bound") {
    cfg.large_bound = parse_double(key, value);
  } else if (key == "max_detections") {
    cfg.max_detections = parse_unsigned(key, value);
  } else if (key == "jobs") {
    cfg.jobs = static_cast<unsigned>(parse_unsigned(key, value));
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  }
}

inline PipelineConfig parse_config(const std::string& text, PipelineConfig base = {}) {
  for (const auto& [key, value] : parse_key_values(text)) apply_config_value(base, key, value);
  base.validate();
  return base;
}

inline std::string format_config(const PipelineConfig& cfg) {
  using detail::format_double;
  std::vector<std::string> thresholds;
  for (double t : cfg.iou_thresholds) thresholds.push_back(format_double(t));
  std::ostringstream out;
  out << "input_dir=" << cfg.input_dir << '\n'
      << "output_dir=" << cfg.output_dir << '\n'
      << "clip_percent=" << format_double(cfg.clip_percent) << '\n'
      << "tile_size=" << cfg.tile_size << '\n'
      << "tile_policy=" << to_string(cfg.tile_policy) << '\n'
      << "split_fractions=" << format_double(cfg.split_fractions.train) << ','
      << format_double(cfg.split_fractions.test) << ',' << format_double(cfg.split_fractions.val)
      << '\n'
      << "seed=" << cfg.seed << '\n'
      << "labels=" << join(cfg.labels) << '\n'
      << "iou_thresholds=" << join(thresholds) << '\n'
      << "small_bound=" << format_double(cfg.small_bound) << '\n'
      << "large_bound=" << format_double(cfg.large_bound) << '\n'
      << "max_detections=" << cfg.max_detections << '\n'
      << "jobs=" << cfg.jobs << '\n';
  return out.str();
}

}  // namespace beachseg
