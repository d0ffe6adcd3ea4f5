#pragma once

// Segmentation scoring: mask IoU, instance AP/AR with small/large object
// stratification, and panoptic PQ/SQ/RQ.
//
// Instance AP follows the COCO protocol: per class and IoU threshold,
// predictions in descending score order are greedily matched to the unmatched
// truth with the highest IoU at or above the threshold, and the
// interpolated precision is sampled at 101 recall points. Panoptic matching
// pairs segments of equal class with IoU > 0.5, which is necessarily unique.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beachseg/error.hpp"
#include "beachseg/geometry.hpp"
#include "beachseg/panoptic.hpp"

namespace beachseg {

inline double mask_iou(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::DimensionMismatch, "mask sizes differ");
  }
  const auto x = a.bits();
  const auto y = b.bits();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------- instances

struct InstancePrediction {
  std::string image_ref;
  std::string class_label;
  double score = 0;
  BitMask mask;
};

struct InstanceTruth {
  std::string image_ref;
  std::string class_label;
  BitMask mask;
};

/// 0.50, 0.55, ..., 0.95
inline std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

struct InstanceEvalConfig {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  double small_bound = 32.0;  // objects with area < small_bound^2 are small
  double large_bound = 96.0;  // objects with area > large_bound^2 are large
  std::optional<std::size_t> max_detections;  // per image and class
};

struct ClassInstanceScores {
  std::string label;
  std::optional<double> ap, ar, ps, pl;  // absent when the class has no (sized) truths
  std::size_t truths = 0;
  std::size_t predictions = 0;
};

struct InstanceScores {
  double ap = 0, ar = 0;
  std::optional<double> ps, pl;  // absent when no truth falls in the size range
  std::size_t tp = 0, fp = 0, fn = 0;  // at the first IoU threshold
  std::vector<ClassInstanceScores> per_class;
};

enum class AreaRange { All, Small, Large };

namespace detail {

inline bool in_range(std::size_t area, AreaRange range, const InstanceEvalConfig& cfg) {
  const double a = static_cast<double>(area);
  switch (range) {
    case AreaRange::All: return true;
    case AreaRange::Small: return a < cfg.small_bound * cfg.small_bound;
    case AreaRange::Large: return a > cfg.large_bound * cfg.large_bound;
  }
  return true;
}

// Score-descending order with a content-based tie break, so the result does
// not depend on the order predictions were supplied in.
inline bool prediction_before(const InstancePrediction& a, const InstancePrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_ref != b.image_ref) return a.image_ref < b.image_ref;
  return a.mask < b.mask;
}

enum class Outcome { TruePositive, FalsePositive, Ignored };

struct ScoredOutcome {
  const InstancePrediction* pred;
  Outcome outcome;
};

struct ClassImageData {
  std::vector<const InstancePrediction*> preds;  // sorted
  std::vector<const InstanceTruth*> truths;
  std::vector<std::size_t> truth_area;
  std::vector<std::size_t> pred_area;
  std::vector<std::vector<double>> iou;  // [pred][truth]
};

struct ThresholdResult {
  std::optional<double> ap;  // absent when no truth is in range
  std::optional<double> recall;
  std::size_t tp = 0, fp = 0, fn = 0;
};

inline std::vector<double> recall_points() {
  std::vector<double> r;
  for (int i = 0; i <= 100; ++i) r.push_back(i / 100.0);
  return r;
}

/// 101-point interpolated AP from outcomes already in ranked order.
inline double interpolated_ap(std::span<const Outcome> ranked, std::size_t positives) {
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (Outcome o : ranked) {
    if (o == Outcome::Ignored) continue;
    (o == Outcome::TruePositive ? tp : fp)++;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0;
  for (double r : recall_points()) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

inline ThresholdResult evaluate_threshold(const std::map<std::string, ClassImageData>& images,
                                          double threshold, AreaRange range,
                                          const InstanceEvalConfig& cfg) {
  std::vector<ScoredOutcome> outcomes;
  std::size_t positives = 0;
  for (const auto& [image, data] : images) {
    const std::size_t nt = data.truths.size();
    std::vector<bool> ignored(nt);
    std::vector<std::size_t> order;  // in-range truths first
    for (std::size_t g = 0; g < nt; ++g) {
      ignored[g] = !in_range(data.truth_area[g], range, cfg);
      if (!ignored[g]) {
        ++positives;
        order.push_back(g);
      }
    }
    for (std::size_t g = 0; g < nt; ++g) {
      if (ignored[g]) order.push_back(g);
    }
    std::vector<bool> taken(nt, false);
    for (std::size_t p = 0; p < data.preds.size(); ++p) {
      std::optional<std::size_t> best;
      double best_iou = 0;
      for (std::size_t g : order) {
        if (taken[g]) continue;
        // Never trade an in-range match for an out-of-range one.
        if (best && !ignored[*best] && ignored[g]) break;
        const double v = data.iou[p][g];
        if (v < threshold) continue;
        if (!best || v > best_iou) {
          best = g;
          best_iou = v;
        }
      }
      Outcome o;
      if (best) {
        taken[*best] = true;
        o = ignored[*best] ? Outcome::Ignored : Outcome::TruePositive;
      } else {
        o = in_range(data.pred_area[p], range, cfg) ? Outcome::FalsePositive : Outcome::Ignored;
      }
      outcomes.push_back({data.preds[p], o});
    }
  }
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return prediction_before(*a.pred, *b.pred);
                   });
  ThresholdResult result;
  for (const auto& o : outcomes) {
    if (o.outcome == Outcome::TruePositive) ++result.tp;
    if (o.outcome == Outcome::FalsePositive) ++result.fp;
  }
  result.fn = positives - result.tp;
  if (positives == 0) return result;
  std::vector<Outcome> ranked;
  ranked.reserve(outcomes.size());
  for (const auto& o : outcomes) ranked.push_back(o.outcome);
  result.ap = interpolated_ap(ranked, positives);
  result.recall = static_cast<double>(result.tp) / static_cast<double>(positives);
  return result;
}

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

/// `label_set` lists the classes to score; when empty it is taken from the
/// truths. A prediction whose class is outside it raises LabelMismatch.
inline InstanceScores evaluate_instances(std::span<const InstancePrediction> predictions,
                                         std::span<const InstanceTruth> truths,
                                         std::vector<std::string> label_set = {},
                                         const InstanceEvalConfig& cfg = {}) {
  if (cfg.iou_thresholds.empty()) {
    throw Error(ErrorKind::InvalidArgument, "at least one IoU threshold is required");
  }
  if (label_set.empty()) {
    std::set<std::string> labels;
    for (const auto& t : truths) labels.insert(t.class_label);
    label_set.assign(labels.begin(), labels.end());
  }
  const std::set<std::string> known(label_set.begin(), label_set.end());
  for (const auto& p : predictions) {
    if (!known.contains(p.class_label)) {
      throw Error(ErrorKind::LabelMismatch,
                  "prediction class '" + p.class_label + "' is not a truth class");
    }
    if (!(p.score >= 0.0 && p.score <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "prediction score outside [0, 1]");
    }
  }

  InstanceScores scores;
  std::vector<std::optional<double>> class_ap, class_ar, class_ps, class_pl;
  for (const std::string& label : label_set) {
    std::map<std::string, detail::ClassImageData> images;
    ClassInstanceScores cls;
    cls.label = label;
    for (const auto& t : truths) {
      if (t.class_label != label) continue;
      auto& d = images[t.image_ref];
      d.truths.push_back(&t);
      d.truth_area.push_back(t.mask.popcount());
      ++cls.truths;
    }
    for (const auto& p : predictions) {
      if (p.class_label == label) images[p.image_ref].preds.push_back(&p);
    }
    for (auto& [image, d] : images) {
      std::stable_sort(d.preds.begin(), d.preds.end(),
                       [](const InstancePrediction* a, const InstancePrediction* b) {
                         return detail::prediction_before(*a, *b);
                       });
      if (cfg.max_detections && d.preds.size() > *cfg.max_detections) {
        d.preds.resize(*cfg.max_detections);
      }
      cls.predictions += d.preds.size();
      for (const InstancePrediction* p : d.preds) {
        d.pred_area.push_back(p->mask.popcount());
        std::vector<double> row;
        row.reserve(d.truths.size());
        for (const InstanceTruth* t : d.truths) row.push_back(mask_iou(p->mask, t->mask));
        d.iou.push_back(std::move(row));
      }
    }
    std::vector<std::optional<double>> ap_all, ar_all, ap_small, ap_large;
    for (std::size_t k = 0; k < cfg.iou_thresholds.size(); ++k) {
      const double t = cfg.iou_thresholds[k];
      const auto all = detail::evaluate_threshold(images, t, AreaRange::All, cfg);
      ap_all.push_back(all.ap);
      ar_all.push_back(all.recall);
      ap_small.push_back(detail::evaluate_threshold(images, t, AreaRange::Small, cfg).ap);
      ap_large.push_back(detail::evaluate_threshold(images, t, AreaRange::Large, cfg).ap);
      if (k == 0) {
        scores.tp += all.tp;
        scores.fp += all.fp;
        scores.fn += all.fn;
      }
    }
    cls.ap = detail::mean_of(ap_all);
    cls.ar = detail::mean_of(ar_all);
    cls.ps = detail::mean_of(ap_small);
    cls.pl = detail::mean_of(ap_large);
    class_ap.push_back(cls.ap);
    class_ar.push_back(cls.ar);
    class_ps.push_back(cls.ps);
    class_pl.push_back(cls.pl);
    scores.per_class.push_back(std::move(cls));
  }
  scores.ap = detail::mean_of(class_ap).value_or(0.0);
  scores.ar = detail::mean_of(class_ar).value_or(0.0);
  scores.ps = detail::mean_of(class_ps);
  scores.pl = detail::mean_of(class_pl);
  return scores;
}

// ---------------------------------------------------------------- panoptic

struct SegmentMatch {
  std::string image;
  std::uint32_t pred_id = 0;
  std::uint32_t truth_id = 0;
  double iou = 0;
};

struct ClassPanopticScores {
  std::string label;
  double pq = 0, sq = 0, rq = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double iou_sum = 0;
};

/// Pooled over every class and image: PQ = sum IoU / (TP + FP/2 + FN/2).
struct PanopticScores {
  double pq = 0, sq = 0, rq = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double iou_sum = 0;
  std::vector<ClassPanopticScores> per_class;
  std::vector<SegmentMatch> matches;
};

struct PanopticPair {
  std::string image;
  const PanopticMap* pred = nullptr;
  const PanopticMap* truth = nullptr;
};

namespace detail {

inline void finish_quality(double iou_sum, std::size_t tp, std::size_t fp, std::size_t fn,
                           double& pq, double& sq, double& rq) {
  const double denom = static_cast<double>(tp) + 0.5 * static_cast<double>(fp) +
                       0.5 * static_cast<double>(fn);
  sq = tp > 0 ? iou_sum / static_cast<double>(tp) : 0.0;
  rq = denom > 0 ? static_cast<double>(tp) / denom : 0.0;
  pq = denom > 0 ? iou_sum / denom : 0.0;
}

}  // namespace detail

/// Segment pairs (pred, truth) of equal class with IoU > 0.5, in
/// (pred id, truth id) order. Exposed for the matching-uniqueness checks.
inline std::vector<SegmentMatch> match_segments(const PanopticMap& pred, const PanopticMap& truth,
                                                const std::string& image = {}) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw Error(ErrorKind::DimensionMismatch, "panoptic maps differ in size");
  }
  std::map<std::uint32_t, std::uint64_t> pred_area, truth_area;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> overlap;
  const auto p = pred.ids();
  const auto t = truth.ids();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++pred_area[p[i]];
    ++truth_area[t[i]];
    ++overlap[{p[i], t[i]}];
  }
  std::vector<SegmentMatch> matches;
  for (const auto& [key, inter] : overlap) {
    const SegmentInfo* ps = pred.find(key.first);
    const SegmentInfo* ts = truth.find(key.second);
    if (!ps || !ts) {
      throw Error(ErrorKind::InvalidArgument, "pixel segment id missing from segment table");
    }
    if (ps->class_label != ts->class_label) continue;
    const double uni = static_cast<double>(pred_area[key.first] + truth_area[key.second] - inter);
    const double iou = static_cast<double>(inter) / uni;
    if (iou > 0.5) matches.push_back({image, key.first, key.second, iou});
  }
  return matches;
}

inline PanopticScores evaluate_panoptic(std::span<const PanopticPair> pairs) {
  PanopticScores out;
  std::map<std::string, ClassPanopticScores> classes;
  for (const PanopticPair& pair : pairs) {
    const auto matches = match_segments(*pair.pred, *pair.truth, pair.image);
    std::set<std::uint32_t> matched_pred, matched_truth;
    for (const auto& m : matches) {
      matched_pred.insert(m.pred_id);
      matched_truth.insert(m.truth_id);
      auto& c = classes[pair.truth->find(m.truth_id)->class_label];
      ++c.tp;
      c.iou_sum += m.iou;
      out.matches.push_back(m);
    }
    // Segments listed in the table but absent from the pixels do not count.
    std::set<std::uint32_t> pred_present(pair.pred->ids().begin(), pair.pred->ids().end());
    std::set<std::uint32_t> truth_present(pair.truth->ids().begin(), pair.truth->ids().end());
    for (std::uint32_t id : pred_present) {
      if (!matched_pred.contains(id)) ++classes[pair.pred->find(id)->class_label].fp;
    }
    for (std::uint32_t id : truth_present) {
      if (!matched_truth.contains(id)) ++classes[pair.truth->find(id)->class_label].fn;
    }
  }
  for (auto& [label, c] : classes) {
    c.label = label;
    detail::finish_quality(c.iou_sum, c.tp, c.fp, c.fn, c.pq, c.sq, c.rq);
    out.tp += c.tp;
    out.fp += c.fp;
    out.fn += c.fn;
    out.iou_sum += c.iou_sum;
    out.per_class.push_back(c);
  }
  detail::finish_quality(out.iou_sum, out.tp, out.fp, out.fn, out.pq, out.sq, out.rq);
  return out;
}

inline PanopticScores evaluate_panoptic(const PanopticMap& pred, const PanopticMap& truth) {
  const PanopticPair pair{"", &pred, &truth};
  return evaluate_panoptic(std::span<const PanopticPair>(&pair, 1));
}

// ---------------------------------------------------------------- report

struct MetricsReport {
  std::string model = "prediction";
  std::optional<InstanceScores> instance;
  std::optional<PanopticScores> panoptic;
};

namespace detail {

inline nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["model"] = report.model;
  if (report.instance) {
    const auto& s = *report.instance;
    nlohmann::ordered_json inst;
    inst["ap"] = s.ap;
    inst["ar"] = s.ar;
    inst["ps"] = detail::optional_number(s.ps);
    inst["pl"] = detail::optional_number(s.pl);
    inst["matches_at_first_threshold"] = {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
    auto per_class = nlohmann::ordered_json::array();
    for (const auto& c : s.per_class) {
      per_class.push_back({{"label", c.label},
                           {"ap", detail::optional_number(c.ap)},
                           {"ar", detail::optional_number(c.ar)},
                           {"ps", detail::optional_number(c.ps)},
                           {"pl", detail::optional_number(c.pl)},
                           {"truths", c.truths},
                           {"predictions", c.predictions}});
    }
    inst["per_class"] = std::move(per_class);
    doc["instance"] = std::move(inst);
  }
  if (report.panoptic) {
    const auto& s = *report.panoptic;
    nlohmann::ordered_json pan;
    pan["pq"] = s.pq;
    pan["sq"] = s.sq;
    pan["rq"] = s.rq;
    pan["tp"] = s.tp;
    pan["fp"] = s.fp;
    pan["fn"] = s.fn;
    auto per_class = nlohmann::ordered_json::array();
    for (const auto& c : s.per_class) {
      per_class.push_back({{"label", c.label},
                           {"pq", c.pq},
                           {"sq", c.sq},
                           {"rq", c.rq},
                           {"tp", c.tp},
                           {"fp", c.fp},
                           {"fn", c.fn}});
    }
    pan["per_class"] = std::move(per_class);
    doc["panoptic"] = std::move(pan);
  }
  return doc;
}

/// Two aligned blocks in the familiar results-table layout, values in
/// percent: `Model AP PS PL AR` and `Model PQ PS PL RQ`.
inline std::string format_report_table(const MetricsReport& report) {
  auto cell = [](std::optional<double> v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
    return std::string(buf);
  };
  const std::size_t name_w = std::max<std::size_t>(report.model.size(), 5) + 2;
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::vector<std::string>& cells) {
    out << name << std::string(name_w - name.size(), ' ');
    for (const auto& c : cells) out << std::string(c.size() < 8 ? 8 - c.size() : 1, ' ') << c;
    out << '\n';
  };
  std::optional<double> ps, pl;
  if (report.instance) {
    ps = report.instance->ps;
    pl = report.instance->pl;
  }
  if (report.instance) {
    const auto& s = *report.instance;
    row("Model", {"AP", "PS", "PL", "AR"});
    row(report.model, {cell(s.ap), cell(ps), cell(pl), cell(s.ar)});
  }
  if (report.panoptic) {
    const auto& s = *report.panoptic;
    if (report.instance) out << '\n';
    row("Model", {"PQ", "PS", "PL", "RQ", "SQ"});
    row(report.model, {cell(s.pq), cell(ps), cell(pl), cell(s.rq), cell(s.sq)});
  }
  return out.str();
}

}  // namespace beachseg
