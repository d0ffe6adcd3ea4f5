#pragma once

// Brute-force reference implementations used as test oracles. They share
// no code with the library beyond the plain data types.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "beachseg/metrics.hpp"

namespace beachseg::testing {

inline std::size_t count_bits(const BitMask& m) {
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) n += m.get(x, y) ? 1 : 0;
  return n;
}

inline double oracle_iou(const BitMask& a, const BitMask& b) {
  std::size_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      inter += (a.get(x, y) && b.get(x, y)) ? 1 : 0;
      uni += (a.get(x, y) || b.get(x, y)) ? 1 : 0;
    }
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct OracleInstanceResult {
  double ap = 0, ar = 0;
  std::optional<double> ps, pl;  // absent when no truth falls in the stratum
};

// COCO-style evaluation written the long way. Requires distinct scores
// within each class so the ranking is unambiguous. Area ranges: 0 all,
// 1 small (< small^2), 2 large (> large^2).
inline OracleInstanceResult oracle_instances(const std::vector<InstancePrediction>& preds,
                                             const std::vector<InstanceTruth>& truths,
                                             const std::vector<std::string>& labels,
                                             const std::vector<double>& thresholds,
                                             double small = 32, double large = 96) {
  auto in_range = [&](std::size_t area, int range) {
    const double a = static_cast<double>(area);
    if (range == 1) return a < small * small;
    if (range == 2) return a > large * large;
    return true;
  };
  // Returns {ap, recall} for one class, threshold and range; nullopt when no
  // in-range truth exists.
  auto one = [&](const std::string& label, double t,
                 int range) -> std::optional<std::pair<double, double>> {
    std::vector<const InstancePrediction*> ps;
    for (const auto& p : preds)
      if (p.class_label == label) ps.push_back(&p);
    std::sort(ps.begin(), ps.end(), [](auto* a, auto* b) { return a->score > b->score; });
    std::vector<const InstanceTruth*> ts;
    for (const auto& g : truths)
      if (g.class_label == label) ts.push_back(&g);
    std::size_t positives = 0;
    for (auto* g : ts) positives += in_range(count_bits(g->mask), range) ? 1 : 0;
    if (positives == 0) return std::nullopt;
    std::set<const InstanceTruth*> used;
    std::vector<int> outcome;  // 1 tp, 0 fp; ignored predictions are skipped
    for (auto* p : ps) {
      const InstanceTruth* best = nullptr;
      bool best_ignored = true;
      double best_iou = -1;
      for (auto* g : ts) {
        if (g->image_ref != p->image_ref || used.count(g)) continue;
        const double v = oracle_iou(p->mask, g->mask);
        if (v < t) continue;
        const bool ig = !in_range(count_bits(g->mask), range);
        // Prefer in-range truths; then the highest IoU; then the earliest.
        const bool better = !best || (best_ignored && !ig) || (ig == best_ignored && v > best_iou);
        if (better) {
          best = g;
          best_ignored = ig;
          best_iou = v;
        }
      }
      if (best) {
        used.insert(best);
        if (!best_ignored) outcome.push_back(1);
      } else if (in_range(count_bits(p->mask), range)) {
        outcome.push_back(0);
      }
    }
    std::vector<std::size_t> tp_at(outcome.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < outcome.size(); ++k) tp_at[k] = tp += outcome[k];
    double sum = 0;
    for (int i = 0; i <= 100; ++i) {
      double best_p = 0;
      for (std::size_t k = 0; k < outcome.size(); ++k) {
        // recall_k >= i/100, compared exactly in integers
        if (100 * tp_at[k] >= static_cast<std::size_t>(i) * positives) {
          best_p = std::max(best_p, static_cast<double>(tp_at[k]) / static_cast<double>(k + 1));
        }
      }
      sum += best_p;
    }
    return std::make_pair(sum / 101.0, static_cast<double>(tp) / static_cast<double>(positives));
  };
  OracleInstanceResult r;
  for (int range = 0; range < 3; ++range) {
    double class_sum = 0, recall_sum = 0;
    int classes = 0;
    for (const auto& label : labels) {
      double s = 0, rs = 0;
      int n = 0;
      for (double t : thresholds) {
        if (auto v = one(label, t, range)) {
          s += v->first;
          rs += v->second;
          ++n;
        }
      }
      if (n == 0) continue;
      class_sum += s / n;
      recall_sum += rs / n;
      ++classes;
    }
    std::optional<double> mean;
    if (classes) mean = class_sum / classes;
    if (range == 0) {
      r.ap = mean.value_or(0.0);
      r.ar = classes ? recall_sum / classes : 0.0;
    } else {
      (range == 1 ? r.ps : r.pl) = mean;
    }
  }
  return r;
}

struct OracleMatch {
  std::uint32_t pred, truth;
  friend auto operator<=>(const OracleMatch&, const OracleMatch&) = default;
};

// Enumerates every partial one-to-one assignment between predicted and true
// segments of equal class and keeps the one with the most IoU > 0.5 pairs,
// ties broken by larger IoU sum. Only pairs above 0.5 are reported.
inline std::vector<OracleMatch> oracle_optimal_matching(const PanopticMap& pred,
                                                        const PanopticMap& truth) {
  auto segment_mask = [](const PanopticMap& m, std::uint32_t id) {
    BitMask b(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y) == id) b.set(x, y);
    return b;
  };
  std::vector<std::uint32_t> pids, tids;
  for (const auto& s : pred.segments()) pids.push_back(s.id);
  for (const auto& s : truth.segments()) tids.push_back(s.id);
  std::vector<std::vector<double>> iou(pids.size(), std::vector<double>(tids.size(), -1));
  for (std::size_t i = 0; i < pids.size(); ++i) {
    for (std::size_t j = 0; j < tids.size(); ++j) {
      if (pred.find(pids[i])->class_label != truth.find(tids[j])->class_label) continue;
      iou[i][j] = oracle_iou(segment_mask(pred, pids[i]), segment_mask(truth, tids[j]));
    }
  }
  std::vector<OracleMatch> best, current;
  int best_count = -1;
  double best_sum = -1;
  std::vector<bool> truth_used(tids.size(), false);
  std::function<void(std::size_t, int, double)> go = [&](std::size_t i, int count, double sum) {
    if (i == pids.size()) {
      if (count > best_count || (count == best_count && sum > best_sum)) {
        best_count = count;
        best_sum = sum;
        best = current;
      }
      return;
    }
    go(i + 1, count, sum);  // leave prediction i unmatched
    for (std::size_t j = 0; j < tids.size(); ++j) {
      if (truth_used[j] || !(iou[i][j] > 0.5)) continue;
      truth_used[j] = true;
      current.push_back({pids[i], tids[j]});
      go(i + 1, count + 1, sum + iou[i][j]);
      current.pop_back();
      truth_used[j] = false;
    }
  };
  go(0, 0, 0.0);
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace beachseg::testing

// ---------------------------------------------------------------- scenes

namespace beachseg::testing {

struct InstanceScene {
  std::vector<InstanceTruth> truths;
  std::vector<InstancePrediction> preds;
};

inline BitMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BitMask m(w, h);
  for (int y = std::max(0, y0); y < std::min(h, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(w, x1); ++x) m.set(x, y);
  return m;
}

/// Up to 5 truths and 8 predictions over two 24x24 images and two classes.
/// Predictions are jittered copies of truths or random boxes; scores are
/// distinct.
inline InstanceScene random_instance_scene(std::mt19937_64& rng) {
  constexpr int kSide = 24;
  const std::vector<std::string> labels = {"Litter", "Algae"};
  const std::vector<std::string> images = {"img_a", "img_b"};
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  struct Box {
    int x0, y0, x1, y1;
  };
  auto random_box = [&]() {
    const int w = 1 + pick(12), h = 1 + pick(12);
    const int x = pick(kSide - w + 1), y = pick(kSide - h + 1);
    return Box{x, y, x + w, y + h};
  };
  InstanceScene scene;
  std::vector<Box> boxes;
  const int nt = pick(6);
  for (int i = 0; i < nt; ++i) {
    const Box b = random_box();
    boxes.push_back(b);
    scene.truths.push_back({images[pick(2)], labels[pick(2)],
                            rect_mask(kSide, kSide, b.x0, b.y0, b.x1, b.y1)});
  }
  const int np = pick(9);
  std::vector<double> scores;
  while (static_cast<int>(scores.size()) < np) {
    const double s = static_cast<double>(1 + pick(999)) / 1000.0;
    if (std::find(scores.begin(), scores.end(), s) == scores.end()) scores.push_back(s);
  }
  for (int i = 0; i < np; ++i) {
    if (nt > 0 && pick(3) != 0) {
      const int k = pick(nt);
      const Box b = boxes[static_cast<std::size_t>(k)];
      const int dx = pick(5) - 2, dy = pick(5) - 2;
      const auto& t = scene.truths[static_cast<std::size_t>(k)];
      const std::string label = pick(6) == 0 ? labels[pick(2)] : t.class_label;
      scene.preds.push_back({t.image_ref, label, scores[static_cast<std::size_t>(i)],
                             rect_mask(kSide, kSide, b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy)});
    } else {
      const Box b = random_box();
      scene.preds.push_back({images[pick(2)], labels[pick(2)], scores[static_cast<std::size_t>(i)],
                             rect_mask(kSide, kSide, b.x0, b.y0, b.x1, b.y1)});
    }
  }
  return scene;
}

/// Paints boxes in order over background 0 and builds the segment table.
/// Boxes are (x0, y0, x1, y1, class index); class index < 0 means "sand".
inline PanopticMap paint_panoptic(int w, int h, const std::vector<std::array<int, 5>>& boxes,
                                  const std::vector<std::string>& labels) {
  PanopticMap map(w, h);
  auto ids = map.ids();
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& b = boxes[k];
    for (int y = std::max(0, b[1]); y < std::min(h, b[3]); ++y)
      for (int x = std::max(0, b[0]); x < std::min(w, b[2]); ++x)
        ids[static_cast<std::size_t>(y * w + x)] = static_cast<std::uint32_t>(k + 1);
  }
  std::vector<std::uint64_t> area(boxes.size() + 1, 0);
  for (auto id : ids) ++area[id];
  std::vector<SegmentInfo> segs;
  if (area[0]) segs.push_back({0, "sand", false, 0, area[0]});
  std::map<std::string, int> instance;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (!area[k + 1]) continue;
    const int c = boxes[k][4];
    const std::string label = c < 0 ? "sand" : labels[static_cast<std::size_t>(c)];
    segs.push_back({static_cast<std::uint32_t>(k + 1), label, c >= 0,
                    c >= 0 ? ++instance[label] : 0, area[k + 1]});
  }
  map.set_segments(std::move(segs));
  return map;
}

/// Truth/prediction pair with at most 6 segments each (background included).
inline std::pair<PanopticMap, PanopticMap> random_panoptic_fixture(std::mt19937_64& rng) {
  constexpr int kSide = 16;
  const std::vector<std::string> labels = {"Litter", "Algae"};
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  std::vector<std::array<int, 5>> truth, pred;
  const int nt = pick(6);
  for (int i = 0; i < nt; ++i) {
    const int w = 2 + pick(8), h = 2 + pick(8);
    const int x = pick(kSide - w + 1), y = pick(kSide - h + 1);
    truth.push_back({x, y, x + w, y + h, pick(2)});
  }
  for (const auto& b : truth) {
    if (pred.size() >= 5 || pick(4) == 0) continue;
    const int dx = pick(5) - 2, dy = pick(5) - 2;
    pred.push_back({b[0] + dx, b[1] + dy, b[2] + dx, b[3] + dy, pick(8) == 0 ? 1 - b[4] : b[4]});
  }
  while (pred.size() < 5 && pick(3) == 0) {
    const int w = 2 + pick(8), h = 2 + pick(8);
    const int x = pick(kSide - w + 1), y = pick(kSide - h + 1);
    pred.push_back({x, y, x + w, y + h, pick(2)});
  }
  return {paint_panoptic(kSide, kSide, pred, labels), paint_panoptic(kSide, kSide, truth, labels)};
}

}  // namespace beachseg::testing
