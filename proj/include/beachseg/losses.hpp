#pragma once

// Training-loss terms with analytic gradients:
//
//   L = lambda1 * (Lc + Lb + Lm) + lambda_s * Ls
//
// Lc softmax cross-entropy (classification), Lb smooth-L1 (box regression),
// Lm per-pixel binary cross-entropy (mask), Ls per-pixel softmax
// cross-entropy (semantic). All reductions are means.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beachseg/error.hpp"
#include "beachseg/geometry.hpp"

namespace beachseg {

struct LossValue {
  double value = 0;
  std::vector<double> gradient;
};

inline constexpr int kIgnoreLabel = 255;
inline constexpr double kMaskEpsilon = 1e-7;

namespace detail {

// log(sum(exp(x))) with the max subtracted first.
inline double log_sum_exp(std::span<const double> logits, double& max_out) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0;
  for (double v : logits) sum += std::exp(v - m);
  max_out = m;
  return m + std::log(sum);
}

}  // namespace detail

/// -log softmax(logits)[label]; gradient softmax - onehot.
inline LossValue softmax_cross_entropy(std::span<const double> logits, int label) {
  if (logits.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two classes");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " outside [0, " +
                                                std::to_string(logits.size()) + ")");
  }
  double m;
  const double lse = detail::log_sum_exp(logits, m);
  LossValue out;
  out.value = lse - logits[static_cast<std::size_t>(label)];
  out.gradient.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.gradient[k] = std::exp(logits[k] - lse);
  }
  out.gradient[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

/// Mean over coordinates of 0.5 d^2 (|d| < 1) or |d| - 0.5, d = pred - target.
inline LossValue smooth_l1(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction and target lengths differ");
  }
  if (pred.empty()) throw Error(ErrorKind::InvalidArgument, "empty regression vector");
  const double n = static_cast<double>(pred.size());
  LossValue out;
  out.gradient.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    if (std::fabs(d) < 1.0) {
      out.value += 0.5 * d * d;
      out.gradient[i] = d / n;
    } else {
      out.value += std::fabs(d) - 0.5;
      out.gradient[i] = (d > 0 ? 1.0 : -1.0) / n;
    }
  }
  out.value /= n;
  return out;
}

/// Mean binary cross-entropy of per-pixel probabilities against a mask.
/// Probabilities are clamped to [eps, 1 - eps]; the gradient is zero where
/// the clamp is active.
inline LossValue mask_bce(std::span<const double> probs, const BitMask& truth) {
  if (probs.size() != truth.bits().size()) {
    throw Error(ErrorKind::DimensionMismatch, "probability map and mask sizes differ");
  }
  if (probs.empty()) throw Error(ErrorKind::InvalidArgument, "empty mask");
  const auto bits = truth.bits();
  const double n = static_cast<double>(probs.size());
  LossValue out;
  out.gradient.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kMaskEpsilon, 1.0 - kMaskEpsilon);
    const bool clamped = p != probs[i];
    if (bits[i]) {
      out.value -= std::log(p);
      out.gradient[i] = clamped ? 0.0 : -1.0 / (p * n);
    } else {
      out.value -= std::log1p(-p);
      out.gradient[i] = clamped ? 0.0 : 1.0 / ((1.0 - p) * n);
    }
  }
  out.value /= n;
  return out;
}

/// `logits` holds one row of `num_classes` values per pixel. Pixels labeled
/// kIgnoreLabel contribute neither loss nor gradient.
inline LossValue semantic_ce(std::span<const double> logits, std::span<const int> truth,
                             std::size_t num_classes) {
  if (num_classes < 2) throw Error(ErrorKind::InvalidArgument, "need at least two classes");
  if (logits.size() != truth.size() * num_classes) {
    throw Error(ErrorKind::DimensionMismatch, "logit and label maps differ in size");
  }
  std::size_t counted = 0;
  for (int t : truth) {
    if (t == kIgnoreLabel) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes) {
      throw Error(ErrorKind::LabelOutOfRange, "pixel label " + std::to_string(t));
    }
    ++counted;
  }
  if (counted == 0) throw Error(ErrorKind::EmptyAfterIgnore, "every pixel is ignored");
  const double n = static_cast<double>(counted);
  LossValue out;
  out.gradient.assign(logits.size(), 0.0);
  for (std::size_t px = 0; px < truth.size(); ++px) {
    if (truth[px] == kIgnoreLabel) continue;
    const auto row = logits.subspan(px * num_classes, num_classes);
    double m;
    const double lse = detail::log_sum_exp(row, m);
    out.value += lse - row[static_cast<std::size_t>(truth[px])];
    for (std::size_t k = 0; k < num_classes; ++k) {
      out.gradient[px * num_classes + k] = std::exp(row[k] - lse) / n;
    }
    out.gradient[px * num_classes + static_cast<std::size_t>(truth[px])] -= 1.0 / n;
  }
  out.value /= n;
  return out;
}

struct LossWeights {
  double lambda1 = 1.0;   // instance terms
  double lambda_s = 1.0;  // semantic term

  static LossWeights instance_stage() { return {1.0, 0.0}; }
  static LossWeights semantic_stage() { return {0.0, 1.0}; }
};

struct LossBreakdown {
  double lc = 0, lb = 0, lm = 0, ls = 0;
  double total = 0;
};

inline LossBreakdown total_loss(double lc, double lb, double lm, double ls,
                                const LossWeights& weights = {}) {
  if (lc < 0 || lb < 0 || lm < 0 || ls < 0 || std::isnan(lc + lb + lm + ls)) {
    throw Error(ErrorKind::NegativeComponent, "loss components must be non-negative");
  }
  if (!(weights.lambda1 >= 0) || !(weights.lambda_s >= 0)) {
    throw Error(ErrorKind::InvalidArgument, "loss weights must be non-negative");
  }
  return {lc, lb, lm, ls, weights.lambda1 * (lc + lb + lm) + weights.lambda_s * ls};
}

}  // namespace beachseg
