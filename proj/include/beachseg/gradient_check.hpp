#pragma once

// Central finite-difference verification of the analytic loss gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "beachseg/losses.hpp"

namespace beachseg {

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;

/// ||analytic - numeric|| / max(||analytic|| + ||numeric||, tiny)
inline double gradient_relative_error(std::span<const double> analytic,
                                      std::span<const double> numeric) {
  double diff = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    a += analytic[i] * analytic[i];
    b += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(a) + std::sqrt(b);
  return denom < 1e-300 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

inline std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double step = kFiniteDifferenceStep) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

struct GradientCheckRow {
  std::string loss;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst_relative_error = 0;

  bool passed() const { return failures == 0; }
};

/// Random instances per loss; each analytic gradient is compared with
/// central differences.
inline std::vector<GradientCheckRow> run_gradient_checks(std::size_t instances,
                                                         std::uint64_t seed = 2023,
                                                         double step = kFiniteDifferenceStep,
                                                         double tolerance = kGradientTolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logit(-3.0, 3.0);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::uniform_int_distribution<int> small(2, 8);

  std::vector<GradientCheckRow> rows = {{"softmax_cross_entropy"},
                                        {"smooth_l1"},
                                        {"mask_bce"},
                                        {"semantic_ce"}};
  auto record = [&](GradientCheckRow& row, std::span<const double> analytic,
                    std::span<const double> numeric) {
    const double err = gradient_relative_error(analytic, numeric);
    ++row.instances;
    row.worst_relative_error = std::max(row.worst_relative_error, err);
    if (!(err < tolerance)) ++row.failures;
  };

  for (std::size_t it = 0; it < instances; ++it) {
    {
      const int k = small(rng);
      std::vector<double> x(static_cast<std::size_t>(k));
      for (auto& v : x) v = logit(rng);
      const int label = std::uniform_int_distribution<int>(0, k - 1)(rng);
      const auto f = [&](std::span<const double> z) { return softmax_cross_entropy(z, label).value; };
      record(rows[0], softmax_cross_entropy(x, label).gradient, central_difference(f, x, step));
    }
    {
      const int n = small(rng);
      std::vector<double> pred(static_cast<std::size_t>(n)), target(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < pred.size(); ++i) {
        // Keep every residual clear of the |d| = 1 kink by more than the step.
        do {
          pred[i] = logit(rng);
          target[i] = logit(rng);
        } while (std::fabs(std::fabs(pred[i] - target[i]) - 1.0) < 1e-3);
      }
      const auto f = [&](std::span<const double> z) { return smooth_l1(z, target).value; };
      record(rows[1], smooth_l1(pred, target).gradient, central_difference(f, pred, step));
    }
    {
      const int w = small(rng), h = small(rng);
      BitMask truth(w, h);
      std::vector<double> p(static_cast<std::size_t>(w * h));
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = prob(rng);
        truth.bits()[i] = static_cast<std::uint8_t>(rng() & 1u);
      }
      const auto f = [&](std::span<const double> z) { return mask_bce(z, truth).value; };
      record(rows[2], mask_bce(p, truth).gradient, central_difference(f, p, step));
    }
    {
      const std::size_t classes = static_cast<std::size_t>(small(rng)) / 2 + 1;
      const std::size_t pixels = static_cast<std::size_t>(small(rng) * small(rng));
      std::vector<int> truth(pixels);
      for (auto& t : truth) {
        t = (rng() % 10 == 0) ? kIgnoreLabel
                              : static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
      }
      truth[0] = 0;  // never all ignored
      std::vector<double> x(pixels * classes);
      for (auto& v : x) v = logit(rng);
      const auto f = [&](std::span<const double> z) { return semantic_ce(z, truth, classes).value; };
      record(rows[3], semantic_ce(x, truth, classes).gradient, central_difference(f, x, step));
    }
  }
  return rows;
}

}  // namespace beachseg
