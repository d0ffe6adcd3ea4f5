#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beachseg/gradient_check.hpp"
#include "beachseg/losses.hpp"

using namespace beachseg;

namespace {

// Unstabilized long-double reference, valid for moderate logits.
long double naive_ce(const std::vector<double>& z, int label) {
  long double sum = 0;
  for (double v : z) sum += std::exp(static_cast<long double>(v));
  return std::log(sum) - z[static_cast<std::size_t>(label)];
}

}  // namespace

TEST(SoftmaxCe, UniformLogitsGiveLnK) {
  for (int k = 2; k <= 50; ++k) {
    for (double c : {0.0, -3.5, 17.25, 1e4}) {
      const std::vector<double> z(static_cast<std::size_t>(k), c);
      EXPECT_NEAR(softmax_cross_entropy(z, k / 2).value, std::log(static_cast<double>(k)), 1e-12);
    }
  }
  EXPECT_NEAR(softmax_cross_entropy(std::vector<double>(4, 0.0), 0).value, 1.386294, 1e-6);
}

TEST(SoftmaxCe, StableForHugeLogits) {
  const std::vector<double> z = {1000.0, 0.0};
  const auto l = softmax_cross_entropy(z, 0);
  EXPECT_NEAR(l.value, 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(z, 1).value));
  EXPECT_NEAR(softmax_cross_entropy(z, 1).value, 1000.0, 1e-9);
  const std::vector<double> big = {1e6, -1e6, 3.0};
  for (int label = 0; label < 3; ++label) {
    const auto v = softmax_cross_entropy(big, label);
    EXPECT_TRUE(std::isfinite(v.value));
    for (double g : v.gradient) EXPECT_TRUE(std::isfinite(g));
  }
}

TEST(SoftmaxCe, MatchesNaiveReferenceAndGradientSumsToZero) {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> z(5);
    for (auto& v : z) v = d(rng);
    const int label = static_cast<int>(rng() % 5);
    const auto l = softmax_cross_entropy(z, label);
    EXPECT_NEAR(l.value, static_cast<double>(naive_ce(z, label)), 1e-12);
    EXPECT_GE(l.value, 0.0);
    double s = 0;
    for (double g : l.gradient) s += g;
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
}

TEST(SoftmaxCe, FiveClassGradientTight) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z(5);
    for (auto& v : z) v = d(rng);
    const int label = static_cast<int>(rng() % 5);
    const auto num = central_difference(
        [&](std::span<const double> x) { return softmax_cross_entropy(x, label).value; }, z);
    EXPECT_LT(gradient_relative_error(softmax_cross_entropy(z, label).gradient, num), 1e-6);
  }
}

TEST(SoftmaxCe, Errors) {
  const std::vector<double> z = {0.1, 0.2};
  try {
    softmax_cross_entropy(z, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LabelOutOfRange);
  }
  EXPECT_THROW(softmax_cross_entropy(z, -1), Error);
  EXPECT_THROW(softmax_cross_entropy(std::vector<double>{1.0}, 0), Error);
}

TEST(SmoothL1, Values) {
  const std::vector<double> zero = {0.0};
  EXPECT_EQ(smooth_l1(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}).value, 0.0);
  EXPECT_EQ(smooth_l1(std::vector<double>{0.5}, zero).value, 0.125);
  EXPECT_EQ(smooth_l1(std::vector<double>{2.0}, zero).value, 1.5);
  EXPECT_EQ(smooth_l1(std::vector<double>{-2.0}, zero).value, 1.5);
  // Both branches give 0.5 at |d| = 1.
  EXPECT_EQ(smooth_l1(std::vector<double>{1.0}, zero).value, 0.5);
  EXPECT_EQ(0.5 * 1.0 * 1.0, 1.0 - 0.5);
  EXPECT_NEAR(smooth_l1(std::vector<double>{std::nextafter(1.0, 0.0)}, zero).value, 0.5, 1e-15);
  // Mean reduction.
  EXPECT_EQ(smooth_l1(std::vector<double>{0.5, 2.0}, std::vector<double>{0, 0}).value,
            (0.125 + 1.5) / 2);
}

TEST(SmoothL1, GradientAndErrors) {
  const auto l = smooth_l1(std::vector<double>{0.5, 3.0, -4.0}, std::vector<double>{0, 0, 0});
  EXPECT_EQ(l.gradient, (std::vector<double>{0.5 / 3, 1.0 / 3, -1.0 / 3}));
  try {
    smooth_l1(std::vector<double>{1, 2}, std::vector<double>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(MaskBce, Values) {
  BitMask truth(4, 4);
  for (int i = 0; i < 8; ++i) truth.bits()[static_cast<std::size_t>(i)] = 1;
  EXPECT_NEAR(mask_bce(std::vector<double>(16, 0.5), truth).value, std::log(2.0), 1e-15);
  std::vector<double> exact(16);
  for (std::size_t i = 0; i < 16; ++i) exact[i] = truth.bits()[i];
  const double floor_value = mask_bce(exact, truth).value;
  EXPECT_GT(floor_value, 0.0);
  EXPECT_LE(floor_value, 1.0000001e-7);
  EXPECT_THROW(mask_bce(std::vector<double>(15, 0.5), truth), Error);
}

TEST(MaskBce, MatchesScalarOracleAndGradient) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(0.01, 0.99);
  for (int i = 0; i < 100; ++i) {
    BitMask truth(8, 8);
    std::vector<double> p(64);
    double ref = 0;
    for (std::size_t k = 0; k < 64; ++k) {
      p[k] = d(rng);
      truth.bits()[k] = rng() % 2;
      ref += truth.bits()[k] ? -std::log(p[k]) : -std::log(1 - p[k]);
    }
    const auto l = mask_bce(p, truth);
    EXPECT_NEAR(l.value, ref / 64, 1e-12);
    const auto num =
        central_difference([&](std::span<const double> x) { return mask_bce(x, truth).value; }, p);
    EXPECT_LT(gradient_relative_error(l.gradient, num), 1e-5);
  }
}

TEST(SemanticCe, UniformAndIgnore) {
  const std::vector<int> truth = {0, 1, 2, 1};
  EXPECT_NEAR(semantic_ce(std::vector<double>(12, 0.3), truth, 3).value, std::log(3.0), 1e-12);
  const std::vector<int> ignored(4, kIgnoreLabel);
  try {
    semantic_ce(std::vector<double>(12, 0.0), ignored, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyAfterIgnore);
  }
  EXPECT_THROW(semantic_ce(std::vector<double>(12, 0.0), std::vector<int>{0, 1, 3, 0}, 3), Error);
}

TEST(SemanticCe, MatchesPerPixelOracle) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> d(-4, 4);
  for (int i = 0; i < 50; ++i) {
    std::vector<int> truth(36);
    std::vector<double> logits(36 * 3);
    for (auto& v : logits) v = d(rng);
    for (auto& t : truth) t = rng() % 5 == 0 ? kIgnoreLabel : static_cast<int>(rng() % 3);
    truth[7] = 1;
    long double sum = 0;
    int counted = 0;
    for (std::size_t px = 0; px < 36; ++px) {
      if (truth[px] == kIgnoreLabel) continue;
      std::vector<double> row(logits.begin() + static_cast<long>(px * 3),
                              logits.begin() + static_cast<long>(px * 3 + 3));
      sum += naive_ce(row, truth[px]);
      ++counted;
    }
    const auto l = semantic_ce(logits, truth, 3);
    EXPECT_NEAR(l.value, static_cast<double>(sum / counted), 1e-12);
    for (std::size_t px = 0; px < 36; ++px) {
      if (truth[px] != kIgnoreLabel) continue;
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(l.gradient[px * 3 + k], 0.0);
    }
  }
}

TEST(TotalLoss, GatingExamples) {
  EXPECT_EQ(total_loss(1, 2, 3, 99, {1, 0}).total, 6.0);
  EXPECT_EQ(total_loss(0, 0, 0, 7, {0, 1}).total, 7.0);
  EXPECT_EQ(total_loss(0.5, 0.25, 0.25, 1.0, {1, 1}).total, 2.0);
  EXPECT_EQ(total_loss(1, 2, 3, 4, LossWeights::instance_stage()).total, 6.0);
  EXPECT_EQ(total_loss(1, 2, 3, 4, LossWeights::semantic_stage()).total, 4.0);
  try {
    total_loss(-1, 0, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeComponent);
  }
}

TEST(TotalLoss, LinearInEachComponent) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> d(0, 10);
  for (int i = 0; i < 200; ++i) {
    const double c[4] = {d(rng), d(rng), d(rng), d(rng)};
    const LossWeights w{static_cast<double>(rng() % 2), static_cast<double>(rng() % 2)};
    const double base = total_loss(c[0], c[1], c[2], c[3], w).total;
    const double expected = w.lambda1 * (c[0] + c[1] + c[2]) + w.lambda_s * c[3];
    EXPECT_NEAR(base, expected, 1e-12 * std::max(1.0, expected));
    const double bumped = total_loss(c[0], c[1], c[2], c[3] + 1.0, w).total;
    EXPECT_NEAR(bumped - base, w.lambda_s, 1e-12);
    const double bumped_c = total_loss(c[0] + 2.0, c[1], c[2], c[3], w).total;
    EXPECT_NEAR(bumped_c - base, 2.0 * w.lambda1, 1e-12);
  }
}

TEST(GradientChecks, AllLossesPass) {
  const auto rows = run_gradient_checks(100);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.instances, 100u);
    EXPECT_TRUE(r.passed()) << r.loss << " worst " << r.worst_relative_error;
  }
}
