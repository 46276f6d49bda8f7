// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <limits>

#include "support.hpp"

namespace fastdoc {
namespace {

double triplet_oracle(const std::vector<double>& a, const std::vector<double>& p, const std::vector<double>& n) {
  double dp = 0, dn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dp += (a[i] - p[i]) * (a[i] - p[i]);
    dn += (a[i] - n[i]) * (a[i] - n[i]);
  }
  return std::max(std::sqrt(dp) - std::sqrt(dn) + 1.0, 0.0);
}

double ce_oracle(const std::vector<double>& z, std::size_t y) {
  double denom = 0;
  for (double v : z) denom += std::exp(v);
  return -std::log(std::exp(z[y]) / denom);
}

std::vector<double> draw(Rng& rng, std::size_t n, double s) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() * s;
  return v;
}

TEST(TripletLoss, EqualVectorsGiveTheMargin) {
  const auto v = Tensor<double>::vector({0.3, -1.2, 2.0});
  EXPECT_DOUBLE_EQ(triplet_loss(v, v, v).item(), 1.0);
}

TEST(TripletLoss, MatchesScalarOracle) {
  Rng rng(17);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 1 + rng.index(12);
    const auto a = draw(rng, d, 1.0), p = draw(rng, d, 1.0), n = draw(rng, d, 1.0);
    const double got = triplet_loss(Tensor<double>::vector(a), Tensor<double>::vector(p), Tensor<double>::vector(n)).item();
    EXPECT_NEAR(got, triplet_oracle(a, p, n), 1e-6);
  }
}

TEST(TripletLoss, BatchIsTheMeanOfRows) {
  Rng rng(3);
  const auto a = draw(rng, 12, 1.0), p = draw(rng, 12, 1.0), n = draw(rng, 12, 1.0);
  const auto got = triplet_loss_batch(Tensor<double>({3, 4}, a), Tensor<double>({3, 4}, p), Tensor<double>({3, 4}, n));
  double want = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    auto slice = [r](const std::vector<double>& v) { return std::vector<double>(v.begin() + r * 4, v.begin() + r * 4 + 4); };
    want += triplet_oracle(slice(a), slice(p), slice(n)) / 3;
  }
  EXPECT_NEAR(got.item(), want, 1e-12);
  EXPECT_THROW(triplet_loss(Tensor<double>::vector({1.0}), Tensor<double>::vector({1.0, 2.0}),
                            Tensor<double>::vector({1.0})),
               DimensionError);
}

TEST(HierarchicalLoss, UniformBinaryLogitsGiveLnTwo) {
  const auto z = Tensor<double>::vector({0.0, 0.0});
  EXPECT_NEAR(hierarchical_loss<double>({{z}}, {{0}}).item(), std::log(2.0), 1e-12);
}

TEST(HierarchicalLoss, MatchesScalarOracle) {
  Rng rng(29);
  for (int c = 0; c < 100; ++c) {
    const std::size_t docs = 1 + rng.index(3), levels = 1 + rng.index(4);
    std::vector<std::vector<Tensor<double>>> logits(docs);
    HierTargets targets(docs);
    double want = 0;
    for (std::size_t i = 0; i < docs; ++i)
      for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t classes = 2 + rng.index(5);
        const auto z = draw(rng, classes, 2.0);
        const std::size_t y = rng.index(classes);
        logits[i].push_back(Tensor<double>::vector(z));
        targets[i].push_back(y);
        want += ce_oracle(z, y);
      }
    EXPECT_NEAR(hierarchical_loss(logits, targets).item(), want, 1e-6);
  }
}

TEST(HierarchicalLoss, RejectsMismatchedLabels) {
  const auto z = Tensor<double>::vector({0.0, 0.0});
  EXPECT_THROW(hierarchical_loss<double>({{z, z}}, {{0}}), DimensionError);
  EXPECT_THROW(hierarchical_loss<double>({{z}}, {{0}, {1}}), DimensionError);
  EXPECT_THROW(hierarchical_loss<double>({{z}}, {{2}}), IndexError);
}

TEST(TotalLoss, IsTheUnweightedSum) {
  EXPECT_DOUBLE_EQ(total_loss(Tensor<double>::scalar(0.25), Tensor<double>::scalar(1.5)).item(), 1.75);
  EXPECT_THROW(total_loss(Tensor<double>::scalar(std::numeric_limits<double>::quiet_NaN()), Tensor<double>::scalar(1.0)),
               NumericError);
}

TEST(TotalLoss, GradientsMatchFiniteDifferences) {
  Rng rng(8);
  const auto a = Tensor<double>::vector(draw(rng, 6, 1.0), true);
  const auto p = Tensor<double>::vector(draw(rng, 6, 1.0), true);
  const auto n = Tensor<double>::vector(draw(rng, 6, 0.2), true);
  const auto z = Tensor<double>::vector(draw(rng, 4, 1.0), true);
  auto f = [&] { return total_loss(triplet_loss(a, p, n), hierarchical_loss<double>({{z}}, {{3}})); };
  ASSERT_GT(triplet_loss(a, p, n).item(), 0.0);
  EXPECT_LT(testing::finite_difference_check(f, {a, p, n, z}).max_rel_error, 1e-6);
}

}  // namespace
}  // namespace fastdoc
