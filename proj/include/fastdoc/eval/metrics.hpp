// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastdoc/errors.hpp"

namespace fastdoc {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes) : n_(num_classes), counts_(num_classes * num_classes, 0) {}

  void add(std::size_t truth, std::size_t predicted) {
    if (truth >= n_ || predicted >= n_) {
      throw ValidationError("class index out of range for " + std::to_string(n_) + " classes");
    }
    ++counts_[truth * n_ + predicted];
  }

  std::size_t num_classes() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * n_ + predicted); }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::uint64_t support(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += at(c, p);
    return s;
  }
  std::uint64_t predicted(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < n_; ++t) s += at(t, c);
    return s;
  }

  double accuracy() const {
    const auto t = total();
    if (t == 0) return 0.0;
    std::uint64_t ok = 0;
    for (std::size_t c = 0; c < n_; ++c) ok += at(c, c);
    return static_cast<double>(ok) / static_cast<double>(t);
  }

  /// F1 of one class; 0 when it is never predicted or never true.
  double f1(std::size_t c) const {
    const double tp = static_cast<double>(at(c, c));
    const double denom = static_cast<double>(support(c) + predicted(c));
    return denom == 0 ? 0.0 : 2 * tp / denom;
  }

  /// Mean per-class F1 over classes that occur in the truth.
  double macro_f1() const {
    double s = 0;
    std::size_t k = 0;
    for (std::size_t c = 0; c < n_; ++c) {
      if (support(c) == 0) continue;
      s += f1(c);
      ++k;
    }
    return k == 0 ? 0.0 : s / static_cast<double>(k);
  }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                                 std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

inline double accuracy(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                       std::size_t num_classes) {
  return confusion(truth, predicted, num_classes).accuracy();
}

inline double macro_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                       std::size_t num_classes) {
  return confusion(truth, predicted, num_classes).macro_f1();
}

/// F1 of class 1 in a 0/1 task.
inline double binary_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted) {
  return confusion(truth, predicted, 2).f1(1);
}

/// Inclusive token span; std::nullopt means unanswerable.
using Span = std::optional<std::pair<std::size_t, std::size_t>>;

inline bool span_exact_match(const Span& gold, const Span& predicted) { return gold == predicted; }

/// Token-overlap F1 between two spans; two unanswerable spans score 1.
inline double span_f1(const Span& gold, const Span& predicted) {
  if (!gold || !predicted) return !gold && !predicted ? 1.0 : 0.0;
  const std::size_t lo = std::max(gold->first, predicted->first);
  const std::size_t hi = std::min(gold->second, predicted->second);
  if (lo > hi) return 0.0;
  const double overlap = static_cast<double>(hi - lo + 1);
  const double p = overlap / static_cast<double>(predicted->second - predicted->first + 1);
  const double r = overlap / static_cast<double>(gold->second - gold->first + 1);
  return 2 * p * r / (p + r);
}

}  // namespace fastdoc
