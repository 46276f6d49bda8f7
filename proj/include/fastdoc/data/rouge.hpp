// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "fastdoc/encoder/text.hpp"
#include "fastdoc/log.hpp"

namespace fastdoc {

struct RougeScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Whitespace split, case-folded.
inline std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(to_lower(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

/// Length of the longest common subsequence, two-row dynamic programme.
template <class Seq>
std::size_t lcs_length(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// ROUGE-L: P = LCS/|b|, R = LCS/|a|, F1 their harmonic mean.
template <class Seq>
RougeScore rouge_l(const Seq& a, const Seq& b) {
  if (a.empty() || b.empty()) {
    warn("rouge_l: empty token sequence");
    return {};
  }
  const double lcs = static_cast<double>(lcs_length(a, b));
  if (lcs == 0) return {};
  RougeScore s;
  s.precision = lcs / static_cast<double>(b.size());
  s.recall = lcs / static_cast<double>(a.size());
  s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace fastdoc
