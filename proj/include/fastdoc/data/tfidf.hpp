// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fastdoc {

/// Sparse vector: (term id, weight) sorted by term id.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double s = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      s += a[i++].second * b[j++].second;
    } else if (a[i].first < b[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

inline double sparse_norm(const SparseVector& a) {
  double s = 0;
  for (const auto& [_, w] : a) s += w * w;
  return std::sqrt(s);
}

inline double sparse_cosine(const SparseVector& a, const SparseVector& b) {
  const double na = sparse_norm(a), nb = sparse_norm(b);
  if (na == 0 || nb == 0) return 0.0;
  return sparse_dot(a, b) / (na * nb);
}

/// Raw-count tf times smoothed idf, ln((1 + N) / (1 + df)) + 1, L2-normalised.
class TfIdf {
 public:
  explicit TfIdf(const std::vector<std::vector<std::string>>& docs) {
    std::vector<std::size_t> df;
    for (const auto& d : docs) {
      std::vector<std::size_t> ids;
      for (const auto& t : d) ids.push_back(intern(t, df));
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      for (auto id : ids) ++df[id];
    }
    const double n = static_cast<double>(docs.size());
    idf_.resize(df.size());
    for (std::size_t i = 0; i < df.size(); ++i) idf_[i] = std::log((1 + n) / (1 + static_cast<double>(df[i]))) + 1;
  }

  /// Terms unseen at fit time are ignored.
  SparseVector transform(const std::vector<std::string>& terms) const {
    std::map<std::size_t, double> counts;
    for (const auto& t : terms) {
      auto it = vocab_.find(t);
      if (it != vocab_.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    for (const auto& [id, c] : counts) v.emplace_back(id, c * idf_[id]);
    const double norm = sparse_norm(v);
    if (norm > 0)
      for (auto& [_, w] : v) w /= norm;
    return v;
  }

  std::size_t vocab_size() const { return terms_.size(); }
  const std::string& term(std::size_t id) const { return terms_[id]; }

 private:
  std::size_t intern(const std::string& t, std::vector<std::size_t>& df) {
    auto [it, fresh] = vocab_.emplace(t, terms_.size());
    if (fresh) {
      terms_.push_back(t);
      df.push_back(0);
    }
    return it->second;
  }

  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
};

}  // namespace fastdoc
