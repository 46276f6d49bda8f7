// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/data/taxonomy.hpp"
#include "fastdoc/data/tfidf.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

struct DerivedTaxonomy {
  Taxonomy taxonomy;
  /// Root-to-leaf path per document id.
  std::map<std::string, HierarchyPath> paths;
};

namespace detail {

inline double sq_dist_to_centroid(const SparseVector& x, const std::vector<double>& c, double c_sq) {
  double dot = 0;
  for (const auto& [id, w] : x) dot += w * c[id];
  return std::max(0.0, sparse_dot(x, x) + c_sq - 2 * dot);
}

/// Seeded k-means++ then Lloyd iterations. Returns a cluster index per point;
/// clusters are renumbered by their smallest member.
inline std::vector<std::size_t> kmeans(const std::vector<SparseVector>& points, std::size_t dim, std::size_t k,
                                       Rng& rng, std::size_t max_iter = 100) {
  const std::size_t n = points.size();
  auto centroid_of = [&](std::size_t i) {
    std::vector<double> c(dim, 0.0);
    for (const auto& [id, w] : points[i]) c[id] = w;
    return c;
  };
  std::vector<std::vector<double>> centroids{centroid_of(rng.index(n))};
  std::vector<double> c_sq{std::inner_product(centroids[0].begin(), centroids[0].end(), centroids[0].begin(), 0.0)};
  while (centroids.size() < k) {
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < centroids.size(); ++c)
        d2[i] = std::min(d2[i], sq_dist_to_centroid(points[i], centroids[c], c_sq[c]));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0) {
      pick = rng.index(n);
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick];
        if (r < 0) break;
      }
    }
    centroids.push_back(centroid_of(pick));
    c_sq.push_back(std::inner_product(centroids.back().begin(), centroids.back().end(), centroids.back().begin(), 0.0));
  }

  std::vector<std::size_t> assign(n, 0);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist_to_centroid(points[i], centroids[c], c_sq[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<std::size_t> sizes(k, 0);
    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[assign[i]];
      for (const auto& [id, w] : points[i]) centroids[assign[i]][id] += w;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0)
        for (auto& v : centroids[c]) v /= static_cast<double>(sizes[c]);
      c_sq[c] = std::inner_product(centroids[c].begin(), centroids[c].end(), centroids[c].begin(), 0.0);
    }
  }

  std::map<std::size_t, std::size_t> relabel;
  for (std::size_t i = 0; i < n; ++i) relabel.emplace(assign[i], relabel.size());
  for (auto& a : assign) a = relabel[a];
  return assign;
}

}  // namespace detail

/// Unsupervised category tree: documents are split recursively into
/// `branching` clusters by seeded k-means over tf-idf vectors, down to
/// `levels` levels. Nodes with fewer than `branching` documents, or whose
/// documents do not separate, become leaves early. Each node is labelled by
/// the top three tf-idf terms of its documents.
inline DerivedTaxonomy derive_taxonomy(const Corpus& corpus, std::size_t levels, std::size_t branching,
                                       std::uint64_t seed) {
  if (levels < 1) throw ConfigError("derive_taxonomy: levels must be >= 1");
  if (branching < 2) throw ConfigError("derive_taxonomy: branching must be >= 2");
  if (corpus.size() < branching) {
    throw ValidationError("derive_taxonomy: corpus of " + std::to_string(corpus.size()) +
                          " documents is smaller than branching " + std::to_string(branching));
  }
  std::vector<std::vector<std::string>> terms;
  for (const auto& d : corpus.documents()) terms.push_back(alnum_terms(d.text()));
  const TfIdf tfidf(terms);
  std::vector<SparseVector> vecs;
  for (const auto& t : terms) vecs.push_back(tfidf.transform(t));

  auto label_for = [&](const std::vector<std::size_t>& members) {
    std::map<std::size_t, double> weight;
    for (auto i : members)
      for (const auto& [id, w] : vecs[i]) weight[id] += w;
    std::vector<std::pair<std::size_t, double>> ranked(weight.begin(), weight.end());
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return tfidf.term(a.first) < tfidf.term(b.first);
    });
    std::string label;
    for (std::size_t r = 0; r < std::min<std::size_t>(3, ranked.size()); ++r) {
      label += (r ? " " : "") + tfidf.term(ranked[r].first);
    }
    return label.empty() ? std::string("cluster") : label;
  };

  std::vector<HierarchyPath> doc_paths(corpus.size());
  std::vector<HierarchyPath> leaf_order;

  struct Frame {
    std::vector<std::size_t> members;
    HierarchyPath path;
  };
  std::vector<Frame> stack{{{}, {}}};
  for (std::size_t i = 0; i < corpus.size(); ++i) stack.back().members.push_back(i);
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    std::vector<std::vector<std::size_t>> clusters;
    if (f.path.size() < levels && f.members.size() >= branching) {
      std::vector<SparseVector> pts;
      for (auto i : f.members) pts.push_back(vecs[i]);
      std::string node_key;
      for (const auto& s : f.path) node_key += s + "\x1f";
      Rng rng(derive_seed(seed, "derive-taxonomy/" + node_key));
      const auto assign = detail::kmeans(pts, tfidf.vocab_size(), branching, rng);
      const std::size_t k = *std::max_element(assign.begin(), assign.end()) + 1;
      clusters.assign(k, {});
      for (std::size_t m = 0; m < assign.size(); ++m) clusters[assign[m]].push_back(f.members[m]);
    }
    if (clusters.size() < 2) {
      if (!f.path.empty()) leaf_order.push_back(f.path);
      for (auto i : f.members) doc_paths[i] = f.path;
      continue;
    }
    std::map<std::string, int> used;
    std::vector<Frame> children;
    for (auto& c : clusters) {
      std::string label = label_for(c);
      if (int n = ++used[label]; n > 1) label += " (" + std::to_string(n) + ")";
      HierarchyPath p = f.path;
      p.push_back(label);
      children.push_back({std::move(c), std::move(p)});
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }

  DerivedTaxonomy out;
  out.taxonomy = Taxonomy::from_paths(leaf_order);
  for (std::size_t i = 0; i < corpus.size(); ++i) out.paths[corpus[i].id] = doc_paths[i];
  return out;
}

}  // namespace fastdoc
