// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fastdoc/encoder/text.hpp"
#include "fastdoc/errors.hpp"

namespace fastdoc {

using HierarchyPath = std::vector<std::string>;

/// Per-level class indices of one document, exactly `depth` entries; levels
/// beyond the document's path hold the null index.
struct HierarchyLabels {
  std::vector<std::size_t> levels;
  bool operator==(const HierarchyLabels&) const = default;
};

/// Multi-level category tree. Level l has C_l labels indexed by first
/// appearance; index C_l is the null class.
class Taxonomy {
 public:
  Taxonomy() = default;

  static Taxonomy from_paths(const std::vector<HierarchyPath>& paths) {
    Taxonomy t;
    for (const auto& p : paths) {
      if (p.empty()) continue;
      for (const auto& label : p) {
        if (label.empty()) throw ValidationError("taxonomy path has an empty label");
      }
      t.depth_ = std::max(t.depth_, p.size());
    }
    t.labels_.assign(t.depth_, {});
    t.index_.assign(t.depth_, {});
    for (const auto& p : paths) {
      for (std::size_t l = 0; l < p.size(); ++l) {
        if (t.index_[l].emplace(p[l], t.labels_[l].size()).second) t.labels_[l].push_back(p[l]);
      }
      for (std::size_t l = 1; l <= p.size(); ++l) t.prefixes_.insert(HierarchyPath(p.begin(), p.begin() + l));
    }
    std::set<HierarchyPath> seen;
    for (const auto& p : paths) {
      if (p.empty() || !seen.insert(p).second) continue;
      bool is_prefix = false;
      for (const auto& q : paths) {
        if (q.size() > p.size() && std::equal(p.begin(), p.end(), q.begin())) {
          is_prefix = true;
          break;
        }
      }
      if (!is_prefix) t.leaves_.push_back(p);
    }
    return t;
  }

  /// One root-to-leaf path per line, levels separated by " > ".
  static Taxonomy parse(std::istream& in) {
    std::vector<HierarchyPath> paths;
    std::string line;
    while (std::getline(in, line)) {
      auto s = trim(line);
      if (s.empty() || s.front() == '#') continue;
      HierarchyPath p;
      std::size_t pos = 0;
      while (true) {
        const std::size_t next = s.find(" > ", pos);
        p.emplace_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 3;
      }
      paths.push_back(std::move(p));
    }
    return from_paths(paths);
  }

  static Taxonomy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open taxonomy file '" + path + "'");
    return parse(in);
  }

  void write(std::ostream& out) const {
    for (const auto& p : leaves_) {
      for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " > " : "") << p[i];
      out << '\n';
    }
  }

  std::size_t depth() const { return depth_; }
  bool empty() const { return depth_ == 0; }
  std::size_t class_count(std::size_t level) const { return labels_.at(level).size(); }
  std::size_t null_index(std::size_t level) const { return labels_.at(level).size(); }
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> out;
    for (const auto& l : labels_) out.push_back(l.size());
    return out;
  }
  const std::vector<std::string>& level_labels(std::size_t level) const { return labels_.at(level); }
  const std::vector<HierarchyPath>& leaves() const { return leaves_; }
  bool has_prefix(const HierarchyPath& p) const { return p.empty() || prefixes_.count(p) > 0; }

  std::optional<std::size_t> label_index(std::size_t level, const std::string& label) const {
    if (level >= depth_) return std::nullopt;
    auto it = index_[level].find(label);
    if (it == index_[level].end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const Taxonomy& o) const {
    return depth_ == o.depth_ && labels_ == o.labels_ && leaves_ == o.leaves_;
  }

 private:
  std::size_t depth_ = 0;
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::unordered_map<std::string, std::size_t>> index_;
  std::vector<HierarchyPath> leaves_;
  std::set<HierarchyPath> prefixes_;
};

/// Indices for the given levels, null for the rest.
inline HierarchyLabels pad_hierarchy(const HierarchyPath& path, const Taxonomy& taxonomy) {
  if (path.size() > taxonomy.depth()) {
    throw ValidationError("hierarchy path of length " + std::to_string(path.size()) + " exceeds taxonomy depth " +
                          std::to_string(taxonomy.depth()));
  }
  HierarchyLabels out;
  for (std::size_t l = 0; l < path.size(); ++l) {
    auto idx = taxonomy.label_index(l, path[l]);
    if (!idx) throw ValidationError("label '" + path[l] + "' is not in taxonomy level " + std::to_string(l + 1));
    out.levels.push_back(*idx);
  }
  if (!taxonomy.has_prefix(path)) {
    std::string joined;
    for (const auto& s : path) joined += (joined.empty() ? "" : " > ") + s;
    throw ValidationError("path '" + joined + "' is not a chain in the taxonomy");
  }
  for (std::size_t l = path.size(); l < taxonomy.depth(); ++l) out.levels.push_back(taxonomy.null_index(l));
  return out;
}

/// Static word vectors: one token per line followed by d decimals.
class WordVectors {
 public:
  static WordVectors parse(std::istream& in) {
    WordVectors wv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      std::istringstream ss(line);
      std::string token;
      ss >> token;
      std::vector<double> v;
      double x;
      while (ss >> x) v.push_back(x);
      if (!ss.eof()) throw ParseError("word vectors line " + std::to_string(lineno) + ": bad number");
      if (wv.dim_ == 0) wv.dim_ = v.size();
      if (v.empty() || v.size() != wv.dim_) {
        throw ParseError("word vectors line " + std::to_string(lineno) + ": expected " + std::to_string(wv.dim_) +
                         " values");
      }
      wv.vectors_[to_lower(token)] = std::move(v);
    }
    return wv;
  }

  static WordVectors load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word vector file '" + path + "'");
    return parse(in);
  }

  void set(const std::string& token, std::vector<double> v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw DimensionError("word vector width mismatch");
    vectors_[to_lower(token)] = std::move(v);
  }

  std::size_t dim() const { return dim_; }
  bool contains(const std::string& token) const { return vectors_.count(token) > 0; }

  /// Zero vector for out-of-vocabulary tokens.
  std::vector<double> lookup(const std::string& token) const {
    auto it = vectors_.find(token);
    return it == vectors_.end() ? std::vector<double>(dim_, 0.0) : it->second;
  }

  std::vector<double> mean(const std::vector<std::string>& tokens) const {
    std::vector<double> out(dim_, 0.0);
    if (tokens.empty()) return out;
    for (const auto& t : tokens) {
      auto v = lookup(t);
      for (std::size_t i = 0; i < dim_; ++i) out[i] += v[i];
    }
    for (auto& x : out) x /= static_cast<double>(tokens.size());
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Leaf path for a free-text category: an exact (case-folded) leaf-label
/// match when there is one, else the leaf whose last two labels have the
/// closest mean word vector. Ties go to the lexicographically smallest path.
inline HierarchyPath map_category_to_hierarchy(const std::string& category, const Taxonomy& taxonomy,
                                               const WordVectors& wv) {
  if (taxonomy.empty()) throw ValidationError("cannot map a category onto an empty taxonomy");
  const std::string folded = to_lower(trim(category));
  std::optional<HierarchyPath> exact;
  for (const auto& leaf : taxonomy.leaves()) {
    if (to_lower(leaf.back()) == folded && (!exact || leaf < *exact)) exact = leaf;
  }
  if (exact) return *exact;

  const auto tokens = alnum_terms(category);
  const bool any_known = std::any_of(tokens.begin(), tokens.end(), [&](const auto& t) { return wv.contains(t); });
  if (!any_known) throw UnmappableCategory("category '" + category + "' has no in-vocabulary token");
  const auto query = wv.mean(tokens);

  std::optional<HierarchyPath> best;
  double best_score = -2.0;
  for (const auto& leaf : taxonomy.leaves()) {
    std::vector<std::string> entity_tokens;
    for (std::size_t l = leaf.size() >= 2 ? leaf.size() - 2 : 0; l < leaf.size(); ++l) {
      for (auto& t : alnum_terms(leaf[l])) entity_tokens.push_back(std::move(t));
    }
    const double score = cosine(query, wv.mean(entity_tokens));
    if (!best || score > best_score || (score == best_score && leaf < *best)) {
      best = leaf;
      best_score = score;
    }
  }
  return *best;
}

}  // namespace fastdoc
