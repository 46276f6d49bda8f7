// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "fastdoc/data/document.hpp"
#include "fastdoc/data/tfidf.hpp"
#include "fastdoc/encoder/model.hpp"
#include "fastdoc/encoder/text.hpp"
#include "fastdoc/errors.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

using Matrix = std::vector<std::vector<double>>;

inline double dense_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

template <class T>
Matrix to_matrix(const Tensor<T>& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = static_cast<double>(t.at(r, c));
  return m;
}

/// Word-level locality: for each row i of `a`, j(i) is the row of `b` with
/// the highest cosine similarity (ties to the smallest |i - j|, then the
/// smallest j). Returns 1 + mean |i - j(i)|.
inline double wl_metric(const Matrix& a, const Matrix& b) {
  if (a.empty() || b.empty()) throw ContractError("wl_metric: both documents must be non-empty");
  double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double s = dense_cosine(a[i], b[j]);
      const auto dist = [&](std::size_t k) { return i > k ? i - k : k - i; };
      if (s > best_sim || (s == best_sim && dist(j) < dist(best))) {
        best_sim = s;
        best = j;
      }
    }
    total += static_cast<double>(i > best ? i - best : best - i);
  }
  return 1.0 + total / static_cast<double>(a.size());
}

enum class EmbeddingMode { Sentence, Token };

/// Input embeddings of a document as the upper encoder sees them: sentence
/// embeddings from the lower encoder, or token vectors from the embedding
/// table (without positional vectors, which are identical across documents).
template <class T>
Matrix input_embeddings(const Document& d, EmbeddingMode mode, const FastDocModel<T>& model) {
  if (d.sentences.empty()) throw ContractError("document '" + d.id + "' is empty");
  if (mode == EmbeddingMode::Sentence) return to_matrix(model.embed_sentences(d.sentences));
  const auto ids = tokenize_ids(d.text(), model.config().vocab_size);
  if (ids.empty()) throw ContractError("document '" + d.id + "' has no tokens");
  return to_matrix(gather_rows(model.embeddings().tokens, std::span<const std::size_t>(ids)));
}

template <class T>
double wl_metric(const Document& a, const Document& b, EmbeddingMode mode, const FastDocModel<T>& model) {
  return wl_metric(input_embeddings(a, mode, model), input_embeddings(b, mode, model));
}

struct CorrelationResult {
  /// Pearson r; meaningful only when `defined`.
  double r = 0;
  bool defined = false;
  std::size_t pairs = 0;
  std::vector<double> sentence_similarities;
  std::vector<double> token_similarities;
};

inline double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* defined = nullptr) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const bool ok = x.size() >= 2 && sxx > 0 && syy > 0;
  if (defined) *defined = ok;
  if (!ok) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pairwise cosines over i < j, max-min normalised to [0, 1]. Returns false
/// when all similarities are equal.
inline bool normalized_pairwise_cosines(const Matrix& vecs, std::vector<double>& out) {
  out.clear();
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j) out.push_back(dense_cosine(vecs[i], vecs[j]));
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo, max = *hi;
  if (max == min) return false;
  for (auto& s : out) s = (s - min) / (max - min);
  return true;
}

/// Pearson correlation between the normalised pairwise-cosine vectors of two
/// representations of the same documents.
inline CorrelationResult correlate_representations(const Matrix& sentence_path, const Matrix& token_path) {
  if (sentence_path.size() != token_path.size()) {
    throw DimensionError("representation paths cover different document counts");
  }
  if (sentence_path.size() < 3) throw ValidationError("representation correlation needs at least 3 documents");
  CorrelationResult r;
  const bool a = normalized_pairwise_cosines(sentence_path, r.sentence_similarities);
  const bool b = normalized_pairwise_cosines(token_path, r.token_similarities);
  r.pairs = r.sentence_similarities.size();
  if (a && b) r.r = pearson(r.sentence_similarities, r.token_similarities, &r.defined);
  return r;
}

/// Document vectors via the sentence path and via the token path (mean of
/// upper-encoder outputs over [CLS] plus tokens), then their correlation.
template <class T>
CorrelationResult representation_correlation(const std::vector<Document>& docs, const FastDocModel<T>& model) {
  if (docs.size() < 3) throw ValidationError("representation correlation needs at least 3 documents");
  Matrix sentence_path, token_path;
  for (const auto& d : docs) {
    std::vector<std::size_t> ids{kClsToken};
    for (auto id : tokenize_ids(d.text(), model.config().vocab_size)) ids.push_back(id);
    if (ids.size() > model.config().max_positions) {
      throw LengthError("document '" + d.id + "' has " + std::to_string(ids.size()) +
                        " tokens, too long for the token path (" + std::to_string(model.config().max_positions) + ")");
    }
    sentence_path.push_back(to_matrix(model.encode_document(d.sentences)).front());
    token_path.push_back(to_matrix(mean_rows(model.forward_tokens(ids))).front());
  }
  return correlate_representations(sentence_path, token_path);
}

struct PcaResult {
  Matrix coordinates;
  Matrix components;
  std::vector<double> explained_variance_ratio;
};

/// Projection of mean-centred rows onto the top-k covariance eigenvectors,
/// found by seeded power iteration with deflation.
inline PcaResult pca_project(const Matrix& points, std::size_t k = 2, std::uint64_t seed = 0) {
  if (points.empty()) throw ValidationError("pca_project: no points");
  const std::size_t n = points.size(), d = points.front().size();
  if (k > d) throw ConfigError("pca_project: k = " + std::to_string(k) + " exceeds dimension " + std::to_string(d));
  if (n < k) throw ValidationError("pca_project: need at least k = " + std::to_string(k) + " points");
  std::vector<double> mean(d, 0.0);
  for (const auto& p : points) {
    if (p.size() != d) throw DimensionError("pca_project: ragged input");
    for (std::size_t c = 0; c < d; ++c) mean[c] += p[c] / static_cast<double>(n);
  }
  Matrix centred = points;
  for (auto& p : centred)
    for (std::size_t c = 0; c < d; ++c) p[c] -= mean[c];
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& p : centred)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += p[a] * p[b] / static_cast<double>(n);
  double trace = 0;
  for (std::size_t a = 0; a < d; ++a) trace += cov[a][a];

  PcaResult out;
  Rng rng(derive_seed(seed, "pca"));
  for (std::size_t comp = 0; comp < k; ++comp) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    double lambda = 0;
    for (int iter = 0; iter < 5000; ++iter) {
      std::vector<double> w(d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) w[a] += cov[a][b] * v[b];
      double norm = 0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0) break;
      double delta = 0;
      for (std::size_t a = 0; a < d; ++a) {
        w[a] /= norm;
        delta = std::max(delta, std::fabs(w[a] - v[a]));
      }
      v = w;
      lambda = norm;
      if (delta < 1e-12) break;
    }
    double vn = 0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    for (auto& x : v) x = vn > 0 ? x / vn : 0.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] -= lambda * v[a] * v[b];
    out.components.push_back(v);
    out.explained_variance_ratio.push_back(trace > 0 ? std::max(0.0, lambda) / trace : 0.0);
  }
  for (const auto& p : centred) {
    std::vector<double> c(k, 0.0);
    for (std::size_t comp = 0; comp < k; ++comp)
      for (std::size_t a = 0; a < d; ++a) c[comp] += p[a] * out.components[comp][a];
    out.coordinates.push_back(c);
  }
  return out;
}

/// Mean silhouette coefficient of labelled points under Euclidean distance.
inline double silhouette(const Matrix& points, const std::vector<std::size_t>& labels) {
  const std::size_t n = points.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t c = 0; c < points[i].size(); ++c) s += (points[i][c] - points[j][c]) * (points[i][c] - points[j][c]);
    return std::sqrt(s);
  };
  std::size_t num_labels = 0;
  for (auto l : labels) num_labels = std::max(num_labels, l + 1);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(num_labels, 0.0);
    std::vector<std::size_t> count(num_labels, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += dist(i, j);
      ++count[labels[j]];
    }
    if (count[labels[i]] == 0) continue;
    const double a = sum[labels[i]] / static_cast<double>(count[labels[i]]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < num_labels; ++l)
      if (l != labels[i] && count[l] > 0) b = std::min(b, sum[l] / static_cast<double>(count[l]));
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [0, 1]; 1.0 falls in the last bin.
inline Histogram unit_histogram(const std::vector<double>& values, std::size_t bins = 10) {
  Histogram h;
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(static_cast<double>(b) / static_cast<double>(bins));
  h.counts.assign(bins, 0);
  for (double v : values) {
    const auto b = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

/// Paragraphs separated by blank lines, trimmed, empties dropped.
inline std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, nl - pos));
    if (line.empty()) {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current += (current.empty() ? "" : " ") + std::string(line);
    }
    pos = nl + 1;
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

struct ParagraphSimilarity {
  /// For each paragraph of the first document, its best cosine against the
  /// paragraphs of the second.
  std::vector<double> scores;
  Histogram histogram;
};

/// tf-idf paragraph vectors fitted on both documents' paragraphs.
inline ParagraphSimilarity paragraph_similarity(std::string_view doc_a, std::string_view doc_b,
                                                std::size_t bins = 10) {
  const auto pa = split_paragraphs(doc_a), pb = split_paragraphs(doc_b);
  if (pa.empty() || pb.empty()) throw ContractError("paragraph_similarity: a document has no paragraphs");
  std::vector<std::vector<std::string>> terms;
  for (const auto& p : pa) terms.push_back(alnum_terms(p));
  for (const auto& p : pb) terms.push_back(alnum_terms(p));
  const TfIdf tfidf(terms);
  std::vector<SparseVector> vb;
  for (std::size_t j = 0; j < pb.size(); ++j) vb.push_back(tfidf.transform(terms[pa.size() + j]));
  ParagraphSimilarity out;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const SparseVector va = tfidf.transform(terms[i]);
    double best = 0;
    for (const auto& v : vb) best = std::max(best, sparse_cosine(va, v));
    out.scores.push_back(std::clamp(best, 0.0, 1.0));
  }
  out.histogram = unit_histogram(out.scores, bins);
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

}  // namespace fastdoc
