// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fastdoc/fastdoc.hpp"

namespace fastdoc::testing {

/// Small model used throughout the suites.
inline ModelConfig tiny_config(std::vector<std::size_t> level_classes = {3, 2}, std::size_t d_model = 16) {
  ModelConfig c;
  c.d_model = d_model;
  c.num_heads = 2;
  c.num_layers = 2;
  c.d_ff = 2 * d_model;
  c.lower_layers = 1;
  c.vocab_size = 512;
  c.max_positions = 32;
  c.max_sentences = 8;
  c.seed = 7;
  c.level_classes = std::move(level_classes);
  return c;
}

template <class T>
void fill_normal(Tensor<T> t, Rng& rng, double stddev) {
  for (auto& v : t.mutable_data()) v = static_cast<T>(rng.normal() * stddev);
}

struct GradCheck {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/// Relative error with a denominator floor so that entries whose true
/// gradient is numerically zero are judged on absolute error.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences of `loss` with respect to every element of `params`,
/// compared against the gradients left by one backward pass.
inline GradCheck finite_difference_check(const std::function<Tensor<double>()>& loss,
                                         std::vector<Tensor<double>> params, double h = 1e-6) {
  for (auto& p : params) p.zero_grad();
  backward(loss());
  GradCheck r;
  for (auto& p : params) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    if (analytic.empty()) analytic.assign(p.numel(), 0.0);
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss().item();
      data[i] = saved - h;
      const double down = loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double rel = relative_error(analytic[i], numeric);
      if (rel > r.max_rel_error) r.max_rel_error = rel, r.worst_analytic = analytic[i], r.worst_numeric = numeric;
      r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic[i] - numeric));
      ++r.checked;
    }
  }
  return r;
}

/// Trainable tensors of a model.
template <class T>
std::vector<Tensor<T>> trainable(const FastDocModel<T>& m) {
  std::vector<Tensor<T>> out;
  for (auto& p : m.named_parameters())
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  return out;
}

inline double cosine_of(const Tensor<float>& a, const Tensor<float>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.numel(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  return dot / std::sqrt(na * nb);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("fastdoc-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Exhaustive longest common subsequence: tries every subsequence of the
/// shorter input. Only for short sequences.
template <class Seq>
std::size_t brute_force_lcs(const Seq& a, const Seq& b) {
  const Seq& s = a.size() <= b.size() ? a : b;
  const Seq& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t len = 0, j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < t.size() && !(t[j] == s[i])) ++j;
      if (j == t.size()) ok = false;
      else ++j, ++len;
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

inline double brute_force_rouge_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t lcs = 0;
  if (a.size() <= 16 || b.size() <= 16) {
    lcs = brute_force_lcs(a, b);
  } else {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = a.size(); i-- > 0;)
      for (std::size_t j = b.size(); j-- > 0;) t[i][j] = a[i] == b[j] ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
    lcs = t[0][0];
  }
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / b.size(), r = static_cast<double>(lcs) / a.size();
  return 2 * p * r / (p + r);
}

/// Re-derives every mining constraint from the raw documents. Returns an
/// empty string when all triplets are sound, else the first violation.
inline std::string check_metadata_triplets(const Corpus& corpus, const std::vector<Triplet>& triplets,
                                           std::size_t count) {
  const DomainMode mode = corpus.mode();
  const bool doubled = mode == DomainMode::Scientific || mode == DomainMode::Legal;
  if (triplets.size() != (doubled ? 2 * count : count)) return "wrong triplet count " + std::to_string(triplets.size());
  auto key = [&](const Document& d) -> std::string {
    if (d.category) return *d.category;
    const auto& h = *d.hierarchy;
    return h.size() >= 2 ? h[1] : h[0];
  };
  auto overlap = [](const std::set<std::string>& x, const std::set<std::string>& y) {
    for (const auto& c : x)
      if (y.count(c)) return true;
    return false;
  };
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (t.anchor_id == t.positive_id || t.anchor_id == t.negative_id) return "self pair at " + std::to_string(k);
    const auto &a = corpus.find(t.anchor_id), &p = corpus.find(t.positive_id), &n = corpus.find(t.negative_id);
    if (mode == DomainMode::Legal) {
      if (!overlap(*a.concepts, *p.concepts)) return "positive shares no concept at " + std::to_string(k);
      if (overlap(*a.concepts, *n.concepts)) return "negative shares a concept at " + std::to_string(k);
    } else {
      if (key(a) != key(p)) return "positive category differs at " + std::to_string(k);
      if (key(a) == key(n)) return "negative category matches at " + std::to_string(k);
    }
    if (doubled && k % 2 == 1) {
      const auto& o = triplets[k - 1];
      if (t.anchor_id != o.positive_id || t.positive_id != o.anchor_id || t.negative_id != o.negative_id) {
        return "swapped copy missing at " + std::to_string(k);
      }
    }
  }
  return {};
}

inline std::string check_rouge_triplets(const Corpus& corpus, const std::vector<Triplet>& triplets, std::size_t count,
                                        const RougeMiningConfig& cfg) {
  if (triplets.size() != count) return "wrong triplet count " + std::to_string(triplets.size());
  auto toks = [&](const std::string& id) {
    auto t = rouge_tokens(corpus.find(id).text());
    if (t.size() > cfg.truncate_tokens) t.resize(cfg.truncate_tokens);
    return t;
  };
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (t.anchor_id == t.positive_id || t.anchor_id == t.negative_id) return "self pair at " + std::to_string(k);
    const auto a = toks(t.anchor_id);
    if (brute_force_rouge_f1(a, toks(t.positive_id)) < cfg.pos_threshold) return "weak positive at " + std::to_string(k);
    if (brute_force_rouge_f1(a, toks(t.negative_id)) > cfg.neg_threshold) return "close negative at " + std::to_string(k);
  }
  return {};
}

/// Random small corpus for miner property tests.
inline Corpus random_corpus(Rng& rng, DomainMode mode) {
  static const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  Corpus c(mode);
  const std::size_t n = 3 + rng.index(10);
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    std::string sentence;
    const std::size_t len = 2 + rng.index(8);
    for (std::size_t w = 0; w < len; ++w) sentence += (w ? " " : "") + words[rng.index(rng.uniform() < 0.5 ? 3 : 8)];
    d.sentences = {sentence + "."};
    const std::string cat = "c" + std::to_string(rng.index(3));
    if (mode == DomainMode::CustomerSupport) d.category = cat;
    if (mode == DomainMode::Scientific) {
      if (rng.uniform() < 0.5) d.hierarchy = std::vector<std::string>{"root" + std::to_string(rng.index(2)), cat};
      else d.category = cat;
    }
    if (mode == DomainMode::Legal) {
      std::set<std::string> concepts;
      const std::size_t k = 1 + rng.index(2);
      for (std::size_t j = 0; j < k; ++j) concepts.insert("k" + std::to_string(rng.index(4)));
      d.concepts = concepts;
    }
    c.add(std::move(d));
  }
  return c;
}

}  // namespace fastdoc::testing
