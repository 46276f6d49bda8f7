// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/data/rouge.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

/// Worker threads for fan-out loops: FASTDOC_THREADS, default 1.
inline std::size_t worker_threads() {
  if (const char* v = std::getenv("FASTDOC_THREADS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return 1;
}

/// Whether the mode appends an anchor/positive-swapped copy of each triplet.
inline bool doubles_triplets(DomainMode mode) {
  return mode == DomainMode::Scientific || mode == DomainMode::Legal;
}

namespace detail {

inline bool share_concept(const std::set<std::string>& a, const std::set<std::string>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

inline std::string join_set(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? ", " : "") + x;
  return out + "}";
}

}  // namespace detail

/// Samples `count` triplets from metadata: shared category (customer support,
/// scientific) or shared concepts (legal) mark positives, their absence marks
/// negatives. Scientific and legal modes also emit each triplet with anchor
/// and positive swapped, directly after the original.
inline std::vector<Triplet> mine_triplets_metadata(const Corpus& corpus, std::size_t count, std::uint64_t seed) {
  const DomainMode mode = corpus.mode();
  if (mode == DomainMode::Derived) {
    throw ConfigError("metadata mining needs customer_support, scientific or legal mode; use ROUGE-L mining");
  }
  const std::size_t n = corpus.size();
  std::vector<std::vector<std::size_t>> positives(n), negatives(n);

  if (mode == DomainMode::Legal) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ci = corpus[i].concepts.value();
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        (detail::share_concept(ci, corpus[j].concepts.value()) ? positives[i] : negatives[i]).push_back(j);
      }
    }
  } else {
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto k = primary_category(corpus[i], mode);
      if (!k) throw ValidationError("document '" + corpus[i].id + "' has no category");
      keys[i] = *k;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        (keys[i] == keys[j] ? positives[i] : negatives[i]).push_back(j);
      }
  }

  auto joint_negatives = [&](std::size_t a, std::size_t p) {
    if (mode != DomainMode::Legal) return negatives[a];
    std::vector<std::size_t> out;
    for (std::size_t q : negatives[a])
      if (!detail::share_concept(corpus[p].concepts.value(), corpus[q].concepts.value())) out.push_back(q);
    return out;
  };
  if (mode == DomainMode::Legal) {
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::size_t> usable;
      for (std::size_t p : positives[a])
        if (!joint_negatives(a, p).empty()) usable.push_back(p);
      positives[a] = std::move(usable);
    }
  }

  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i)
    if (!positives[i].empty() && !negatives[i].empty()) anchors.push_back(i);
  if (anchors.empty() && count > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (negatives[i].empty() && (!positives[i].empty() || n == 1)) {
        const std::string what = mode == DomainMode::Legal ? "concept set " + detail::join_set(*corpus[i].concepts)
                                                            : "category '" + *primary_category(corpus[i], mode) + "'";
        throw NoNegativeAvailable("no negative document exists for " + what);
      }
    }
    if (mode == DomainMode::Legal) {
      for (std::size_t i = 0; i < n; ++i)
        if (!negatives[i].empty())
          throw NoNegativeAvailable("no document is disjoint from both an anchor and its positive in legal mode");
    }
    throw NoPositiveAvailable("no document has a positive partner in " + to_string(mode) + " mode");
  }

  Rng rng(derive_seed(seed, "mine.metadata"));
  std::vector<Triplet> out;
  out.reserve(doubles_triplets(mode) ? 2 * count : count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t a = anchors[rng.index(anchors.size())];
    const std::size_t p = positives[a][rng.index(positives[a].size())];
    const auto candidates = joint_negatives(a, p);
    const std::size_t q = candidates[rng.index(candidates.size())];
    out.push_back({corpus[a].id, corpus[p].id, corpus[q].id});
    if (doubles_triplets(mode)) out.push_back({corpus[p].id, corpus[a].id, corpus[q].id});
  }
  return out;
}

/// Symmetric matrix of ROUGE-L F1 over the first `truncate_tokens` tokens of
/// each document. Pairs are scored in parallel and stored by (i, j).
inline std::vector<std::vector<double>> pairwise_rouge_f1(const Corpus& corpus, std::size_t truncate_tokens,
                                                          std::size_t threads = worker_threads()) {
  const std::size_t n = corpus.size();
  std::vector<std::vector<std::string>> toks(n);
  for (std::size_t i = 0; i < n; ++i) {
    toks[i] = rouge_tokens(corpus[i].text());
    if (toks[i].size() > truncate_tokens) toks[i].resize(truncate_tokens);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> scores(pairs.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) scores[k] = rouge_l(toks[pairs[k].first], toks[pairs[k].second]).f1;
  };
  threads = std::max<std::size_t>(1, std::min(threads, pairs.size()));
  if (threads == 1) {
    work(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pairs.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk, hi = std::min(pairs.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  std::vector<std::vector<double>> f1(n, std::vector<double>(n, 1.0));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    f1[pairs[k].first][pairs[k].second] = scores[k];
    f1[pairs[k].second][pairs[k].first] = scores[k];
  }
  return f1;
}

struct RougeMiningConfig {
  double pos_threshold = 0.35;
  double neg_threshold = 0.10;
  std::size_t truncate_tokens = 512;
};

/// Content-similarity triplets for corpora without metadata: positives have
/// F1 >= pos_threshold with the anchor, negatives F1 <= neg_threshold.
inline std::vector<Triplet> mine_triplets_rouge(const Corpus& corpus, std::size_t count, std::uint64_t seed,
                                                const RougeMiningConfig& cfg = {}) {
  if (corpus.size() < 3) {
    throw ValidationError("ROUGE-L mining needs at least 3 documents, got " + std::to_string(corpus.size()));
  }
  const auto f1 = pairwise_rouge_f1(corpus, cfg.truncate_tokens);
  const std::size_t n = corpus.size();
  std::vector<std::vector<std::size_t>> pos(n), neg(n);
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (f1[i][j] >= cfg.pos_threshold) pos[i].push_back(j);
      if (f1[i][j] <= cfg.neg_threshold) neg[i].push_back(j);
    }
    if (!pos[i].empty() && !neg[i].empty()) anchors.push_back(i);
  }
  if (anchors.empty() && count > 0) {
    throw MiningExhausted("no document has both a positive (F1 >= " + std::to_string(cfg.pos_threshold) +
                          ") and a negative (F1 <= " + std::to_string(cfg.neg_threshold) + ") partner");
  }
  Rng rng(derive_seed(seed, "mine.rouge"));
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t a = anchors[rng.index(anchors.size())];
    const std::size_t p = pos[a][rng.index(pos[a].size())];
    const std::size_t q = neg[a][rng.index(neg[a].size())];
    out.push_back({corpus[a].id, corpus[p].id, corpus[q].id});
  }
  return out;
}

}  // namespace fastdoc
