// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/data/taxonomy.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

/// Lexically separable corpus: each category and subcategory owns a private
/// vocabulary; a small filler vocabulary is shared by all documents.
struct SyntheticCorpusSpec {
  std::size_t num_categories = 3;
  std::size_t docs_per_category = 20;
  std::size_t subcategories = 2;
  std::size_t sentences_per_doc = 5;
  std::size_t words_per_sentence = 8;
  std::size_t category_vocab = 12;
  std::size_t subcategory_vocab = 6;
  double filler_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  Corpus corpus;
  Taxonomy taxonomy;
  std::vector<std::vector<std::string>> category_words;
  std::vector<std::string> filler_words;
  /// Category index per document, parallel to corpus.documents().
  std::vector<std::size_t> category_of;
};

inline const std::vector<std::string>& synthetic_filler_words() {
  static const std::vector<std::string> words{"the", "and", "with", "device", "system", "use",
                                              "for", "this", "unit", "model", "each", "your"};
  return words;
}

/// Deterministic pronounceable pseudo-words, unique across calls that share `used`.
inline std::vector<std::string> pseudo_words(std::size_t count, Rng& rng, std::set<std::string>& used) {
  static const char* const onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* const vowels[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    const std::size_t syllables = 2 + rng.index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += onsets[rng.index(std::size(onsets))];
      w += vowels[rng.index(std::size(vowels))];
    }
    if (used.insert(w).second) out.push_back(w);
  }
  return out;
}

inline SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusSpec& spec, DomainMode mode) {
  Rng rng(derive_seed(spec.seed, "synthetic.corpus"));
  std::set<std::string> used(synthetic_filler_words().begin(), synthetic_filler_words().end());
  SyntheticCorpus out{Corpus(mode), {}, {}, synthetic_filler_words(), {}};

  std::vector<std::string> names;
  std::vector<std::vector<std::string>> sub_words;
  std::vector<HierarchyPath> paths;
  for (std::size_t c = 0; c < spec.num_categories; ++c) {
    names.push_back("topic " + pseudo_words(1, rng, used).front());
    out.category_words.push_back(pseudo_words(spec.category_vocab, rng, used));
    for (std::size_t s = 0; s < spec.subcategories; ++s) {
      sub_words.push_back(pseudo_words(spec.subcategory_vocab, rng, used));
      paths.push_back({names[c], names[c] + " part " + std::to_string(s + 1)});
    }
  }
  out.taxonomy = Taxonomy::from_paths(paths);

  for (std::size_t c = 0; c < spec.num_categories; ++c) {
    for (std::size_t i = 0; i < spec.docs_per_category; ++i) {
      const std::size_t sub = spec.subcategories ? i % spec.subcategories : 0;
      const auto& sw = sub_words.empty() ? out.category_words[c] : sub_words[c * spec.subcategories + sub];
      Document d;
      d.id = "doc-" + std::to_string(c) + "-" + std::to_string(i);
      for (std::size_t s = 0; s < spec.sentences_per_doc; ++s) {
        std::string sentence;
        for (std::size_t w = 0; w < spec.words_per_sentence; ++w) {
          const double r = rng.uniform();
          std::string word;
          if (r < spec.filler_fraction) {
            word = out.filler_words[rng.index(out.filler_words.size())];
          } else if (r < spec.filler_fraction + (1 - spec.filler_fraction) * 0.7) {
            word = out.category_words[c][rng.index(out.category_words[c].size())];
          } else {
            word = sw[rng.index(sw.size())];
          }
          if (w == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
          sentence += (w ? " " : "") + word;
        }
        d.sentences.push_back(sentence + ".");
      }
      d.category = names[c];
      HierarchyPath path = spec.subcategories ? paths[c * spec.subcategories + sub] : HierarchyPath{names[c]};
      d.hierarchy = path;
      d.concepts = std::set<std::string>{names[c], path.back()};
      out.corpus.add(std::move(d));
      out.category_of.push_back(c);
    }
  }
  return out;
}

}  // namespace fastdoc
