// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fastdoc/data/synthetic.hpp"
#include "fastdoc/encoder/text.hpp"
#include "fastdoc/errors.hpp"
#include "fastdoc/eval/metrics.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

/// Extractive QA example; `answer` indexes context tokens, inclusive.
struct SpanQaExample {
  std::vector<std::string> question;
  std::vector<std::string> context;
  Span answer;

  void validate() const {
    if (context.empty()) throw ValidationError("span QA example has an empty context");
    if (answer && (answer->first > answer->second || answer->second >= context.size())) {
      throw ValidationError("answer span [" + std::to_string(answer->first) + ", " + std::to_string(answer->second) +
                            "] is outside a context of " + std::to_string(context.size()) + " tokens");
    }
  }
};

/// Token sequence with per-token tags (token classification) or a single
/// label; `second` holds the other half of a pair-classification input.
struct LabeledSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> tags;
  std::size_t label = 0;
  std::vector<std::string> second;
};

namespace detail {

inline std::vector<std::string> json_tokens(const nlohmann::json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) throw ParseError("line " + std::to_string(line) + ": missing '" + field + "'");
  const auto& v = j[field];
  if (v.is_string()) return word_tokens(v.get<std::string>());
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ParseError("line " + std::to_string(line) + ": '" + field + "' must hold strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }
  throw ParseError("line " + std::to_string(line) + ": '" + field + "' must be a string or an array of strings");
}

template <class F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
    try {
      f(j, line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Records: {"question", "context", "answer": [start, end] or null}. Text
/// fields are whitespace-tokenized strings or token arrays.
inline std::vector<SpanQaExample> parse_span_qa(std::istream& in) {
  std::vector<SpanQaExample> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    SpanQaExample e{detail::json_tokens(j, "question", line), detail::json_tokens(j, "context", line), std::nullopt};
    if (j.contains("answer") && !j["answer"].is_null()) {
      const auto a = j["answer"].get<std::vector<std::size_t>>();
      if (a.size() != 2) throw ParseError("line " + std::to_string(line) + ": answer must be [start, end]");
      e.answer = std::pair{a[0], a[1]};
    }
    e.validate();
    out.push_back(std::move(e));
  });
  return out;
}

/// Records: {"tokens", "tags"}.
inline std::vector<LabeledSequence> parse_token_tagging(std::istream& in) {
  std::vector<LabeledSequence> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    LabeledSequence s;
    s.tokens = detail::json_tokens(j, "tokens", line);
    s.tags = j.at("tags").get<std::vector<std::size_t>>();
    if (s.tags.size() != s.tokens.size()) {
      throw ValidationError("line " + std::to_string(line) + ": " + std::to_string(s.tags.size()) + " tags for " +
                            std::to_string(s.tokens.size()) + " tokens");
    }
    out.push_back(std::move(s));
  });
  return out;
}

/// Records: {"a", "b", "label": 0 or 1}.
inline std::vector<LabeledSequence> parse_pairs(std::istream& in) {
  std::vector<LabeledSequence> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    LabeledSequence s;
    s.tokens = detail::json_tokens(j, "a", line);
    s.second = detail::json_tokens(j, "b", line);
    s.label = j.at("label").get<std::size_t>();
    out.push_back(std::move(s));
  });
  return out;
}

inline void write_span_qa(std::ostream& out, const std::vector<SpanQaExample>& v) {
  for (const auto& e : v) {
    nlohmann::json j{{"question", e.question}, {"context", e.context}};
    j["answer"] = e.answer ? nlohmann::json{e.answer->first, e.answer->second} : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

inline void write_token_tagging(std::ostream& out, const std::vector<LabeledSequence>& v) {
  for (const auto& s : v) out << nlohmann::json{{"tokens", s.tokens}, {"tags", s.tags}}.dump() << '\n';
}

inline void write_pairs(std::ostream& out, const std::vector<LabeledSequence>& v) {
  for (const auto& s : v) out << nlohmann::json{{"a", s.tokens}, {"b", s.second}, {"label", s.label}}.dump() << '\n';
}

/// Find-the-marked-span task: contexts of plain words containing one span
/// delimited by the marker tokens "<<" and ">>" (markers included in the
/// answer) around one to three inner words. A fraction of contexts has no
/// marked span and is unanswerable.
inline std::vector<SpanQaExample> make_marked_span_task(std::size_t count, std::uint64_t seed,
                                                        double unanswerable_fraction = 0.0) {
  Rng rng(derive_seed(seed, "task.marked-span"));
  std::set<std::string> used;
  const auto plain = pseudo_words(20, rng, used);
  std::vector<SpanQaExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    SpanQaExample e;
    e.question = {"where", "is", "the", "marked", "span"};
    const std::size_t len = 8 + rng.index(8);
    for (std::size_t k = 0; k < len; ++k) e.context.push_back(plain[rng.index(plain.size())]);
    if (rng.uniform() >= unanswerable_fraction) {
      const std::size_t inner = 1 + rng.index(3);
      const std::size_t start = rng.index(len - inner - 1);
      e.context[start] = "<<";
      e.context[start + inner + 1] = ">>";
      e.answer = std::pair{start, start + inner + 1};
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Token tagging over a synthetic corpus: every token of a sentence is tagged
/// with the sentence's category, so shared filler words need context.
inline std::vector<LabeledSequence> make_category_tagging_task(const SyntheticCorpus& sc, std::size_t count,
                                                               std::uint64_t seed) {
  Rng rng(derive_seed(seed, "task.category-tagging"));
  std::vector<LabeledSequence> out;
  const auto& docs = sc.corpus.documents();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t d = rng.index(docs.size());
    const auto& sentences = docs[d].sentences;
    LabeledSequence s;
    s.tokens = word_tokens(sentences[rng.index(sentences.size())]);
    s.tags.assign(s.tokens.size(), sc.category_of[d]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Duplicate detection: label 1 pairs a sentence with a shuffled copy of
/// itself, label 0 with a sentence of a different category.
inline std::vector<LabeledSequence> make_duplicate_pair_task(const SyntheticCorpus& sc, std::size_t count,
                                                             std::uint64_t seed) {
  Rng rng(derive_seed(seed, "task.duplicate-pair"));
  const auto& docs = sc.corpus.documents();
  auto pick = [&](std::size_t d) {
    const auto& s = docs[d].sentences;
    return word_tokens(s[rng.index(s.size())]);
  };
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t d = rng.index(docs.size());
    LabeledSequence s;
    s.tokens = pick(d);
    s.label = i % 2;
    if (s.label == 1) {
      s.second = s.tokens;
      rng.shuffle(s.second);
    } else {
      std::size_t other = rng.index(docs.size());
      for (std::size_t guard = 0; sc.category_of[other] == sc.category_of[d] && guard < 1000; ++guard) {
        other = rng.index(docs.size());
      }
      s.second = pick(other);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fastdoc
