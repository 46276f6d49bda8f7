// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fastdoc/errors.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

/// Reserved vocabulary slots. Hashed words occupy [kNumSpecialTokens, V).
inline constexpr std::size_t kClsToken = 0;
inline constexpr std::size_t kSepToken = 1;
inline constexpr std::size_t kMaskToken = 2;
inline constexpr std::size_t kNumSpecialTokens = 3;

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Sentence segmentation: a boundary follows '.', '?' or '!' when the next
/// characters are whitespace and then an uppercase letter or a digit.
inline std::vector<std::string> split_sentences(std::string_view text) {
  if (trim(text).empty()) throw EmptyDocumentError("split_sentences: document text is empty");
  std::vector<std::string> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  auto flush = [&](std::size_t end) {
    auto seg = trim(text.substr(start, end - start));
    if (!seg.empty()) out.emplace_back(seg);
    start = end;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    if (i + 1 >= n || !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    std::size_t j = i + 1;
    while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j < n && (std::isupper(static_cast<unsigned char>(text[j])) ||
                  std::isdigit(static_cast<unsigned char>(text[j])))) {
      flush(i + 1);
    }
  }
  flush(n);
  return out;
}

/// Whitespace split, lowercase, leading/trailing punctuation stripped.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view w = text.substr(i, j - i);
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.remove_suffix(1);
    if (!w.empty()) out.push_back(to_lower(w));
    i = j;
  }
  return out;
}

/// Alphanumeric runs, lowercased. Used for label and tf-idf term matching.
inline std::vector<std::string> alnum_terms(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::size_t hash_token_id(std::string_view word, std::size_t vocab_size) {
  return kNumSpecialTokens + static_cast<std::size_t>(fnv1a64(word) % (vocab_size - kNumSpecialTokens));
}

/// Hash-to-vocabulary tokenizer shared by the sentence featurizer and the
/// fine-tuning token path.
inline std::vector<std::size_t> tokenize_ids(std::string_view text, std::size_t vocab_size) {
  std::vector<std::size_t> ids;
  for (const auto& w : word_tokens(text)) ids.push_back(hash_token_id(w, vocab_size));
  return ids;
}

}  // namespace fastdoc
