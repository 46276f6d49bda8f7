// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fastdoc/data/document.hpp"
#include "fastdoc/encoder/text.hpp"
#include "fastdoc/errors.hpp"
#include "fastdoc/log.hpp"

namespace fastdoc {

enum class DomainMode { CustomerSupport, Scientific, Legal, Derived };

inline DomainMode parse_domain_mode(const std::string& s) {
  if (s == "customer_support") return DomainMode::CustomerSupport;
  if (s == "scientific") return DomainMode::Scientific;
  if (s == "legal") return DomainMode::Legal;
  if (s == "derived") return DomainMode::Derived;
  throw ConfigError("unknown domain mode '" + s + "' (expected customer_support, scientific, legal or derived)");
}

inline std::string to_string(DomainMode m) {
  switch (m) {
    case DomainMode::CustomerSupport:
      return "customer_support";
    case DomainMode::Scientific:
      return "scientific";
    case DomainMode::Legal:
      return "legal";
    case DomainMode::Derived:
      return "derived";
  }
  return "?";
}

/// Category used to pair documents in the category-based modes. Scientific
/// documents without an explicit category fall back to their level-2 label.
inline std::optional<std::string> primary_category(const Document& d, DomainMode mode) {
  if (d.category) return d.category;
  if (mode == DomainMode::Scientific && d.hierarchy && !d.hierarchy->empty()) {
    return d.hierarchy->size() >= 2 ? (*d.hierarchy)[1] : d.hierarchy->front();
  }
  return std::nullopt;
}

class Corpus {
 public:
  explicit Corpus(DomainMode mode = DomainMode::Derived) : mode_(mode) {}

  /// Appends a document; ids must be unique.
  void add(Document doc) {
    if (doc.sentences.empty()) throw ValidationError("document '" + doc.id + "' has no sentences");
    if (!index_.emplace(doc.id, docs_.size()).second) {
      throw ValidationError("duplicate document id '" + doc.id + "'");
    }
    docs_.push_back(std::move(doc));
  }

  DomainMode mode() const { return mode_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }
  const Document& operator[](std::size_t i) const { return docs_[i]; }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown document id '" + id + "'");
    return it->second;
  }
  const Document& find(const std::string& id) const { return docs_[index_of(id)]; }

 private:
  DomainMode mode_;
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* field, std::size_t line) {
  if (!j.is_array()) throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) {
      throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must hold strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// One corpus record. `line` is 1-based and only used in messages.
inline Document parse_document(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(line) + ": malformed record: " + e.what());
  }
  if (!j.is_object()) throw ParseError("line " + std::to_string(line) + ": record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) {
    throw ParseError("line " + std::to_string(line) + ": record is missing string field \"id\"");
  }
  Document d;
  d.id = j["id"].get<std::string>();
  if (j.contains("sentences")) {
    d.sentences = detail::string_list(j["sentences"], "sentences", line);
  } else if (j.contains("text")) {
    if (!j["text"].is_string()) throw ParseError("line " + std::to_string(line) + ": field 'text' must be a string");
    try {
      d.sentences = split_sentences(j["text"].get<std::string>());
    } catch (const EmptyDocumentError&) {
      throw ValidationError("line " + std::to_string(line) + ": document '" + d.id + "' has empty text");
    }
  } else {
    throw ParseError("line " + std::to_string(line) + ": record '" + d.id + "' has neither \"text\" nor \"sentences\"");
  }
  if (d.sentences.empty()) {
    throw ValidationError("line " + std::to_string(line) + ": document '" + d.id + "' has no sentences");
  }
  if (j.contains("category") && !j["category"].is_null()) {
    if (!j["category"].is_string()) {
      throw ParseError("line " + std::to_string(line) + ": field 'category' must be a string");
    }
    d.category = j["category"].get<std::string>();
  }
  if (j.contains("hierarchy") && !j["hierarchy"].is_null()) {
    d.hierarchy = detail::string_list(j["hierarchy"], "hierarchy", line);
  }
  if (j.contains("concepts") && !j["concepts"].is_null()) {
    auto list = detail::string_list(j["concepts"], "concepts", line);
    d.concepts = std::set<std::string>(list.begin(), list.end());
  }
  return d;
}

inline nlohmann::json document_to_json(const Document& d) {
  nlohmann::json j;
  j["id"] = d.id;
  j["sentences"] = d.sentences;
  if (d.category) j["category"] = *d.category;
  if (d.hierarchy) j["hierarchy"] = *d.hierarchy;
  if (d.concepts) j["concepts"] = std::vector<std::string>(d.concepts->begin(), d.concepts->end());
  return j;
}

inline void require_mode_fields(const Document& d, DomainMode mode, std::size_t line) {
  const std::string where = "line " + std::to_string(line) + ": document '" + d.id + "'";
  switch (mode) {
    case DomainMode::CustomerSupport:
      if (!d.category) throw ValidationError(where + " lacks the 'category' required in customer_support mode");
      break;
    case DomainMode::Scientific:
      if (!primary_category(d, mode)) {
        throw ValidationError(where + " lacks 'category' or 'hierarchy' required in scientific mode");
      }
      break;
    case DomainMode::Legal:
      if (!d.concepts) throw ValidationError(where + " lacks the 'concepts' required in legal mode");
      break;
    case DomainMode::Derived:
      break;
  }
}

inline Corpus parse_corpus(std::istream& in, DomainMode mode) {
  Corpus corpus(mode);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    Document d = parse_document(text, line);
    require_mode_fields(d, mode, line);
    if (corpus.contains(d.id)) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate document id '" + d.id + "'");
    }
    corpus.add(std::move(d));
  }
  if (corpus.empty()) warn("corpus is empty");
  return corpus;
}

inline Corpus load_corpus(const std::string& path, DomainMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  return parse_corpus(in, mode);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents()) out << document_to_json(d).dump() << '\n';
}

struct Triplet {
  std::string anchor_id;
  std::string positive_id;
  std::string negative_id;

  bool operator==(const Triplet&) const = default;
};

inline void write_triplets(std::ostream& out, const std::vector<Triplet>& triplets) {
  for (const auto& t : triplets) {
    nlohmann::json j{{"anchor_id", t.anchor_id}, {"positive_id", t.positive_id}, {"negative_id", t.negative_id}};
    out << j.dump() << '\n';
  }
}

inline std::vector<Triplet> parse_triplets(std::istream& in) {
  std::vector<Triplet> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line) + ": malformed triplet: " + e.what());
    }
    for (const char* f : {"anchor_id", "positive_id", "negative_id"}) {
      if (!j.contains(f) || !j[f].is_string()) {
        throw ParseError("line " + std::to_string(line) + ": triplet is missing string field \"" + f + "\"");
      }
    }
    out.push_back({j["anchor_id"], j["positive_id"], j["negative_id"]});
  }
  return out;
}

inline std::vector<Triplet> load_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open triplet file '" + path + "'");
  return parse_triplets(in);
}

}  // namespace fastdoc
