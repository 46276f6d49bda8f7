// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fastdoc/encoder/modules.hpp"
#include "fastdoc/encoder/text.hpp"
#include "fastdoc/log.hpp"
#include "fastdoc/numcore/optim.hpp"

namespace fastdoc {

inline const std::vector<std::string>& lora_target_labels() {
  static const std::vector<std::string> labels{"query", "key", "value", "output", "ffn"};
  return labels;
}

struct LoraConfig {
  std::size_t rank = 0;
  std::vector<std::string> targets{"query", "value"};

  bool active() const { return rank > 0; }
  bool operator==(const LoraConfig&) const = default;
};

struct ModelConfig {
  std::size_t d_model = 32;
  std::size_t num_heads = 4;
  std::size_t num_layers = 2;
  std::size_t d_ff = 64;
  std::size_t lower_layers = 2;
  std::size_t vocab_size = 8192;
  std::size_t max_positions = 128;
  std::size_t max_sentences = 64;
  /// Seed of the stand-in open-domain model (embeddings, lower encoder, and
  /// by default the upper encoder's initial weights).
  std::uint64_t seed = 0;
  /// When set, the upper encoder is initialised from this seed instead.
  std::optional<std::uint64_t> upper_seed;
  /// Real class count per taxonomy level (the null class is added on top).
  std::vector<std::size_t> level_classes;
  LoraConfig lora;

  StackShape stack() const { return {d_model, num_heads, d_ff}; }
  bool operator==(const ModelConfig&) const = default;
};

template <class T = float>
struct NamedParam {
  std::string name;
  std::string group;
  Tensor<T> tensor;
};

/// Frozen sentence featurizer: hashed tokens through a copy of the first
/// layers of the open-domain stack, mean-pooled.
template <class T = float>
class LowerEncoder {
 public:
  LowerEncoder(const ModelConfig& cfg)
      : seed_(cfg.seed),
        table_(cfg.seed, cfg.vocab_size, cfg.max_positions, cfg.d_model, false),
        layers_(open_domain_layers<T>(cfg.seed, cfg.lower_layers, cfg.stack(), false)) {}

  std::uint64_t seed() const { return seed_; }
  std::size_t d_model() const { return table_.d_model(); }

  /// Embedding of one sentence: [d].
  Tensor<T> embed(std::string_view sentence) const {
    std::vector<std::size_t> ids{kClsToken};
    for (std::size_t id : tokenize_ids(sentence, table_.vocab_size())) ids.push_back(id);
    if (ids.size() > table_.max_positions()) {
      warn("sentence truncated from " + std::to_string(ids.size()) + " to " +
           std::to_string(table_.max_positions()) + " tokens");
      ids.resize(table_.max_positions());
    }
    Tensor<T> x = table_.embed(ids);
    for (const auto& layer : layers_) x = layer.forward(x);
    return mean_rows(x);
  }

  std::vector<NamedParam<T>> named_parameters() const {
    std::vector<NamedParam<T>> out;
    out.push_back({"lower.embeddings.tokens", "lower.featurizer", table_.tokens});
    out.push_back({"lower.embeddings.positions", "lower.featurizer", table_.positions});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      const std::string p = "lower.layer" + std::to_string(i) + ".";
      for (auto [n, lin] : {std::pair{"query", &l.query}, {"key", &l.key}, {"value", &l.value},
                            {"output", &l.output}, {"ffn_in", &l.ffn_in}, {"ffn_out", &l.ffn_out}}) {
        out.push_back({p + n + ".weight", "lower.featurizer", lin->weight()});
        out.push_back({p + n + ".bias", "lower.featurizer", lin->bias()});
      }
      out.push_back({p + "attn_norm.gain", "lower.featurizer", l.attn_norm.gain});
      out.push_back({p + "attn_norm.bias", "lower.featurizer", l.attn_norm.bias});
      out.push_back({p + "ffn_norm.gain", "lower.featurizer", l.ffn_norm.gain});
      out.push_back({p + "ffn_norm.bias", "lower.featurizer", l.ffn_norm.bias});
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  EmbeddingTable<T> table_;
  std::vector<TransformerLayer<T>> layers_;
};

/// Trainable encoder over any sequence of d_model-wide rows.
template <class T = float>
class UpperEncoder {
 public:
  UpperEncoder(const ModelConfig& cfg)
      : d_model_(cfg.d_model),
        layers_(open_domain_layers<T>(cfg.upper_seed.value_or(cfg.seed), cfg.num_layers, cfg.stack(), true)) {}

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t d_model() const { return d_model_; }

  Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* attention = nullptr) const {
    if (x.rank() != 2 || x.dim(1) != d_model_) {
      throw DimensionError("upper encoder expects [S x " + std::to_string(d_model_) + "], got " +
                           shape_str(x.shape()));
    }
    Tensor<T> h = x;
    for (const auto& layer : layers_) h = layer.forward(h, attention);
    return h;
  }

  /// Attach adapters and freeze the base weights. Returns the number of
  /// adapter parameters. Rank 0 leaves the encoder untouched.
  std::size_t apply_lora(const LoraConfig& cfg, std::uint64_t seed) {
    std::set<std::string> targets;
    for (const auto& t : cfg.targets) {
      const auto& known = lora_target_labels();
      if (std::find(known.begin(), known.end(), t) == known.end()) {
        throw ConfigError("unknown LoRA target '" + t + "' (expected query, key, value, output or ffn)");
      }
      targets.insert(t);
    }
    if (cfg.rank == 0) return 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Rng rng(derive_seed(seed, "lora.layer" + std::to_string(i)));
      for (const auto& [target, name, lin] : adaptable(layers_[i])) {
        if (!targets.count(target)) continue;
        lin->attach_lora(cfg.rank, rng);
        count += cfg.rank * (lin->in_features() + lin->out_features());
      }
    }
    for (auto& p : base_parameters()) p.tensor.set_requires_grad(false);
    return count;
  }

  std::vector<NamedParam<T>> named_parameters() const {
    auto out = base_parameters();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const std::string p = "upper.layer" + std::to_string(i) + ".lora.";
      for (const auto& [target, name, lin] : adaptable(layers_[i])) {
        if (!lin->lora()) continue;
        out.push_back({p + name + ".down", "lora." + target, lin->lora()->down});
        out.push_back({p + name + ".up", "lora." + target, lin->lora()->up});
      }
    }
    return out;
  }

 private:
  template <class Layer>
  static auto adaptable(Layer& l) {
    using Ptr = decltype(&l.query);
    struct Entry {
      std::string target;
      std::string name;
      Ptr lin;
    };
    return std::vector<Entry>{{"query", "query", &l.query},     {"key", "key", &l.key},
                              {"value", "value", &l.value},     {"output", "output", &l.output},
                              {"ffn", "ffn_in", &l.ffn_in},     {"ffn", "ffn_out", &l.ffn_out}};
  }

  std::vector<NamedParam<T>> base_parameters() const {
    std::vector<NamedParam<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      const std::string p = "upper.layer" + std::to_string(i) + ".";
      auto lin = [&](const char* n, const char* group, const Linear<T>& m) {
        out.push_back({p + n + ".weight", group, m.weight()});
        out.push_back({p + n + ".bias", group, m.bias()});
      };
      lin("attn.query", "upper.attn.query", l.query);
      lin("attn.key", "upper.attn.key", l.key);
      lin("attn.value", "upper.attn.value", l.value);
      lin("attn.output", "upper.attn.output", l.output);
      lin("ffn.intermediate", "upper.ffn.intermediate", l.ffn_in);
      lin("ffn.output", "upper.ffn.output", l.ffn_out);
      out.push_back({p + "attn_norm.gain", "upper.layernorm", l.attn_norm.gain});
      out.push_back({p + "attn_norm.bias", "upper.layernorm", l.attn_norm.bias});
      out.push_back({p + "ffn_norm.gain", "upper.layernorm", l.ffn_norm.gain});
      out.push_back({p + "ffn_norm.bias", "upper.layernorm", l.ffn_norm.bias});
    }
    return out;
  }

  std::size_t d_model_;
  std::vector<TransformerLayer<T>> layers_;
};

/// One affine map per taxonomy level (local classifier per level). Level l
/// emits C_l + 1 logits, the last being the null class. Initialised to zero.
template <class T = float>
class ClassificationHeads {
 public:
  ClassificationHeads(std::size_t d_model, const std::vector<std::size_t>& level_classes) {
    for (std::size_t c : level_classes) heads_.push_back(Linear<T>::zeros(d_model, c + 1));
  }

  std::size_t depth() const { return heads_.size(); }
  std::size_t width(std::size_t level) const { return heads_.at(level).out_features(); }
  const Linear<T>& level(std::size_t i) const { return heads_.at(i); }
  Linear<T>& level(std::size_t i) { return heads_.at(i); }

  std::vector<Tensor<T>> forward(const Tensor<T>& doc_vector) const {
    const std::size_t d = doc_vector.numel();
    if (!heads_.empty() && d != heads_.front().in_features()) {
      throw DimensionError("classification heads expect width " + std::to_string(heads_.front().in_features()) +
                           ", got " + shape_str(doc_vector.shape()));
    }
    const Tensor<T> x = reshape(doc_vector, {1, d});
    std::vector<Tensor<T>> out;
    for (const auto& h : heads_) out.push_back(reshape(h(x), {h.out_features()}));
    return out;
  }

  std::vector<NamedParam<T>> named_parameters() const {
    std::vector<NamedParam<T>> out;
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      const std::string g = "heads.level" + std::to_string(i + 1);
      out.push_back({g + ".weight", g, heads_[i].weight()});
      out.push_back({g + ".bias", g, heads_[i].bias()});
    }
    return out;
  }

 private:
  std::vector<Linear<T>> heads_;
};

/// Frozen lower encoder + trainable upper encoder + token embedding table +
/// hierarchical heads. The upper encoder consumes sentence embeddings during
/// pre-training and token embeddings during fine-tuning.
template <class T = float>
class FastDocModel {
 public:
  explicit FastDocModel(ModelConfig cfg)
      : cfg_(std::move(cfg)),
        lower_(cfg_),
        upper_(cfg_),
        embeddings_(cfg_.seed, cfg_.vocab_size, cfg_.max_positions, cfg_.d_model, false),
        heads_(cfg_.d_model, cfg_.level_classes) {
    if (cfg_.d_model == 0) throw ConfigError("d_model must be positive");
    if (cfg_.vocab_size <= kNumSpecialTokens) throw ConfigError("vocab_size too small");
    if (cfg_.max_sentences == 0) throw ConfigError("max_sentences must be positive");
    if (cfg_.lora.active()) upper_.apply_lora(cfg_.lora, derive_seed(cfg_.seed, "lora"));
  }

  /// Deep copy: same configuration, independent parameter storage.
  FastDocModel clone() const {
    FastDocModel copy(cfg_);
    auto src = named_parameters();
    auto dst = copy.named_parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
      auto out = dst[i].tensor.mutable_data();
      std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), out.begin());
      if (!src[i].tensor.requires_grad()) dst[i].tensor.set_requires_grad(false);
      else dst[i].tensor.set_requires_grad(true);
    }
    return copy;
  }

  const ModelConfig& config() const { return cfg_; }
  const LowerEncoder<T>& lower() const { return lower_; }
  const UpperEncoder<T>& upper() const { return upper_; }
  const EmbeddingTable<T>& embeddings() const { return embeddings_; }
  const ClassificationHeads<T>& heads() const { return heads_; }
  ClassificationHeads<T>& heads() { return heads_; }

  /// Sentence embeddings of a document, [S x d]. Documents longer than
  /// max_sentences are truncated with a warning.
  Tensor<T> embed_sentences(std::span<const std::string> sentences) const {
    if (sentences.empty()) throw EmptyDocumentError("document has no sentences");
    std::size_t s = sentences.size();
    if (s > cfg_.max_sentences) {
      warn("document truncated from " + std::to_string(s) + " to " + std::to_string(cfg_.max_sentences) +
           " sentences");
      s = cfg_.max_sentences;
    }
    std::vector<Tensor<T>> rows;
    rows.reserve(s);
    for (std::size_t i = 0; i < s; ++i) rows.push_back(lower_.embed(sentences[i]));
    return stack_rows(rows);
  }

  /// Document vector from precomputed sentence embeddings: mean of upper outputs.
  Tensor<T> encode_sentence_matrix(const Tensor<T>& sentence_matrix) const {
    return mean_rows(upper_.forward(sentence_matrix));
  }

  Tensor<T> encode_document(std::span<const std::string> sentences) const {
    return encode_sentence_matrix(embed_sentences(sentences));
  }

  /// Contextual token representations, [T x d].
  Tensor<T> forward_tokens(std::span<const std::size_t> ids) const {
    return upper_.forward(embeddings_.embed(ids));
  }

  std::vector<Tensor<T>> classify_hierarchy(const Tensor<T>& doc_vector) const {
    return heads_.forward(doc_vector);
  }

  /// Attach adapters to the upper encoder. Returns the adapter parameter count.
  std::size_t apply_lora(const LoraConfig& lora) {
    if (cfg_.lora.active()) throw ConfigError("LoRA adapters are already attached");
    const std::size_t n = upper_.apply_lora(lora, derive_seed(cfg_.seed, "lora"));
    if (lora.active()) cfg_.lora = lora;
    return n;
  }

  /// Every parameter tensor with its name and drift group, in a fixed order.
  std::vector<NamedParam<T>> named_parameters() const {
    std::vector<NamedParam<T>> out = lower_.named_parameters();
    out.push_back({"embeddings.tokens", "embeddings.token", embeddings_.tokens});
    out.push_back({"embeddings.positions", "embeddings.position", embeddings_.positions});
    for (auto& p : upper_.named_parameters()) out.push_back(std::move(p));
    for (auto& p : heads_.named_parameters()) out.push_back(std::move(p));
    return out;
  }

  /// Groups in first-appearance order; a group is frozen when its tensors do
  /// not require grad.
  std::vector<ParamGroup<T>> param_groups() const {
    std::vector<ParamGroup<T>> groups;
    std::map<std::string, std::size_t> index;
    for (auto& p : named_parameters()) {
      auto [it, fresh] = index.emplace(p.group, groups.size());
      if (fresh) {
        groups.push_back(ParamGroup<T>{p.group, {}, {}, !p.tensor.requires_grad()});
      }
      groups[it->second].add(p.name, p.tensor);
    }
    return groups;
  }

  /// Freeze or unfreeze every group whose name starts with `prefix`. The
  /// lower featurizer cannot be unfrozen.
  void set_trainable(const std::string& prefix, bool trainable) {
    for (auto& p : named_parameters()) {
      if (p.group.rfind(prefix, 0) != 0) continue;
      if (trainable && p.group.rfind("lower.", 0) == 0) throw ContractError("the lower encoder is frozen");
      p.tensor.set_requires_grad(trainable);
    }
  }

 private:
  ModelConfig cfg_;
  LowerEncoder<T> lower_;
  UpperEncoder<T> upper_;
  EmbeddingTable<T> embeddings_;
  ClassificationHeads<T> heads_;
};

}  // namespace fastdoc
