// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fastdoc/numcore/ops.hpp"
#include "fastdoc/numcore/random.hpp"

namespace fastdoc {

template <class T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

/// Low-rank residual on a linear map: x -> (x A) B.
template <class T>
struct LoraFactors {
  Tensor<T> down;  // [in x r]
  Tensor<T> up;    // [r x out], zero at creation
};

/// y = x W + b (+ x A B when an adapter is attached). W is [in x out].
template <class T = float>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool requires_grad = true)
      : weight_(normal_tensor<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng, requires_grad)),
        bias_(Tensor<T>::zeros({out}, requires_grad)) {}

  /// Zero-initialised map.
  static Linear zeros(std::size_t in, std::size_t out, bool requires_grad = true) {
    Linear l;
    l.weight_ = Tensor<T>::zeros({in, out}, requires_grad);
    l.bias_ = Tensor<T>::zeros({out}, requires_grad);
    return l;
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tensor<T> y = add_bias(matmul(x, weight_), bias_);
    if (lora_) y = add(y, matmul(matmul(x, lora_->down), lora_->up));
    return y;
  }

  void attach_lora(std::size_t rank, Rng& rng) {
    const std::size_t in = weight_.dim(0), out = weight_.dim(1);
    lora_ = LoraFactors<T>{normal_tensor<T>({in, rank}, 1.0 / std::sqrt(static_cast<double>(in)), rng, true),
                           Tensor<T>::zeros({rank, out}, true)};
  }

  std::size_t in_features() const { return weight_.dim(0); }
  std::size_t out_features() const { return weight_.dim(1); }
  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }
  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }
  const std::optional<LoraFactors<T>>& lora() const { return lora_; }

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
  std::optional<LoraFactors<T>> lora_;
};

template <class T = float>
struct LayerNormParams {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNormParams() = default;
  LayerNormParams(std::size_t d, bool requires_grad)
      : gain(Tensor<T>::full({d}, T(1), requires_grad)), bias(Tensor<T>::zeros({d}, requires_grad)) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain, bias, T(1e-5)); }
};

/// Post-norm transformer encoder block: self-attention then GELU feed-forward,
/// each wrapped in residual + layer norm.
template <class T = float>
class TransformerLayer {
 public:
  TransformerLayer(std::size_t d_model, std::size_t num_heads, std::size_t d_ff, Rng& rng,
                   bool requires_grad = true)
      : num_heads_(num_heads),
        query(d_model, d_model, rng, requires_grad),
        key(d_model, d_model, rng, requires_grad),
        value(d_model, d_model, rng, requires_grad),
        output(d_model, d_model, rng, requires_grad),
        ffn_in(d_model, d_ff, rng, requires_grad),
        ffn_out(d_ff, d_model, rng, requires_grad),
        attn_norm(d_model, requires_grad),
        ffn_norm(d_model, requires_grad) {
    if (num_heads == 0 || d_model % num_heads != 0) {
      throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " +
                        std::to_string(num_heads) + " heads");
    }
  }

  /// x: [S x d]. When `attention` is non-null, per-head probability matrices
  /// are appended to it (detached).
  Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* attention = nullptr) const {
    const std::size_t d = x.dim(1);
    const std::size_t dh = d / num_heads_;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    const Tensor<T> q = query(x), k = key(x), v = value(x);
    std::vector<Tensor<T>> heads;
    heads.reserve(num_heads_);
    for (std::size_t h = 0; h < num_heads_; ++h) {
      const Tensor<T> qh = slice_cols(q, h * dh, dh);
      const Tensor<T> kh = slice_cols(k, h * dh, dh);
      const Tensor<T> vh = slice_cols(v, h * dh, dh);
      const Tensor<T> probs = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
      if (attention) attention->push_back(probs.detach());
      heads.push_back(matmul(probs, vh));
    }
    const Tensor<T> attended = num_heads_ == 1 ? heads.front() : concat_cols(heads);
    const Tensor<T> x1 = attn_norm(add(x, output(attended)));
    return ffn_norm(add(x1, ffn_out(gelu(ffn_in(x1)))));
  }

  std::size_t num_heads() const { return num_heads_; }

 private:
  std::size_t num_heads_;

 public:
  Linear<T> query, key, value, output, ffn_in, ffn_out;
  LayerNormParams<T> attn_norm, ffn_norm;
};

struct StackShape {
  std::size_t d_model = 32;
  std::size_t num_heads = 4;
  std::size_t d_ff = 64;
};

/// Layers of the seeded "open-domain" stack. Layer i depends only on
/// (seed, i), so a shallow copy and a deeper copy share their first layers.
template <class T>
std::vector<TransformerLayer<T>> open_domain_layers(std::uint64_t seed, std::size_t count,
                                                    const StackShape& shape, bool requires_grad) {
  std::vector<TransformerLayer<T>> layers;
  layers.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, "open-domain.layer" + std::to_string(i)));
    layers.emplace_back(shape.d_model, shape.num_heads, shape.d_ff, rng, requires_grad);
  }
  return layers;
}

/// Token and positional vectors standing in for an open-domain embedding layer.
template <class T = float>
struct EmbeddingTable {
  Tensor<T> tokens;     // [V x d]
  Tensor<T> positions;  // [P x d]

  EmbeddingTable() = default;
  EmbeddingTable(std::uint64_t seed, std::size_t vocab_size, std::size_t max_positions, std::size_t d_model,
                 bool requires_grad) {
    Rng tok_rng(derive_seed(seed, "open-domain.tokens"));
    Rng pos_rng(derive_seed(seed, "open-domain.positions"));
    tokens = normal_tensor<T>({vocab_size, d_model}, 1.0, tok_rng, requires_grad);
    positions = normal_tensor<T>({max_positions, d_model}, 0.1, pos_rng, requires_grad);
  }

  std::size_t vocab_size() const { return tokens.dim(0); }
  std::size_t max_positions() const { return positions.dim(0); }
  std::size_t d_model() const { return tokens.dim(1); }

  /// Input rows: token vector plus positional vector.
  Tensor<T> embed(std::span<const std::size_t> ids) const {
    if (ids.empty()) throw LengthError("token sequence is empty");
    if (ids.size() > max_positions()) {
      throw LengthError("token sequence of length " + std::to_string(ids.size()) + " exceeds " +
                        std::to_string(max_positions()) + " positions");
    }
    for (std::size_t id : ids) {
      if (id >= vocab_size()) {
        throw VocabularyError("token id " + std::to_string(id) + " >= vocabulary size " +
                              std::to_string(vocab_size()));
      }
    }
    return add(gather_rows(tokens, ids), head_rows(positions, ids.size()));
  }
};

}  // namespace fastdoc
