// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fastdoc/numcore/ops.hpp"

namespace fastdoc {

/// Margin of the document triplet loss. Fixed.
inline constexpr double kTripletMargin = 1.0;

/// max{ ||a - p|| - ||a - n|| + 1, 0 } over document vectors.
template <class T>
Tensor<T> triplet_loss(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative) {
  if (anchor.numel() != positive.numel() || anchor.numel() != negative.numel()) {
    throw DimensionError("triplet_loss: widths " + shape_str(anchor.shape()) + ", " +
                         shape_str(positive.shape()) + ", " + shape_str(negative.shape()));
  }
  const Tensor<T> d_pos = l2_norm(sub(anchor, positive));
  const Tensor<T> d_neg = l2_norm(sub(anchor, negative));
  return relu(add_scalar(sub(d_pos, d_neg), static_cast<T>(kTripletMargin)));
}

/// Mean triplet loss over a batch of [B x d] blocks.
template <class T>
Tensor<T> triplet_loss_batch(const Tensor<T>& anchors, const Tensor<T>& positives, const Tensor<T>& negatives) {
  if (anchors.shape() != positives.shape() || anchors.shape() != negatives.shape() || anchors.rank() != 2) {
    throw DimensionError("triplet_loss_batch: blocks " + shape_str(anchors.shape()) + ", " +
                         shape_str(positives.shape()) + ", " + shape_str(negatives.shape()));
  }
  const std::size_t b = anchors.dim(0);
  std::vector<Tensor<T>> terms;
  terms.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    terms.push_back(triplet_loss(row(anchors, i), row(positives, i), row(negatives, i)));
  }
  return scale(add_all(terms), T(1) / static_cast<T>(b));
}

/// Per-document, per-level target class indices (null allowed).
using HierTargets = std::vector<std::vector<std::size_t>>;

/// Sum over documents i and levels j of cross_entropy(logits[i][j], targets[i][j]).
template <class T>
Tensor<T> hierarchical_loss(const std::vector<std::vector<Tensor<T>>>& logits, const HierTargets& targets) {
  if (logits.size() != targets.size()) {
    throw DimensionError("hierarchical_loss: " + std::to_string(logits.size()) + " documents of logits but " +
                         std::to_string(targets.size()) + " label vectors");
  }
  std::vector<Tensor<T>> terms;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() != targets[i].size()) {
      throw DimensionError("hierarchical_loss: document " + std::to_string(i) + " has " +
                           std::to_string(logits[i].size()) + " heads but " + std::to_string(targets[i].size()) +
                           " labels");
    }
    for (std::size_t j = 0; j < logits[i].size(); ++j) terms.push_back(cross_entropy(logits[i][j], targets[i][j]));
  }
  return add_all(terms);
}

/// Unweighted sum of the two document-level losses.
template <class T>
Tensor<T> total_loss(const Tensor<T>& triplet, const Tensor<T>& hierarchical) {
  if (!std::isfinite(triplet.item()) || !std::isfinite(hierarchical.item())) {
    throw NumericError("total_loss: non-finite input (triplet " + std::to_string(triplet.item()) +
                       ", hierarchical " + std::to_string(hierarchical.item()) + ")");
  }
  return add(reshape(triplet, {}), reshape(hierarchical, {}));
}

}  // namespace fastdoc
