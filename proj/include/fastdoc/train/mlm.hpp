// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/encoder/model.hpp"
#include "fastdoc/train/checkpoint.hpp"
#include "fastdoc/train/drift.hpp"
#include "fastdoc/train/pretrain.hpp"

namespace fastdoc {

inline constexpr double kMaskFraction = 0.15;

struct MlmResult {
  std::vector<LossRecord> curve;
  std::vector<DriftReport> drift;
  std::int64_t steps = 0;
};

/// Token ids of a document for the token path: [CLS] then hashed words,
/// truncated to the model's position budget.
template <class T>
std::vector<std::size_t> document_token_ids(const FastDocModel<T>& model, const Document& d) {
  std::vector<std::size_t> ids{kClsToken};
  for (std::size_t id : tokenize_ids(d.text(), model.config().vocab_size)) ids.push_back(id);
  if (ids.size() > model.config().max_positions) ids.resize(model.config().max_positions);
  return ids;
}

/// Masked-token pre-training of the upper encoder over the token path, used
/// as the comparison arm of the drift analysis. 15% of non-[CLS] positions per
/// document are replaced by [MASK] and predicted by a separate vocabulary
/// projection. Optimizer, schedule and frozen groups match pretrain().
template <class T>
MlmResult mlm_pretrain(FastDocModel<T>& model, const Corpus& corpus, std::int64_t steps, const TrainConfig& cfg) {
  cfg.validate();
  if (steps < 1) throw ConfigError("MLM step budget must be >= 1");
  if (corpus.size() == 0) throw ValidationError("MLM pre-training needs a non-empty corpus");

  detail::TrainabilityGuard<T> guard(model);
  model.set_trainable("embeddings", false);
  model.set_trainable("heads", false);
  auto groups = model.param_groups();
  const auto initial = snapshot(model);

  const std::size_t d = model.config().d_model, vocab = model.config().vocab_size;
  Rng head_rng(derive_seed(cfg.seed, "mlm.head"));
  const Linear<T> head(d, vocab, head_rng, true);
  ParamGroup<T> head_group{"mlm.head", {}, {}, false};
  head_group.add("mlm.head.weight", head.weight());
  head_group.add("mlm.head.bias", head.bias());
  groups.push_back(head_group);

  std::vector<std::vector<std::size_t>> docs;
  for (const auto& doc : corpus.documents()) docs.push_back(document_token_ids(model, doc));

  MlmResult result;
  result.steps = steps;
  AdamWState<T> opt;
  Rng order_rng(derive_seed(cfg.seed, "mlm.order"));
  Rng mask_rng(derive_seed(cfg.seed, "mlm.mask"));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (std::int64_t step = 0; step < steps; ++step) {
    std::vector<Tensor<T>> terms;
    std::size_t masked_total = 0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        order.resize(docs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);
        cursor = 0;
      }
      std::vector<std::size_t> ids = docs[order[cursor++]];
      if (ids.size() < 2) continue;
      std::vector<std::size_t> positions(ids.size() - 1);
      for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i + 1;
      mask_rng.shuffle(positions);
      const auto m = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(kMaskFraction * static_cast<double>(positions.size()))));
      positions.resize(m);
      std::sort(positions.begin(), positions.end());
      std::vector<std::size_t> targets;
      for (std::size_t p : positions) {
        targets.push_back(ids[p]);
        ids[p] = kMaskToken;
      }
      const Tensor<T> h = gather_rows(model.forward_tokens(ids), positions);
      terms.push_back(cross_entropy_rows(head(h), targets));
      masked_total += m;
    }
    if (terms.empty()) throw ValidationError("MLM batch has no maskable tokens");
    const Tensor<T> loss = scale(add_all(terms), T(1) / static_cast<T>(masked_total));
    if (!std::isfinite(static_cast<double>(loss.item()))) throw NumericError("MLM loss is not finite");
    backward(loss);
    if (cfg.max_grad_norm) clip_grad_norm(groups, *cfg.max_grad_norm);
    const double lr = linear_lr(cfg.initial_lr, step, steps);
    adamw_step(groups, opt, lr, cfg.adamw);
    zero_grads(groups);
    require_finite(groups, step);
    result.curve.push_back({step, 0, lr, static_cast<double>(loss.item()), 0.0, 0.0});
    if ((step + 1) % static_cast<std::int64_t>(cfg.drift_interval) == 0 && step + 1 < steps) {
      result.drift.push_back(track_drift(initial, snapshot(model), step + 1));
    }
  }
  result.drift.push_back(track_drift(initial, snapshot(model), steps));
  return result;
}

}  // namespace fastdoc
