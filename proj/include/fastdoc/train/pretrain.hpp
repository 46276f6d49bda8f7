// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/data/taxonomy.hpp"
#include "fastdoc/encoder/model.hpp"
#include "fastdoc/losses.hpp"
#include "fastdoc/numcore/optim.hpp"
#include "fastdoc/train/checkpoint.hpp"
#include "fastdoc/train/drift.hpp"

namespace fastdoc {

enum class LossMode { Triplet, Hier, Both };

inline LossMode parse_loss_mode(const std::string& s) {
  if (s == "triplet") return LossMode::Triplet;
  if (s == "hier") return LossMode::Hier;
  if (s == "both") return LossMode::Both;
  throw ConfigError("unknown loss '" + s + "' (expected triplet, hier or both)");
}

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::Triplet:
      return "triplet";
    case LossMode::Hier:
      return "hier";
    case LossMode::Both:
      return "both";
  }
  return "?";
}

inline bool uses_triplet(LossMode m) { return m != LossMode::Hier; }
inline bool uses_hier(LossMode m) { return m != LossMode::Triplet; }

struct TrainConfig {
  std::size_t batch_size = 32;
  double initial_lr = 5e-5;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  LossMode loss = LossMode::Both;
  /// Classify the negative as well as the anchor and positive.
  bool hier_on_negative = true;
  std::optional<double> max_grad_norm;
  AdamWConfig adamw;
  std::size_t drift_interval = 10;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(initial_lr > 0) || !std::isfinite(initial_lr)) throw ConfigError("learning rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (max_grad_norm && !(*max_grad_norm > 0)) throw ConfigError("max_grad_norm must be > 0");
    if (drift_interval < 1) throw ConfigError("drift_interval must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"batch_size", batch_size},
            {"initial_lr", initial_lr},
            {"epochs", epochs},
            {"seed", seed},
            {"loss", to_string(loss)},
            {"hier_on_negative", hier_on_negative},
            {"max_grad_norm", max_grad_norm ? nlohmann::json(*max_grad_norm) : nlohmann::json(nullptr)},
            {"margin", kTripletMargin},
            {"adamw",
             {{"beta1", adamw.beta1}, {"beta2", adamw.beta2}, {"eps", adamw.eps}, {"weight_decay", adamw.weight_decay}}},
            {"drift_interval", drift_interval}};
  }
};

inline std::int64_t pretrain_steps(std::size_t num_triplets, std::size_t batch_size, std::size_t epochs) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  return static_cast<std::int64_t>((num_triplets + batch_size - 1) / batch_size * epochs);
}

struct LossRecord {
  std::int64_t step = 0;
  std::size_t epoch = 0;
  double lr = 0;
  double loss = 0;
  double triplet = 0;
  double hier = 0;
};

inline void write_loss_log(std::ostream& out, const std::vector<LossRecord>& curve) {
  for (const auto& r : curve) {
    out << nlohmann::json{{"step", r.step}, {"epoch", r.epoch}, {"lr", r.lr}, {"loss", r.loss},
                          {"triplet", r.triplet}, {"hier", r.hier}}
               .dump()
        << '\n';
  }
}

template <class T = float>
struct PretrainResult {
  std::vector<LossRecord> curve;
  std::vector<DriftReport> drift;
  AdamWState<T> optimizer;
  std::int64_t steps = 0;
};

/// Per-document hierarchy labels keyed by document id.
using LabelMap = std::map<std::string, HierarchyLabels>;

/// Labels for every document with a hierarchy path, padded against the taxonomy.
inline LabelMap hierarchy_labels(const Corpus& corpus, const Taxonomy& taxonomy) {
  LabelMap out;
  for (const auto& d : corpus.documents())
    if (d.hierarchy) out[d.id] = pad_hierarchy(*d.hierarchy, taxonomy);
  return out;
}

namespace detail {

/// Restores each parameter's requires_grad flag on scope exit.
template <class T>
class TrainabilityGuard {
 public:
  explicit TrainabilityGuard(const FastDocModel<T>& model) {
    for (auto& p : model.named_parameters()) saved_.emplace_back(p.tensor, p.tensor.requires_grad());
  }
  ~TrainabilityGuard() {
    for (auto& [t, on] : saved_) t.set_requires_grad(on);
  }
  TrainabilityGuard(const TrainabilityGuard&) = delete;
  TrainabilityGuard& operator=(const TrainabilityGuard&) = delete;

 private:
  std::vector<std::pair<Tensor<T>, bool>> saved_;
};

}  // namespace detail

/// Document-level pre-training of the upper encoder (and heads) on triplets.
/// Sentence embeddings come from the frozen lower encoder and are computed
/// once per document. The embedding table stays frozen; in triplet-only mode
/// the heads are frozen too. Each step uses lr linearly decayed from
/// initial_lr to 0 over all steps; the last partial batch of an epoch is
/// trained.
template <class T>
PretrainResult<T> pretrain(FastDocModel<T>& model, const Corpus& corpus, const std::vector<Triplet>& triplets,
                        const LabelMap& labels, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t depth = model.heads().depth();
  if (uses_hier(cfg.loss) && depth == 0) {
    throw ConfigError("hierarchical loss needs a model with at least one classification head");
  }
  if (triplets.empty()) throw ValidationError("no triplets to train on");

  std::map<std::string, Tensor<T>> sentences;
  auto require_doc = [&](const std::string& id, std::size_t i, const char* role) {
    if (!corpus.contains(id)) {
      throw ValidationError("triplet " + std::to_string(i) + " " + role + " id '" + id + "' is not in the corpus");
    }
    const bool need_labels = uses_hier(cfg.loss) && (std::string(role) != "negative" || cfg.hier_on_negative);
    if (need_labels) {
      auto it = labels.find(id);
      if (it == labels.end()) throw ValidationError("document '" + id + "' has no hierarchy labels");
      if (it->second.levels.size() != depth) {
        throw ValidationError("document '" + id + "' has " + std::to_string(it->second.levels.size()) +
                              " labels, model has " + std::to_string(depth) + " heads");
      }
      for (std::size_t l = 0; l < depth; ++l) {
        if (it->second.levels[l] >= model.heads().width(l)) {
          throw ValidationError("document '" + id + "' label " + std::to_string(it->second.levels[l]) +
                                " out of range at level " + std::to_string(l + 1));
        }
      }
    }
    return &corpus.find(id);
  };
  std::vector<const Document*> docs;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    docs.push_back(require_doc(triplets[i].anchor_id, i, "anchor"));
    docs.push_back(require_doc(triplets[i].positive_id, i, "positive"));
    docs.push_back(require_doc(triplets[i].negative_id, i, "negative"));
  }
  for (const Document* d : docs)
    if (!sentences.count(d->id)) sentences.emplace(d->id, model.embed_sentences(d->sentences));

  detail::TrainabilityGuard<T> guard(model);
  model.set_trainable("embeddings", false);
  if (!uses_hier(cfg.loss)) model.set_trainable("heads", false);
  auto groups = model.param_groups();

  PretrainResult<T> result;
  result.steps = pretrain_steps(triplets.size(), cfg.batch_size, cfg.epochs);
  const auto initial = snapshot(model);

  auto doc_vector = [&](const std::string& id) { return model.encode_sentence_matrix(sentences.at(id)); };

  std::vector<std::size_t> order(triplets.size());
  std::int64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "pretrain.epoch" + std::to_string(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const T inv_b = T(1) / static_cast<T>(end - start);
      std::vector<Tensor<T>> anchors, positives, negatives;
      std::vector<std::vector<Tensor<T>>> logits;
      HierTargets targets;
      for (std::size_t k = start; k < end; ++k) {
        const Triplet& t = triplets[order[k]];
        Tensor<T> a = doc_vector(t.anchor_id), p = doc_vector(t.positive_id), n = doc_vector(t.negative_id);
        if (uses_hier(cfg.loss)) {
          logits.push_back(model.classify_hierarchy(a));
          targets.push_back(labels.at(t.anchor_id).levels);
          logits.push_back(model.classify_hierarchy(p));
          targets.push_back(labels.at(t.positive_id).levels);
          if (cfg.hier_on_negative) {
            logits.push_back(model.classify_hierarchy(n));
            targets.push_back(labels.at(t.negative_id).levels);
          }
        }
        anchors.push_back(std::move(a));
        positives.push_back(std::move(p));
        negatives.push_back(std::move(n));
      }
      Tensor<T> lt = Tensor<T>::scalar(T(0));
      Tensor<T> lh = Tensor<T>::scalar(T(0));
      if (uses_triplet(cfg.loss)) lt = triplet_loss_batch(stack_rows(anchors), stack_rows(positives), stack_rows(negatives));
      if (uses_hier(cfg.loss)) lh = scale(hierarchical_loss(logits, targets), inv_b);
      Tensor<T> loss = total_loss(lt, lh);

      backward(loss);
      if (cfg.max_grad_norm) clip_grad_norm(groups, *cfg.max_grad_norm);
      const double lr = linear_lr(cfg.initial_lr, step, result.steps);
      adamw_step(groups, result.optimizer, lr, cfg.adamw);
      zero_grads(groups);
      require_finite(groups, step);

      result.curve.push_back({step, epoch, lr, static_cast<double>(loss.item()), static_cast<double>(lt.item()),
                              static_cast<double>(lh.item())});
      if ((step + 1) % static_cast<std::int64_t>(cfg.drift_interval) == 0 && step + 1 < result.steps) {
        result.drift.push_back(track_drift(initial, snapshot(model), step + 1));
      }
    }
  }
  result.drift.push_back(track_drift(initial, snapshot(model), step));
  return result;
}

/// Mean loss over consecutive windows of `window` steps (a trailing partial
/// window is averaged over its own length).
inline std::vector<double> windowed_mean(const std::vector<LossRecord>& curve, std::size_t window) {
  std::vector<double> out;
  for (std::size_t s = 0; s < curve.size(); s += window) {
    const std::size_t e = std::min(curve.size(), s + window);
    double sum = 0;
    for (std::size_t i = s; i < e; ++i) sum += curve[i].loss;
    out.push_back(sum / static_cast<double>(e - s));
  }
  return out;
}

}  // namespace fastdoc
