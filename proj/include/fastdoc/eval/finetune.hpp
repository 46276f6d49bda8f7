// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastdoc/encoder/model.hpp"
#include "fastdoc/eval/metrics.hpp"
#include "fastdoc/eval/tasks.hpp"
#include "fastdoc/log.hpp"
#include "fastdoc/numcore/optim.hpp"
#include "fastdoc/train/checkpoint.hpp"

namespace fastdoc {

struct FinetuneConfig {
  double lr = 3e-5;
  std::size_t max_epochs = 30;
  /// Stop after this many epochs without a dev improvement.
  std::size_t patience = 5;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::optional<double> max_grad_norm;
  AdamWConfig adamw;
  /// Cap on answer length, in tokens, when decoding spans.
  std::size_t max_answer_tokens = 30;

  void validate() const {
    if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("fine-tuning lr must be > 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("fine-tuning batch_size must be >= 1");
    if (max_answer_tokens < 1) throw ConfigError("max_answer_tokens must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"lr", lr},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"batch_size", batch_size},
            {"seed", seed},
            {"max_grad_norm", max_grad_norm ? nlohmann::json(*max_grad_norm) : nlohmann::json(nullptr)},
            {"max_answer_tokens", max_answer_tokens}};
  }
};

struct FinetuneResult {
  FastDocModel<float> model;
  Linear<float> head;
  /// Dev metrics of the restored best epoch.
  std::map<std::string, double> metrics;
  std::vector<double> dev_history;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

inline std::size_t word_id(const std::string& word, std::size_t vocab_size) {
  return hash_token_id(to_lower(word), vocab_size);
}

namespace detail {

/// Prepares a copy of `base` for fine-tuning: upper encoder (or its adapters)
/// and embedding table trainable, pre-training heads and lower encoder frozen.
inline FastDocModel<float> finetune_copy(const FastDocModel<float>& base) {
  FastDocModel<float> m = base.clone();
  m.set_trainable("heads", false);
  m.set_trainable("embeddings", true);
  if (!m.config().lora.active()) m.set_trainable("upper", true);
  return m;
}

/// Shared epoch loop: seeded shuffles, linear lr decay over the full epoch
/// budget, dev evaluation after every epoch, best-epoch restore and early
/// stopping. `batch_loss` returns the mean loss over the given example
/// indices; `dev_metric` scores the current parameters.
inline void run_finetune(FinetuneResult& r, std::size_t n_train, const FinetuneConfig& cfg,
                         const std::function<Tensor<float>(const std::vector<std::size_t>&)>& batch_loss,
                         const std::function<double()>& dev_metric) {
  auto groups = r.model.param_groups();
  ParamGroup<float> head_group{"task.head", {}, {}, false};
  head_group.add("task.head.weight", r.head.weight());
  head_group.add("task.head.bias", r.head.bias());
  groups.push_back(head_group);

  std::vector<Tensor<float>> trainable;
  for (const auto& g : groups)
    if (!g.frozen)
      for (const auto& t : g.tensors) trainable.push_back(t);
  auto save = [&] {
    std::vector<std::vector<float>> v;
    for (const auto& t : trainable) v.emplace_back(t.data().begin(), t.data().end());
    return v;
  };
  auto restore = [&](const std::vector<std::vector<float>>& v) {
    for (std::size_t i = 0; i < trainable.size(); ++i) {
      auto d = trainable[i].mutable_data();
      std::copy(v[i].begin(), v[i].end(), d.begin());
    }
  };

  const std::size_t per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const auto total = static_cast<std::int64_t>(per_epoch * cfg.max_epochs);
  AdamWState<float> opt;
  std::vector<std::size_t> order(n_train);
  double best = -1;
  auto best_params = save();
  std::int64_t step = 0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "finetune.epoch" + std::to_string(epoch)));
    rng.shuffle(order);
    for (std::size_t s = 0; s < n_train; s += cfg.batch_size, ++step) {
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(s),
                                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, s + cfg.batch_size)));
      const Tensor<float> loss = batch_loss(batch);
      if (!std::isfinite(loss.item())) throw NumericError("fine-tuning loss is not finite");
      backward(loss);
      if (cfg.max_grad_norm) clip_grad_norm(groups, *cfg.max_grad_norm);
      adamw_step(groups, opt, linear_lr(cfg.lr, step, total), cfg.adamw);
      zero_grads(groups);
      require_finite(groups, step);
    }
    const double m = dev_metric();
    r.dev_history.push_back(m);
    r.epochs_run = epoch + 1;
    if (m > best) {
      best = m;
      r.best_epoch = epoch;
      best_params = save();
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  restore(best_params);
}

inline std::size_t argmax(std::span<const float> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

/// Encoded span QA input: [CLS] question [SEP] context, with the context
/// truncated to fit the position budget.
struct SpanQaInput {
  std::vector<std::size_t> ids;
  std::size_t context_offset = 0;
  std::size_t context_length = 0;
  /// Absolute (start, end) targets; (0, 0) when unanswerable.
  std::pair<std::size_t, std::size_t> target{0, 0};
};

inline SpanQaInput encode_span_qa(const SpanQaExample& e, std::size_t vocab_size, std::size_t max_positions) {
  e.validate();
  SpanQaInput in;
  in.ids.push_back(kClsToken);
  for (const auto& w : e.question) in.ids.push_back(word_id(w, vocab_size));
  in.ids.push_back(kSepToken);
  if (in.ids.size() >= max_positions) {
    throw LengthError("question of " + std::to_string(e.question.size()) + " tokens leaves no room for context");
  }
  in.context_offset = in.ids.size();
  in.context_length = std::min(e.context.size(), max_positions - in.ids.size());
  if (in.context_length < e.context.size()) {
    warn("context truncated from " + std::to_string(e.context.size()) + " to " + std::to_string(in.context_length) +
         " tokens");
  }
  for (std::size_t k = 0; k < in.context_length; ++k) in.ids.push_back(word_id(e.context[k], vocab_size));
  if (e.answer && e.answer->second < in.context_length) {
    in.target = {in.context_offset + e.answer->first, in.context_offset + e.answer->second};
  } else if (e.answer) {
    warn("answer span falls outside the truncated context; treated as unanswerable");
  }
  return in;
}

/// Start/end logits [T] each from the two-column span head.
inline std::pair<Tensor<float>, Tensor<float>> span_logits(const FastDocModel<float>& model, const Linear<float>& head,
                                                           const std::vector<std::size_t>& ids) {
  const Tensor<float> lt = transpose(head(model.forward_tokens(ids)));
  return {row(lt, 0), row(lt, 1)};
}

/// Best-scoring span (start logit + end logit) inside the context, or
/// unanswerable when the [CLS] pair scores higher.
inline Span decode_span(std::span<const float> start, std::span<const float> end, const SpanQaInput& in,
                        std::size_t max_answer_tokens) {
  double best = static_cast<double>(start[0]) + end[0];
  Span out;
  for (std::size_t s = 0; s < in.context_length; ++s) {
    for (std::size_t e = s; e < std::min(in.context_length, s + max_answer_tokens); ++e) {
      const double score = static_cast<double>(start[in.context_offset + s]) + end[in.context_offset + e];
      if (score > best) {
        best = score;
        out = std::pair{s, e};
      }
    }
  }
  return out;
}

inline std::map<std::string, double> evaluate_span_qa(const FastDocModel<float>& model, const Linear<float>& head,
                                                      const std::vector<SpanQaExample>& dev,
                                                      const FinetuneConfig& cfg = {}) {
  double em = 0, f1 = 0;
  for (const auto& e : dev) {
    const auto in = encode_span_qa(e, model.config().vocab_size, model.config().max_positions);
    const auto [s, t] = span_logits(model, head, in.ids);
    const Span pred = decode_span(s.data(), t.data(), in, cfg.max_answer_tokens);
    const Span gold = in.target == std::pair<std::size_t, std::size_t>{0, 0}
                          ? Span{}
                          : Span{std::pair{in.target.first - in.context_offset, in.target.second - in.context_offset}};
    em += span_exact_match(gold, pred);
    f1 += span_f1(gold, pred);
  }
  const double n = dev.empty() ? 1.0 : static_cast<double>(dev.size());
  return {{"exact_match", em / n}, {"f1", f1 / n}};
}

/// Extractive QA fine-tuning with start/end heads over the token path.
inline FinetuneResult finetune_span_qa(const FastDocModel<float>& base, const std::vector<SpanQaExample>& train,
                                       const std::vector<SpanQaExample>& dev, const FinetuneConfig& cfg = {}) {
  cfg.validate();
  if (train.empty()) throw ValidationError("span QA training set is empty");
  const auto& mc = base.config();
  std::vector<SpanQaInput> inputs;
  for (const auto& e : train) inputs.push_back(encode_span_qa(e, mc.vocab_size, mc.max_positions));
  for (const auto& e : dev) e.validate();

  FinetuneResult r{detail::finetune_copy(base), Linear<float>::zeros(mc.d_model, 2), {}, {}, 0, 0};
  detail::run_finetune(
      r, train.size(), cfg,
      [&](const std::vector<std::size_t>& batch) {
        std::vector<Tensor<float>> terms;
        for (std::size_t i : batch) {
          const auto [s, e] = span_logits(r.model, r.head, inputs[i].ids);
          terms.push_back(add(cross_entropy(s, inputs[i].target.first), cross_entropy(e, inputs[i].target.second)));
        }
        return scale(add_all(terms), 0.5f / static_cast<float>(batch.size()));
      },
      [&] { return evaluate_span_qa(r.model, r.head, dev, cfg).at("exact_match"); });
  r.metrics = evaluate_span_qa(r.model, r.head, dev, cfg);
  return r;
}

inline std::vector<std::size_t> encode_tagged(const LabeledSequence& s, std::size_t vocab_size,
                                              std::size_t max_positions) {
  if (s.tokens.empty()) throw ValidationError("token sequence is empty");
  std::vector<std::size_t> ids{kClsToken};
  for (const auto& w : s.tokens) ids.push_back(word_id(w, vocab_size));
  if (ids.size() > max_positions) {
    warn("sequence truncated from " + std::to_string(ids.size()) + " to " + std::to_string(max_positions) +
         " tokens");
    ids.resize(max_positions);
  }
  return ids;
}

/// Per-token predictions (excluding [CLS]) for one sequence.
inline std::vector<std::size_t> predict_tags(const FastDocModel<float>& model, const Linear<float>& head,
                                             const LabeledSequence& s) {
  const auto ids = encode_tagged(s, model.config().vocab_size, model.config().max_positions);
  const Tensor<float> logits = head(model.forward_tokens(ids));
  std::vector<std::size_t> out;
  const std::size_t c = logits.cols();
  for (std::size_t t = 1; t < logits.rows(); ++t) {
    out.push_back(detail::argmax(logits.data().subspan(t * c, c)));
  }
  return out;
}

inline std::map<std::string, double> evaluate_token_classification(const FastDocModel<float>& model,
                                                                   const Linear<float>& head,
                                                                   const std::vector<LabeledSequence>& dev,
                                                                   std::size_t num_classes) {
  std::vector<std::size_t> truth, pred;
  for (const auto& s : dev) {
    const auto p = predict_tags(model, head, s);
    for (std::size_t t = 0; t < p.size(); ++t) {
      truth.push_back(s.tags[t]);
      pred.push_back(p[t]);
    }
  }
  const auto cm = confusion(truth, pred, num_classes);
  return {{"macro_f1", cm.macro_f1()}, {"accuracy", cm.accuracy()}};
}

inline void validate_tags(const std::vector<LabeledSequence>& data, std::size_t num_classes) {
  for (const auto& s : data) {
    if (s.tags.size() != s.tokens.size()) throw ValidationError("tag count does not match token count");
    for (auto t : s.tags)
      if (t >= num_classes) {
        throw ValidationError("tag " + std::to_string(t) + " >= num_classes " + std::to_string(num_classes));
      }
  }
}

/// Per-position classification over the token path.
inline FinetuneResult finetune_token_classification(const FastDocModel<float>& base,
                                                    const std::vector<LabeledSequence>& train,
                                                    const std::vector<LabeledSequence>& dev, std::size_t num_classes,
                                                    const FinetuneConfig& cfg = {}) {
  cfg.validate();
  if (num_classes < 2) throw ConfigError("token classification needs at least 2 classes");
  if (train.empty()) throw ValidationError("token classification training set is empty");
  validate_tags(train, num_classes);
  validate_tags(dev, num_classes);
  const auto& mc = base.config();
  std::vector<std::vector<std::size_t>> ids;
  for (const auto& s : train) ids.push_back(encode_tagged(s, mc.vocab_size, mc.max_positions));

  FinetuneResult r{detail::finetune_copy(base), Linear<float>::zeros(mc.d_model, num_classes), {}, {}, 0, 0};
  detail::run_finetune(
      r, train.size(), cfg,
      [&](const std::vector<std::size_t>& batch) {
        std::vector<Tensor<float>> terms;
        std::size_t count = 0;
        for (std::size_t i : batch) {
          const Tensor<float> h = r.model.forward_tokens(ids[i]);
          std::vector<std::size_t> positions, targets;
          for (std::size_t t = 1; t < ids[i].size(); ++t) {
            positions.push_back(t);
            targets.push_back(train[i].tags[t - 1]);
          }
          terms.push_back(cross_entropy_rows(r.head(gather_rows(h, positions)), targets));
          count += targets.size();
        }
        return scale(add_all(terms), 1.0f / static_cast<float>(count));
      },
      [&] { return evaluate_token_classification(r.model, r.head, dev, num_classes).at("macro_f1"); });
  r.metrics = evaluate_token_classification(r.model, r.head, dev, num_classes);
  return r;
}

inline std::vector<std::size_t> encode_pair(const LabeledSequence& s, std::size_t vocab_size,
                                            std::size_t max_positions) {
  if (s.tokens.empty() || s.second.empty()) throw ValidationError("pair example has an empty side");
  std::vector<std::size_t> ids{kClsToken};
  for (const auto& w : s.tokens) ids.push_back(word_id(w, vocab_size));
  ids.push_back(kSepToken);
  for (const auto& w : s.second) ids.push_back(word_id(w, vocab_size));
  if (ids.size() > max_positions) {
    warn("pair truncated from " + std::to_string(ids.size()) + " to " + std::to_string(max_positions) + " tokens");
    ids.resize(max_positions);
  }
  return ids;
}

inline Tensor<float> pair_logits(const FastDocModel<float>& model, const Linear<float>& head,
                                 const std::vector<std::size_t>& ids) {
  return reshape(head(head_rows(model.forward_tokens(ids), 1)), {2});
}

inline std::map<std::string, double> evaluate_pair_classification(const FastDocModel<float>& model,
                                                                  const Linear<float>& head,
                                                                  const std::vector<LabeledSequence>& dev) {
  std::vector<std::size_t> truth, pred;
  for (const auto& s : dev) {
    const auto logits = pair_logits(model, head, encode_pair(s, model.config().vocab_size, model.config().max_positions));
    truth.push_back(s.label);
    pred.push_back(detail::argmax(logits.data()));
  }
  const auto cm = confusion(truth, pred, 2);
  return {{"accuracy", cm.accuracy()}, {"f1", cm.f1(1)}};
}

/// 0/1 classification of a joined pair from the first-position output.
inline FinetuneResult finetune_pair_classification(const FastDocModel<float>& base,
                                                   const std::vector<LabeledSequence>& train,
                                                   const std::vector<LabeledSequence>& dev,
                                                   const FinetuneConfig& cfg = {}) {
  cfg.validate();
  if (train.empty()) throw ValidationError("pair classification training set is empty");
  for (const auto* set : {&train, &dev})
    for (const auto& s : *set)
      if (s.label > 1) throw ValidationError("pair label " + std::to_string(s.label) + " is not 0 or 1");
  const auto& mc = base.config();
  std::vector<std::vector<std::size_t>> ids;
  for (const auto& s : train) ids.push_back(encode_pair(s, mc.vocab_size, mc.max_positions));

  FinetuneResult r{detail::finetune_copy(base), Linear<float>::zeros(mc.d_model, 2), {}, {}, 0, 0};
  detail::run_finetune(
      r, train.size(), cfg,
      [&](const std::vector<std::size_t>& batch) {
        std::vector<Tensor<float>> terms;
        for (std::size_t i : batch) terms.push_back(cross_entropy(pair_logits(r.model, r.head, ids[i]), train[i].label));
        return scale(add_all(terms), 1.0f / static_cast<float>(batch.size()));
      },
      [&] { return evaluate_pair_classification(r.model, r.head, dev).at("accuracy"); });
  r.metrics = evaluate_pair_classification(r.model, r.head, dev);
  return r;
}

}  // namespace fastdoc
