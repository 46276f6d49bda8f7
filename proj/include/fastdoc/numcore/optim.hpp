// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fastdoc/numcore/tensor.hpp"

namespace fastdoc {

/// A named set of parameter tensors sharing a role (e.g. "upper.attn.query").
/// Drift is reported per group; frozen groups are skipped by the optimizer.
template <class T = float>
struct ParamGroup {
  std::string name;
  std::vector<std::string> tensor_names;
  std::vector<Tensor<T>> tensors;
  bool frozen = false;

  void add(std::string tensor_name, Tensor<T> t) {
    tensor_names.push_back(std::move(tensor_name));
    tensors.push_back(std::move(t));
  }

  void set_frozen(bool on) {
    frozen = on;
    for (auto& t : tensors) t.set_requires_grad(!on);
  }

  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <class T = float>
struct AdamWState {
  std::int64_t step = 0;
  // Keyed by tensor name.
  std::map<std::string, std::vector<T>> first_moment;
  std::map<std::string, std::vector<T>> second_moment;
};

/// One decoupled-weight-decay Adam update over every non-frozen group.
template <class T>
void adamw_step(std::vector<ParamGroup<T>>& groups, AdamWState<T>& state, double lr,
                const AdamWConfig& cfg = {}) {
  for (const auto& g : groups) {
    if (g.frozen) continue;
    for (std::size_t i = 0; i < g.tensors.size(); ++i) {
      if (!g.tensors[i].has_grad()) {
        throw ContractError("adamw_step: trainable tensor '" + g.tensor_names[i] + "' in group '" +
                            g.name + "' has no gradient");
      }
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& g : groups) {
    if (g.frozen) continue;
    for (std::size_t i = 0; i < g.tensors.size(); ++i) {
      auto& t = g.tensors[i];
      auto theta = t.mutable_data();
      auto grad = t.grad();
      auto& m = state.first_moment[g.tensor_names[i]];
      auto& v = state.second_moment[g.tensor_names[i]];
      if (m.size() != theta.size()) m.assign(theta.size(), T(0));
      if (v.size() != theta.size()) v.assign(theta.size(), T(0));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double gk = grad[k];
        double p = theta[k];
        p -= lr * cfg.weight_decay * p;
        const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
        const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
        m[k] = static_cast<T>(mk);
        v[k] = static_cast<T>(vk);
        p -= lr * (mk / bc1) / (std::sqrt(vk / bc2) + cfg.eps);
        theta[k] = static_cast<T>(p);
      }
    }
  }
}

template <class T>
void zero_grads(std::vector<ParamGroup<T>>& groups) {
  for (auto& g : groups)
    for (auto& t : g.tensors) t.zero_grad();
}

/// Throws NumericError if a trainable parameter holds a NaN or infinity.
template <class T>
void require_finite(const std::vector<ParamGroup<T>>& groups, std::int64_t step) {
  for (const auto& g : groups) {
    if (g.frozen) continue;
    for (std::size_t i = 0; i < g.tensors.size(); ++i)
      for (T v : g.tensors[i].data())
        if (!std::isfinite(v)) {
          throw NumericError("parameter '" + g.tensor_names[i] + "' became non-finite at step " + std::to_string(step));
        }
  }
}

/// Rescale gradients of trainable groups so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
template <class T>
double clip_grad_norm(std::vector<ParamGroup<T>>& groups, double max_norm) {
  double ss = 0;
  for (const auto& g : groups) {
    if (g.frozen) continue;
    for (const auto& t : g.tensors)
      for (T v : t.grad()) ss += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (auto& g : groups) {
      if (g.frozen) continue;
      for (auto& t : g.tensors)
        if (t.has_grad())
          for (auto& v : t.mutable_grad()) v = static_cast<T>(v * s);
    }
  }
  return norm;
}

/// Linear decay from `initial` at step 0 to 0 at step total_steps - 1.
inline double linear_lr(double initial, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 1) return initial;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return initial * std::max(0.0, 1.0 - frac);
}

}  // namespace fastdoc
