// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fastdoc/numcore/tensor.hpp"

namespace fastdoc {

namespace detail {

template <class T>
using NodePtr = std::shared_ptr<typename Tensor<T>::Node>;

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <class T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
  }
}

// out[m×n] += a[m×k] * b[k×n]
template <class T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

/// Matrix product. Inputs are [m×k] and [k×n].
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  detail::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  auto an = a.node(), bn = b.node();
  return Tensor<T>::from_op({m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](const auto& self) {
    const T* g = self.grad.data();
    if (an->requires_grad) {
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          T acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bn->data[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T av = an->data[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
        }
    }
  });
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
  detail::require_matrix(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  auto an = a.node();
  return Tensor<T>::from_op({n, m}, std::move(out), {an}, [an, m, n](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

/// Same-shape reshape; the result shares no storage with the input.
template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  auto an = a.node();
  return Tensor<T>::from_op(std::move(shape), a.values(), {an}, [an](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  auto an = a.node(), bn = b.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an, bn}, [an, bn](const auto& self) {
    for (auto* p : {an.get(), bn.get()}) {
      if (!p->requires_grad) continue;
      auto& gp = p->ensure_grad();
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  auto an = a.node(), bn = b.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an, bn}, [an, bn](const auto& self) {
    if (an->requires_grad) {
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  auto an = a.node(), bn = b.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an, bn}, [an, bn](const auto& self) {
    if (an->requires_grad) {
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * an->data[i];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
  auto an = a.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an}, [an, s](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * s;
  });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + s;
  auto an = a.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an}, [an](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

/// x[m×n] + bias[n], broadcast over rows.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t n = x.cols(), m = x.rows();
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " for input " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(x.values());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias[j];
  auto xn = x.node(), bn = bias.node();
  return Tensor<T>::from_op(x.shape(), std::move(out), {xn, bn}, [xn, bn, m, n](const auto& self) {
    if (xn->requires_grad) {
      auto& gx = xn->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
  });
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] < T(0) ? T(0) : a[i];
  auto an = a.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an}, [an](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (an->data[i] > T(0)) ga[i] += self.grad[i];
  });
}

/// GELU, tanh approximation.
template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T c = static_cast<T>(0.044715);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a[i];
    out[i] = T(0.5) * x * (T(1) + std::tanh(k * (x + c * x * x * x)));
  }
  auto an = a.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an}, [an, k, c](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const T x = an->data[i];
      const T t = std::tanh(k * (x + c * x * x * x));
      const T d = T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * k * (T(1) + T(3) * c * x * x);
      ga[i] += self.grad[i] * d;
    }
  });
}

/// Softmax over the last dimension, max-subtracted.
template <class T>
Tensor<T> softmax(const Tensor<T>& a) {
  if (a.rank() == 0 || a.cols() == 0) {
    throw DimensionError("softmax: empty last dimension in " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(a.numel());
  for (std::size_t r = 0; r < m; ++r) {
    const T* x = a.data().data() + r * n;
    T* y = out.data() + r * n;
    const T mx = *std::max_element(x, x + n);
    T sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= sum;
  }
  auto an = a.node();
  return Tensor<T>::from_op(a.shape(), std::move(out), {an}, [an, m, n](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const T* y = self.data.data() + r * n;
      const T* g = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += y[j] * (g[j] - dot);
    }
  });
}

/// Row-wise layer normalisation with affine gain and bias.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5)) {
  const std::size_t m = x.rows(), d = x.cols();
  if (x.rank() == 0 || d == 0) throw DimensionError("layer_norm: empty row in " + shape_str(x.shape()));
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: affine parameters " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " for rows of width " + std::to_string(d));
  }
  if (!(eps > T(0))) throw ContractError("layer_norm: eps must be positive");
  std::vector<T> out(x.numel()), xhat(x.numel()), inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    const T* row = x.data().data() + r * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(d);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (row[j] - mean) * inv_std[r];
      out[r * d + j] = gain[j] * xhat[r * d + j] + bias[j];
    }
  }
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return Tensor<T>::from_op(
      x.shape(), std::move(out), {xn, gn, bn},
      [xn, gn, bn, m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](const auto& self) {
        const T* g = self.grad.data();
        if (gn->requires_grad) {
          auto& gg = gn->ensure_grad();
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (bn->requires_grad) {
          auto& gb = bn->ensure_grad();
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
        if (xn->requires_grad) {
          auto& gx = xn->ensure_grad();
          std::vector<T> dxhat(d);
          for (std::size_t r = 0; r < m; ++r) {
            T mean_dxhat = 0, mean_dxhat_xhat = 0;
            for (std::size_t j = 0; j < d; ++j) {
              dxhat[j] = g[r * d + j] * gn->data[j];
              mean_dxhat += dxhat[j];
              mean_dxhat_xhat += dxhat[j] * xhat[r * d + j];
            }
            mean_dxhat /= static_cast<T>(d);
            mean_dxhat_xhat /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j) {
              gx[r * d + j] += inv_std[r] * (dxhat[j] - mean_dxhat - xhat[r * d + j] * mean_dxhat_xhat);
            }
          }
        }
      });
}

/// -log softmax(logits)[target] for a single logit vector.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::size_t target) {
  const std::size_t c = logits.numel();
  if (c == 0) throw DimensionError("cross_entropy: empty logits");
  if (target >= c) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(c) + " classes");
  }
  const T* x = logits.data().data();
  const T mx = *std::max_element(x, x + c);
  T sum = 0;
  for (std::size_t j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
  const T lse = mx + std::log(sum);
  auto ln = logits.node();
  return Tensor<T>::from_op({}, {lse - x[target]}, {ln}, [ln, c, lse, target](const auto& self) {
    auto& gl = ln->ensure_grad();
    const T g = self.grad[0];
    for (std::size_t j = 0; j < c; ++j) {
      gl[j] += g * (std::exp(ln->data[j] - lse) - (j == target ? T(1) : T(0)));
    }
  });
}

/// Sum over rows of cross_entropy(logits[r], targets[r]).
template <class T>
Tensor<T> cross_entropy_rows(const Tensor<T>& logits, std::span<const std::size_t> targets) {
  detail::require_matrix(logits, "cross_entropy_rows");
  const std::size_t m = logits.dim(0), c = logits.dim(1);
  if (targets.size() != m) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
  }
  std::vector<T> lse(m);
  T total = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] >= c) {
      throw IndexError("cross_entropy_rows: target " + std::to_string(targets[r]) +
                       " out of range for " + std::to_string(c) + " classes");
    }
    const T* x = logits.data().data() + r * c;
    const T mx = *std::max_element(x, x + c);
    T sum = 0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
    lse[r] = mx + std::log(sum);
    total += lse[r] - x[targets[r]];
  }
  auto ln = logits.node();
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return Tensor<T>::from_op({}, {total}, {ln},
                            [ln, m, c, lse = std::move(lse), tg = std::move(tg)](const auto& self) {
                              auto& gl = ln->ensure_grad();
                              const T g = self.grad[0];
                              for (std::size_t r = 0; r < m; ++r)
                                for (std::size_t j = 0; j < c; ++j) {
                                  gl[r * c + j] += g * (std::exp(ln->data[r * c + j] - lse[r]) -
                                                        (j == tg[r] ? T(1) : T(0)));
                                }
                            });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  auto an = a.node();
  return Tensor<T>::from_op({}, {s}, {an}, [an](const auto& self) {
    auto& ga = an->ensure_grad();
    for (auto& g : ga) g += self.grad[0];
  });
}

/// Mean over the rows of a matrix: [m×n] -> [n]. Rows accumulate in order.
template <class T>
Tensor<T> mean_rows(const Tensor<T>& a) {
  detail::require_matrix(a, "mean_rows");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (m == 0) throw DimensionError("mean_rows: no rows");
  std::vector<T> out(n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.data()[i * n + j];
  const T inv = T(1) / static_cast<T>(m);
  for (auto& v : out) v *= inv;
  auto an = a.node();
  return Tensor<T>::from_op({n}, std::move(out), {an}, [an, m, n, inv](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j] * inv;
  });
}

/// Row i of a matrix as a vector.
template <class T>
Tensor<T> row(const Tensor<T>& a, std::size_t i) {
  detail::require_matrix(a, "row");
  const std::size_t n = a.dim(1);
  if (i >= a.dim(0)) throw IndexError("row: index " + std::to_string(i) + " for " + shape_str(a.shape()));
  std::vector<T> out(a.data().begin() + i * n, a.data().begin() + (i + 1) * n);
  auto an = a.node();
  return Tensor<T>::from_op({n}, std::move(out), {an}, [an, i, n](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j];
  });
}

/// Rows of `table` selected by `ids`: [V×d] -> [len(ids)×d].
template <class T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> ids) {
  detail::require_matrix(table, "gather_rows");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) throw IndexError("gather_rows: id " + std::to_string(ids[r]) + " >= " + std::to_string(v));
    std::copy_n(table.data().begin() + ids[r] * d, d, out.begin() + r * d);
  }
  auto tn = table.node();
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return Tensor<T>::from_op({ids.size(), d}, std::move(out), {tn}, [tn, d, idv = std::move(idv)](const auto& self) {
    auto& gt = tn->ensure_grad();
    for (std::size_t r = 0; r < idv.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) gt[idv[r] * d + j] += self.grad[r * d + j];
  });
}

/// Leading `count` rows of a matrix.
template <class T>
Tensor<T> head_rows(const Tensor<T>& a, std::size_t count) {
  detail::require_matrix(a, "head_rows");
  const std::size_t n = a.dim(1);
  if (count > a.dim(0)) throw IndexError("head_rows: " + std::to_string(count) + " > " + std::to_string(a.dim(0)));
  std::vector<T> out(a.data().begin(), a.data().begin() + count * n);
  auto an = a.node();
  return Tensor<T>::from_op({count, n}, std::move(out), {an}, [an](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t len) {
  detail::require_matrix(a, "slice_cols");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (start + len > n) throw IndexError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(len) + ") of " + shape_str(a.shape()));
  std::vector<T> out(m * len);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < len; ++j) out[i * len + j] = a.data()[i * n + start + j];
  auto an = a.node();
  return Tensor<T>::from_op({m, len}, std::move(out), {an}, [an, m, n, start, len](const auto& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j) ga[i * n + start + j] += self.grad[i * len + j];
  });
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().dim(0);
  std::size_t n = 0;
  for (const auto& p : parts) {
    detail::require_matrix(p, "concat_cols");
    if (p.dim(0) != m) throw DimensionError("concat_cols: row count mismatch");
    n += p.dim(1);
  }
  std::vector<T> out(m * n);
  std::vector<typename detail::NodePtr<T>> nodes;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * n + off + j] = p.data()[i * w + j];
    off += w;
    nodes.push_back(p.node());
  }
  auto captured = nodes;
  return Tensor<T>::from_op({m, n}, std::move(out), std::move(nodes), [captured, m, n](const auto& self) {
    std::size_t off = 0;
    for (const auto& p : captured) {
      const std::size_t w = p->shape[1];
      if (p->requires_grad) {
        auto& gp = p->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += self.grad[i * n + off + j];
      }
      off += w;
    }
  });
}

/// Stack equal-length vectors into a matrix.
template <class T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t n = rows.front().numel();
  std::vector<T> out;
  out.reserve(rows.size() * n);
  std::vector<typename detail::NodePtr<T>> nodes;
  for (const auto& r : rows) {
    if (r.numel() != n) throw DimensionError("stack_rows: ragged rows");
    out.insert(out.end(), r.data().begin(), r.data().end());
    nodes.push_back(r.node());
  }
  auto captured = nodes;
  return Tensor<T>::from_op({rows.size(), n}, std::move(out), std::move(nodes), [captured, n](const auto& self) {
    for (std::size_t i = 0; i < captured.size(); ++i) {
      if (!captured[i]->requires_grad) continue;
      auto& g = captured[i]->ensure_grad();
      for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

/// Euclidean norm of all entries. The gradient at the origin is taken as 0.
template <class T>
Tensor<T> l2_norm(const Tensor<T>& a) {
  T ss = 0;
  for (T v : a.data()) ss += v * v;
  const T norm = std::sqrt(ss);
  auto an = a.node();
  return Tensor<T>::from_op({}, {norm}, {an}, [an, norm](const auto& self) {
    if (norm == T(0)) return;
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[0] * an->data[i] / norm;
  });
}

template <class T>
Tensor<T> add_all(const std::vector<Tensor<T>>& terms) {
  if (terms.empty()) return Tensor<T>::scalar(T(0));
  Tensor<T> acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace fastdoc
