// SPDX-License-Identifier: Apache-2.0
#include "swcm/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace swcm::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

using Impl = std::shared_ptr<TensorImpl>;

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

bool wants_grad(const Impl& t) { return t->requires_grad; }

// Builds the output tensor and, when recording, its graph node.
Tensor make_result(Shape shape, std::vector<double> data, const char* op,
                   std::vector<Impl> inputs,
                   std::function<void(const TensorImpl&)> backward) {
  check_finite(data, op);
  auto out = std::make_shared<TensorImpl>();
  out->shape = std::move(shape);
  out->data = std::move(data);
  if (grad_enabled() && std::any_of(inputs.begin(), inputs.end(), wants_grad)) {
    out->requires_grad = true;
    auto node = std::make_shared<GradNode>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
    out->node = std::move(node);
  }
  return Tensor(std::move(out));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
}

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  Impl ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), "add", {ai, bi}, [ai, bi](const TensorImpl& o) {
    for (const Impl& in : {ai, bi}) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  Impl ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), "sub", {ai, bi}, [ai, bi](const TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bi->requires_grad) {
      auto& g = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  Impl ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), "mul", {ai, bi}, [ai, bi](const TensorImpl& o) {
    if (ai->requires_grad) {
      auto& g = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bi->data[i];
    }
    if (bi->requires_grad) {
      auto& g = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ai->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  Impl ai = a.impl();
  return make_result(a.shape(), std::move(out), "scale", {ai}, [ai, factor](const TensorImpl& o) {
    auto& g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || bias.dim(0) != last_dim(x)) {
    throw ShapeError("add_bias: bias " + shape_to_string(bias.shape()) + " vs input " +
                     shape_to_string(x.shape()));
  }
  const std::size_t n = bias.dim(0), rows = x.numel() / n;
  std::vector<double> out(x.data().begin(), x.data().end());
  const double* b = bias.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += b[j];
  }
  Impl xi = x.impl(), bi = bias.impl();
  return make_result(x.shape(), std::move(out), "add_bias", {xi, bi},
                     [xi, bi, n, rows](const TensorImpl& o) {
                       if (xi->requires_grad) {
                         auto& g = xi->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                       }
                       if (bi->requires_grad) {
                         auto& g = bi->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r) {
                           const double* dy = o.grad.data() + r * n;
                           for (std::size_t j = 0; j < n; ++j) g[j] += dy[j];
                         }
                       }
                     });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.rank() < 1 || last_dim(a) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by " +
                     shape_to_string(b.shape()));
  }
  const std::size_t k = b.dim(0), n = b.dim(1), m = a.numel() / k;
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  Shape shape = a.shape();
  shape.back() = n;
  Impl ai = a.impl(), bi = b.impl();
  return make_result(std::move(shape), std::move(out), "matmul", {ai, bi},
                     [ai, bi, m, k, n](const TensorImpl& o) {
                       ConstMap dc(o.grad.data(), m, n);
                       if (ai->requires_grad) {
                         MutMap(ai->grad_buffer().data(), m, k).noalias() +=
                             dc * ConstMap(bi->data.data(), k, n).transpose();
                       }
                       if (bi->requires_grad) {
                         MutMap(bi->grad_buffer().data(), k, n).noalias() +=
                             ConstMap(ai->data.data(), m, k).transpose() * dc;
                       }
                     });
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.rank() < 1 || last_dim(a) != b.dim(1)) {
    throw ShapeError("matmul_transposed: cannot multiply " + shape_to_string(a.shape()) +
                     " by transpose of " + shape_to_string(b.shape()));
  }
  const std::size_t k = b.dim(1), n = b.dim(0), m = a.numel() / k;
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), n, k).transpose();
  Shape shape = a.shape();
  shape.back() = n;
  Impl ai = a.impl(), bi = b.impl();
  return make_result(std::move(shape), std::move(out), "matmul_transposed", {ai, bi},
                     [ai, bi, m, k, n](const TensorImpl& o) {
                       ConstMap dc(o.grad.data(), m, n);
                       if (ai->requires_grad) {
                         MutMap(ai->grad_buffer().data(), m, k).noalias() +=
                             dc * ConstMap(bi->data.data(), n, k);
                       }
                       if (bi->requires_grad) {
                         MutMap(bi->grad_buffer().data(), n, k).noalias() +=
                             dc.transpose() * ConstMap(ai->data.data(), m, k);
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a matrix");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  MutMap(out.data(), c, r) = ConstMap(a.data().data(), r, c).transpose();
  Impl ai = a.impl();
  return make_result({c, r}, std::move(out), "transpose", {ai}, [ai, r, c](const TensorImpl& o) {
    MutMap(ai->grad_buffer().data(), r, c) += ConstMap(o.grad.data(), c, r).transpose();
  });
}

Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) {
    throw ShapeError("batched_matmul: bad operands " + shape_to_string(a.shape()) + ", " +
                     shape_to_string(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  if (bk != k) {
    throw ShapeError("batched_matmul: inner dimensions differ " + shape_to_string(a.shape()) +
                     ", " + shape_to_string(b.shape()));
  }
  std::vector<double> out(batch * m * n);
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  for (std::size_t i = 0; i < batch; ++i) {
    MutMap c(out.data() + i * m * n, m, n);
    ConstMap am(ap + i * m * k, m, k);
    if (transpose_b) {
      c.noalias() = am * ConstMap(bp + i * n * k, n, k).transpose();
    } else {
      c.noalias() = am * ConstMap(bp + i * k * n, k, n);
    }
  }
  Impl ai = a.impl(), bi = b.impl();
  return make_result(
      {batch, m, n}, std::move(out), "batched_matmul", {ai, bi},
      [ai, bi, batch, m, k, n, transpose_b](const TensorImpl& o) {
        double* ga = ai->requires_grad ? ai->grad_buffer().data() : nullptr;
        double* gb = bi->requires_grad ? bi->grad_buffer().data() : nullptr;
        for (std::size_t i = 0; i < batch; ++i) {
          ConstMap dc(o.grad.data() + i * m * n, m, n);
          ConstMap am(ai->data.data() + i * m * k, m, k);
          if (transpose_b) {
            ConstMap bm(bi->data.data() + i * n * k, n, k);
            if (ga) MutMap(ga + i * m * k, m, k).noalias() += dc * bm;
            if (gb) MutMap(gb + i * n * k, n, k).noalias() += dc.transpose() * am;
          } else {
            ConstMap bm(bi->data.data() + i * k * n, k, n);
            if (ga) MutMap(ga + i * m * k, m, k).noalias() += dc * bm.transpose();
            if (gb) MutMap(gb + i * k * n, k, n).noalias() += am.transpose() * dc;
          }
        }
      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_to_string(x.shape()) + " to " + shape_to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  Impl xi = x.impl();
  return make_result(std::move(shape), std::move(out), "reshape", {xi}, [xi](const TensorImpl& o) {
    auto& g = xi->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor split_heads(const Tensor& x, std::size_t heads) {
  if (x.rank() != 3 || heads == 0 || x.dim(2) % heads != 0) {
    throw ShapeError("split_heads: " + shape_to_string(x.shape()) + " into " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t b = x.dim(0), s = x.dim(1), d = x.dim(2), dh = d / heads;
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < s; ++t) {
        const double* src = in.data() + (bi * s + t) * d + h * dh;
        std::copy(src, src + dh, out.data() + ((bi * heads + h) * s + t) * dh);
      }
  Impl xi = x.impl();
  return make_result({b * heads, s, dh}, std::move(out), "split_heads", {xi},
                     [xi, b, s, d, dh, heads](const TensorImpl& o) {
                       auto& g = xi->grad_buffer();
                       for (std::size_t bi = 0; bi < b; ++bi)
                         for (std::size_t h = 0; h < heads; ++h)
                           for (std::size_t t = 0; t < s; ++t) {
                             const double* src = o.grad.data() + ((bi * heads + h) * s + t) * dh;
                             double* dst = g.data() + (bi * s + t) * d + h * dh;
                             for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
                           }
                     });
}

Tensor merge_heads(const Tensor& x, std::size_t heads) {
  if (x.rank() != 3 || heads == 0 || x.dim(0) % heads != 0) {
    throw ShapeError("merge_heads: " + shape_to_string(x.shape()) + " with " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t b = x.dim(0) / heads, s = x.dim(1), dh = x.dim(2), d = dh * heads;
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < s; ++t) {
        const double* src = in.data() + ((bi * heads + h) * s + t) * dh;
        std::copy(src, src + dh, out.data() + (bi * s + t) * d + h * dh);
      }
  Impl xi = x.impl();
  return make_result({b, s, d}, std::move(out), "merge_heads", {xi},
                     [xi, b, s, d, dh, heads](const TensorImpl& o) {
                       auto& g = xi->grad_buffer();
                       for (std::size_t bi = 0; bi < b; ++bi)
                         for (std::size_t h = 0; h < heads; ++h)
                           for (std::size_t t = 0; t < s; ++t) {
                             const double* src = o.grad.data() + (bi * s + t) * d + h * dh;
                             double* dst = g.data() + ((bi * heads + h) * s + t) * dh;
                             for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
                           }
                     });
}

Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value) {
  if (mask.size() != x.numel()) throw ShapeError("masked_fill: mask size mismatch");
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] = value;
  }
  Impl xi = x.impl();
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  return make_result(x.shape(), std::move(out), "masked_fill", {xi},
                     [xi, keep = std::move(keep)](const TensorImpl& o) {
                       auto& g = xi->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (!keep[i]) g[i] += o.grad[i];
                       }
                     });
}

Tensor softmax(const Tensor& x) {
  const std::size_t n = last_dim(x), rows = x.numel() / n;
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * n;
    double* dst = out.data() + r * n;
    const double hi = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (dst[j] = std::exp(row[j] - hi));
    for (std::size_t j = 0; j < n; ++j) dst[j] /= z;
  }
  Impl xi = x.impl();
  return make_result(x.shape(), std::move(out), "softmax", {xi},
                     [xi, n, rows](const TensorImpl& o) {
                       auto& g = xi->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* y = o.data.data() + r * n;
                         const double* dy = o.grad.data() + r * n;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
                         for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
                       }
                     });
}

Tensor gelu(const Tensor& x) {
  const auto in = x.data();
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  std::vector<double> out(in.size());
  auto slope = std::make_shared<std::vector<double>>(in.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = in[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    out[i] = v * cdf;
    (*slope)[i] = cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
  }
  Impl xi = x.impl();
  return make_result(x.shape(), std::move(out), "gelu", {xi}, [xi, slope](const TensorImpl& o) {
    auto& g = xi->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (*slope)[i];
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t d = last_dim(x);
  if (d == 0) throw ShapeError("layer_norm over an empty axis");
  if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d) {
    throw ShapeError("layer_norm: affine parameters do not match last axis of " +
                     shape_to_string(x.shape()));
  }
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / d;
  const auto in = x.data();
  const auto gm = gain.data();
  const auto bs = bias.data();
  std::vector<double> normalized(x.numel()), rstd(rows), out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mu) * rstd[r];
      normalized[r * d + j] = xh;
      out[r * d + j] = xh * gm[j] + bs[j];
    }
  }
  Impl xi = x.impl(), gi = gain.impl(), bi = bias.impl();
  return make_result(
      x.shape(), std::move(out), "layer_norm", {xi, gi, bi},
      [xi, gi, bi, d, rows, normalized = std::move(normalized),
       rstd = std::move(rstd)](const TensorImpl& o) {
        if (gi->requires_grad || bi->requires_grad) {
          auto& gg = gi->grad_buffer();
          auto& gb = bi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
              const double dy = o.grad[r * d + j];
              if (gi->requires_grad) gg[j] += dy * normalized[r * d + j];
              if (bi->requires_grad) gb[j] += dy;
            }
          }
        }
        if (!xi->requires_grad) return;
        auto& gx = xi->grad_buffer();
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double g = o.grad[r * d + j] * gi->data[j];
            sum_g += g;
            sum_gx += g * normalized[r * d + j];
          }
          for (std::size_t j = 0; j < d; ++j) {
            const double g = o.grad[r * d + j] * gi->data[j];
            gx[r * d + j] +=
                rstd[r] * (g - sum_g * inv_d - normalized[r * d + j] * sum_gx * inv_d);
          }
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids, Shape leading) {
  if (table.rank() != 2) throw ShapeError("embedding table must be a matrix");
  if (shape_numel(leading) != ids.size()) throw ShapeError("embedding: ids do not match shape");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  const auto tab = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw VocabError("token id " + std::to_string(ids[i]) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    std::copy_n(tab.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  leading.push_back(d);
  Impl ti = table.impl();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return make_result(std::move(leading), std::move(out), "embedding", {ti},
                     [ti, d, idx = std::move(idx)](const TensorImpl& o) {
                       auto& g = ti->grad_buffer();
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         double* dst = g.data() + static_cast<std::size_t>(idx[i]) * d;
                         const double* src = o.grad.data() + i * d;
                         for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                       }
                     });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> targets,
                             std::int32_t ignore_id, double normalizer) {
  const std::size_t v = last_dim(logits), rows = logits.numel() / v;
  if (targets.size() != rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " rows");
  }
  std::size_t counted = 0;
  for (std::int32_t t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw VocabError("target id " + std::to_string(t) + " outside " + std::to_string(v) +
                       " classes");
    }
    ++counted;
  }
  if (counted == 0) throw EmptyLossError();
  const double denom = normalizer > 0.0 ? normalizer : static_cast<double>(counted);
  const auto z = logits.data();
  std::vector<double> probs(logits.numel(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == ignore_id) continue;
    const double* row = z.data() + r * v;
    const double hi = *std::max_element(row, row + v);
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) s += (probs[r * v + j] = std::exp(row[j] - hi));
    const double lse = hi + std::log(s);
    for (std::size_t j = 0; j < v; ++j) probs[r * v + j] /= s;
    total += lse - row[targets[r]];
  }
  Impl li = logits.impl();
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return make_result({1}, {total / denom}, "softmax_cross_entropy", {li},
                     [li, v, rows, denom, ignore_id, tgt = std::move(tgt),
                      probs = std::move(probs)](const TensorImpl& o) {
                       auto& g = li->grad_buffer();
                       const double up = o.grad[0] / denom;
                       for (std::size_t r = 0; r < rows; ++r) {
                         if (tgt[r] == ignore_id) continue;
                         for (std::size_t j = 0; j < v; ++j) g[r * v + j] += up * probs[r * v + j];
                         g[r * v + static_cast<std::size_t>(tgt[r])] -= up;
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Impl xi = x.impl();
  return make_result({1}, {s}, "sum", {xi}, [xi](const TensorImpl& o) {
    auto& g = xi->grad_buffer();
    for (double& gv : g) gv += o.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

}  // namespace swcm::ops
