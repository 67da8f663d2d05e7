// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "swcm/tensor.hpp"

// Differentiable tensor operations. Every op validates shapes, rejects
// non-finite outputs with NumericError, and records a backward rule when
// gradient recording is enabled and some input requires grad.
namespace swcm::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// x[..., n] + bias[n]
Tensor add_bias(const Tensor& x, const Tensor& bias);

// a[..., k] · b[k, n] -> [..., n]. Leading axes of `a` are flattened.
Tensor matmul(const Tensor& a, const Tensor& b);
// a[..., k] · b[n, k]ᵀ -> [..., n]
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// a[B, m, k] · b[B, k, n], or with transpose_b: a[B, m, k] · b[B, n, k]ᵀ
Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b);

Tensor reshape(const Tensor& x, Shape shape);
// [b, s, h·dh] -> [b·h, s, dh]
Tensor split_heads(const Tensor& x, std::size_t heads);
// [b·h, s, dh] -> [b, s, h·dh]
Tensor merge_heads(const Tensor& x, std::size_t heads);

// Positions with mask != 0 are overwritten by `value`; no gradient flows there.
Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value);
Tensor softmax(const Tensor& x);  // over the last axis
Tensor gelu(const Tensor& x);     // exact (erf) form
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
// Gathers rows of table[V, d]; output shape is `leading` + [d].
Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids, Shape leading);

/// Mean negative log-likelihood of `targets` under softmax(logits) over the
/// positions whose target != ignore_id. logits are [..., v] with one target
/// per leading position. A positive `normalizer` replaces the count of
/// non-ignored positions as the divisor (used for gradient accumulation).
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> targets,
                             std::int32_t ignore_id, double normalizer = 0.0);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace swcm::ops
