// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "swcm/error.hpp"
#include "swcm/eval.hpp"

namespace swcm {

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference,
               double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  RougeL out;
  if (candidate.empty() || reference.empty()) return out;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  out.p = lcs / static_cast<double>(candidate.size());
  out.r = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  const double denom = out.r + b2 * out.p;
  out.f = denom > 0.0 ? (1.0 + b2) * out.p * out.r / denom : 0.0;
  return out;
}

}  // namespace swcm
