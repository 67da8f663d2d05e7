// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "swcm/model.hpp"

namespace swcm {

struct RougeL {
  double f = 0.0;
  double p = 0.0;
  double r = 0.0;
};

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);

/// P = LCS/|candidate|, R = LCS/|reference|, F = (1+β²)PR / (R + β²P).
RougeL rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference,
               double beta = 1.0);

/// Framed source and framed reference.
struct EvalExample {
  std::string id;
  std::vector<TokenId> source;
  std::vector<TokenId> reference;
};

struct EvalRecord {
  std::string id;
  std::vector<TokenId> candidate;  // body tokens only
  RougeL score;
};

struct EvalReport {
  RougeL mean;
  std::vector<EvalRecord> records;
};

/// Greedy-decodes each source under `lang_token` and scores the generated
/// body against the reference body. Throws EmptyEvaluationError on an
/// empty set.
EvalReport evaluate_corpus(const SharedWeightModel& model, std::span<const EvalExample> eval_set,
                           TokenId lang_token, int max_new, std::size_t batch_size = 16);

/// `example_id<TAB>f<TAB>p<TAB>r` per record, then `mean<TAB>f<TAB>p<TAB>r`.
std::string format_report(const EvalReport& report);

}  // namespace swcm
