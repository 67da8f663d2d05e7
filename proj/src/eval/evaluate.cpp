// SPDX-License-Identifier: Apache-2.0
#include <cstdio>

#include "swcm/error.hpp"
#include "swcm/eval.hpp"
#include "swcm/vocab.hpp"

namespace swcm {

EvalReport evaluate_corpus(const SharedWeightModel& model, std::span<const EvalExample> eval_set,
                           TokenId lang_token, int max_new, std::size_t batch_size) {
  if (eval_set.empty()) throw EmptyEvaluationError("evaluation set is empty");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  EvalReport report;
  for (std::size_t i = 0; i < eval_set.size(); i += batch_size) {
    const auto chunk = eval_set.subspan(i, std::min(batch_size, eval_set.size() - i));
    std::vector<std::vector<TokenId>> sources;
    for (const auto& e : chunk) sources.push_back(e.source);
    const auto generated =
        generate_greedy(model, TokenBatch::from_sequences(sources), lang_token, max_new);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      EvalRecord rec;
      rec.id = chunk[k].id;
      rec.candidate = strip_frame(generated[k]);
      const auto reference = strip_frame(chunk[k].reference);
      rec.score = rouge_l(rec.candidate, reference);
      report.records.push_back(std::move(rec));
    }
  }
  for (const auto& r : report.records) {
    report.mean.f += r.score.f;
    report.mean.p += r.score.p;
    report.mean.r += r.score.r;
  }
  const double n = static_cast<double>(report.records.size());
  report.mean.f /= n;
  report.mean.p /= n;
  report.mean.r /= n;
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[256];
  auto line = [&](const std::string& id, const RougeL& s) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%.17g\n", s.f, s.p, s.r);
    out += id;
    out += buf;
  };
  for (const auto& r : report.records) line(r.id, r.score);
  line("mean", report.mean);
  return out;
}

}  // namespace swcm
