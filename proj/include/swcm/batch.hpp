// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swcm/corpus.hpp"
#include "swcm/model.hpp"
#include "swcm/vocab.hpp"

namespace swcm {

enum class Task { Dae, Translation, Seq2Seq };

std::string_view to_string(Task task);

/// One framed source/target pair ready for batching.
struct Example {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  Task task = Task::Seq2Seq;
  std::string lang;  // language of the target side
};

struct Batch {
  TokenBatch source;
  TokenBatch target;
  std::size_t target_tokens = 0;  // non-pad positions that carry a label
};

Batch make_batch(std::span<const Example> examples);

/// tokenize + frame_sequence.
std::vector<TokenId> encode_text(std::string_view text, const std::string& lang, const Vocab& vocab,
                                 std::size_t max_seq_len);

Example make_pair_example(const ParallelExample& pair, const Vocab& vocab, std::size_t max_seq_len,
                          Task task = Task::Seq2Seq, bool reverse = false);

}  // namespace swcm
