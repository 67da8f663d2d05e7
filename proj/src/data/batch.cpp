// SPDX-License-Identifier: Apache-2.0
#include "swcm/batch.hpp"

#include "swcm/error.hpp"

namespace swcm {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Dae: return "dae";
    case Task::Translation: return "mt";
    case Task::Seq2Seq: return "seq2seq";
  }
  return "seq2seq";
}

Batch make_batch(std::span<const Example> examples) {
  if (examples.empty()) throw ShapeError("cannot batch zero examples");
  std::vector<std::vector<TokenId>> src, tgt;
  Batch b;
  for (const auto& e : examples) {
    if (e.target.size() < 2) throw ShapeError("target shorter than two tokens");
    src.push_back(e.source);
    tgt.push_back(e.target);
    b.target_tokens += e.target.size() - 1;
  }
  b.source = TokenBatch::from_sequences(src);
  b.target = TokenBatch::from_sequences(tgt);
  return b;
}

std::vector<TokenId> encode_text(std::string_view text, const std::string& lang, const Vocab& vocab,
                                 std::size_t max_seq_len) {
  return frame_sequence(tokenize(text, vocab), vocab.language(lang), max_seq_len);
}

Example make_pair_example(const ParallelExample& pair, const Vocab& vocab, std::size_t max_seq_len,
                          Task task, bool reverse) {
  Example e;
  e.task = task;
  if (!reverse) {
    e.source = encode_text(pair.src, pair.src_lang, vocab, max_seq_len);
    e.target = encode_text(pair.tgt, pair.tgt_lang, vocab, max_seq_len);
    e.lang = pair.tgt_lang;
  } else {
    e.source = encode_text(pair.tgt, pair.tgt_lang, vocab, max_seq_len);
    e.target = encode_text(pair.src, pair.src_lang, vocab, max_seq_len);
    e.lang = pair.src_lang;
  }
  return e;
}

}  // namespace swcm
