// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "swcm/corpus.hpp"
#include "swcm/eval.hpp"
#include "swcm/layout.hpp"
#include "swcm/run_config.hpp"

namespace swcm {

/// Process exit codes shared by every subcommand.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kMalformedInput = 2;
inline constexpr int kConfig = 3;
inline constexpr int kNumeric = 4;
inline constexpr int kEmptyEvaluation = 5;
}  // namespace exit_code

/// Maps the exception currently being handled to an exit code, writing the
/// message to `err`.
int exit_code_for_current_exception(std::ostream& err);

struct GraftOptions {
  std::string encoder_ckpt;
  std::string out;
  int x = 3;
  std::uint64_t seed = 0;
  bool use_weight_sharing = true;
  NormalLayerMode normal_layer_mode = NormalLayerMode::Insert;
  bool tie = false;
};
void cmd_graft(const GraftOptions& opt, std::ostream& out);

struct GenCorpusOptions {
  SyntheticCorpusSpec spec;
  std::size_t valid_per_language = 0;  // held-out monolingual sentences
  std::string out_dir;
};
/// Writes mono.tsv, parallel.tsv, vocab.txt and (if requested) valid.tsv.
void cmd_gen_corpus(const GenCorpusOptions& opt, std::ostream& out);

struct InitEncoderOptions {
  std::string config;  // model keys, vocab_path, monolingual_path, seed
  std::string out;
  std::size_t mlm_steps = 0;  // 0: random initialization only
  std::size_t mlm_batch = 16;
  double mlm_lr = 1e-3;
};
void cmd_init_encoder(const InitEncoderOptions& opt, std::ostream& out);

struct PretrainOptions {
  bool resume = false;
  std::size_t stop_after = 0;  // stop (as if interrupted) after this step; 0: run to the end
};
/// Writes resolved.cfg, loss.log and model.ckpt under output_dir. Returns
/// the held-out DAE loss when valid_path is set, else NaN.
double cmd_pretrain(const RunConfig& cfg, const PretrainOptions& opt, std::ostream& out);

/// Writes resolved.cfg, loss.log, model.ckpt and, with valid_path set,
/// results.tsv. Returns the mean ROUGE-L on valid_path (zeros without one).
RougeL cmd_finetune(const RunConfig& cfg, std::ostream& out);

struct EvaluateOptions {
  std::string ckpt;
  std::string data;  // parallel format
  std::string vocab;  // defaults to the checkpoint's vocabulary
  std::string out;
  std::string lang;  // defaults to the target language of the data
  int max_new = 64;
};
RougeL cmd_evaluate(const EvaluateOptions& opt, std::ostream& out);

struct GenerateOptions {
  std::string ckpt;
  std::string input;  // monolingual format: lang<TAB>text
  std::string vocab;
  std::string out;
  std::string lang;
  int max_new = 64;
};
void cmd_generate(const GenerateOptions& opt, std::ostream& out);

struct SweepOptions {
  std::vector<int> x_list;
  std::vector<std::size_t> sizes;
  std::string out_dir;
};
/// Finetunes one model per (X, size) cell from the same encoder and writes
/// grid.tsv (`x size f p r`) under out_dir.
void cmd_sweep_x(const RunConfig& base, const SweepOptions& opt, std::ostream& out);

void cmd_inspect(const std::string& ckpt, std::ostream& out);

}  // namespace swcm
