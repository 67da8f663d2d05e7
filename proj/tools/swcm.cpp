// SPDX-License-Identifier: Apache-2.0
// swcm: command-line front end for grafting, training and evaluation.
#include <iostream>

#include <CLI11.hpp>

#include "swcm/commands.hpp"
#include "swcm/error.hpp"

using namespace swcm;

int main(int argc, char** argv) {
  CLI::App app{"Shared-weight encoder-decoder toolkit"};
  app.require_subcommand(1);

  GraftOptions graft;
  std::string graft_mode = "insert";
  bool graft_no_ws = false;
  auto* graft_cmd = app.add_subcommand("graft", "Build an encoder-decoder from an encoder checkpoint");
  graft_cmd->add_option("--encoder-ckpt", graft.encoder_ckpt, "Encoder checkpoint")->required();
  graft_cmd->add_option("--x", graft.x, "Custom layers between Normal layers")->required();
  graft_cmd->add_option("--out", graft.out, "Output checkpoint")->required();
  graft_cmd->add_option("--seed", graft.seed, "Seed for Normal layers");
  graft_cmd->add_option("--normal-layer-mode", graft_mode, "insert|none|duplicate");
  graft_cmd->add_flag("--no-weight-sharing", graft_no_ws, "Randomly initialize the decoder");
  graft_cmd->add_flag("--tie", graft.tie, "Alias grafted blocks to encoder storage");

  GenCorpusOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic multilingual corpus");
  gen_cmd->add_option("--languages", gen.spec.languages, "Language codes, pivot first")
      ->delimiter(',')
      ->required();
  gen_cmd->add_option("--sizes", gen.spec.sizes, "Monolingual sentences per language")
      ->delimiter(',')
      ->required();
  gen_cmd->add_option("--parallel", gen.spec.parallel_pairs, "Pairs per non-pivot language");
  gen_cmd->add_option("--valid", gen.valid_per_language, "Held-out sentences per language");
  gen_cmd->add_option("--alphabet-size", gen.spec.alphabet_size);
  gen_cmd->add_option("--lexicon-size", gen.spec.lexicon_size);
  gen_cmd->add_option("--min-words", gen.spec.min_words);
  gen_cmd->add_option("--max-words", gen.spec.max_words);
  gen_cmd->add_option("--seed", gen.spec.seed);
  gen_cmd->add_option("--out-dir", gen.out_dir)->required();

  InitEncoderOptions init;
  auto* init_cmd = app.add_subcommand("init-encoder", "Create (and optionally MLM-pretrain) an encoder");
  init_cmd->add_option("--config", init.config, "Run config with model keys")->required();
  init_cmd->add_option("--out", init.out, "Output checkpoint")->required();
  init_cmd->add_option("--mlm-steps", init.mlm_steps, "Masked-LM steps (0: random init)");
  init_cmd->add_option("--mlm-batch", init.mlm_batch);
  init_cmd->add_option("--mlm-lr", init.mlm_lr);

  std::string pretrain_config;
  PretrainOptions pretrain_opt;
  auto* pre_cmd = app.add_subcommand("pretrain", "Multi-task DAE + MT pretraining");
  pre_cmd->add_option("config", pretrain_config, "Run config")->required();
  pre_cmd->add_flag("--resume", pretrain_opt.resume, "Continue from output_dir/model.ckpt");
  pre_cmd->add_option("--stop-after", pretrain_opt.stop_after, "Stop after this step");

  std::string finetune_config;
  auto* ft_cmd = app.add_subcommand("finetune", "Seq2seq finetuning");
  ft_cmd->add_option("config", finetune_config, "Run config")->required();

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "ROUGE-L evaluation");
  eval_cmd->add_option("--ckpt", eval.ckpt)->required();
  eval_cmd->add_option("--data", eval.data, "Parallel-format pairs")->required();
  eval_cmd->add_option("--vocab", eval.vocab);
  eval_cmd->add_option("--out", eval.out, "Results file");
  eval_cmd->add_option("--lang", eval.lang, "Output language");
  eval_cmd->add_option("--max-new", eval.max_new);

  GenerateOptions gen_out;
  auto* generate_cmd = app.add_subcommand("generate", "Greedy generation");
  generate_cmd->add_option("--ckpt", gen_out.ckpt)->required();
  generate_cmd->add_option("--input", gen_out.input, "Lines of lang<TAB>text")->required();
  generate_cmd->add_option("--lang", gen_out.lang, "Output language")->required();
  generate_cmd->add_option("--vocab", gen_out.vocab);
  generate_cmd->add_option("--out", gen_out.out);
  generate_cmd->add_option("--max-new", gen_out.max_new);

  std::string sweep_config;
  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep-x", "Grid over insertion frequency and data size");
  sweep_cmd->add_option("config", sweep_config, "Base finetuning config")->required();
  sweep_cmd->add_option("--x-list", sweep.x_list)->delimiter(',')->required();
  sweep_cmd->add_option("--sizes", sweep.sizes)->delimiter(',')->required();
  sweep_cmd->add_option("--out-dir", sweep.out_dir)->required();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect-ckpt", "Print a checkpoint manifest summary");
  inspect_cmd->add_option("ckpt", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kConfig;
  }

  try {
    if (*graft_cmd) {
      graft.normal_layer_mode = parse_normal_layer_mode(graft_mode);
      graft.use_weight_sharing = !graft_no_ws;
      graft.seed = seed_override(graft.seed);
      cmd_graft(graft, std::cout);
    } else if (*gen_cmd) {
      gen.spec.seed = seed_override(gen.spec.seed);
      cmd_gen_corpus(gen, std::cout);
    } else if (*init_cmd) {
      cmd_init_encoder(init, std::cout);
    } else if (*pre_cmd) {
      cmd_pretrain(RunConfig::load(pretrain_config), pretrain_opt, std::cout);
    } else if (*ft_cmd) {
      cmd_finetune(RunConfig::load(finetune_config), std::cout);
    } else if (*eval_cmd) {
      cmd_evaluate(eval, std::cout);
    } else if (*generate_cmd) {
      cmd_generate(gen_out, std::cout);
    } else if (*sweep_cmd) {
      cmd_sweep_x(RunConfig::load(sweep_config), sweep, std::cout);
    } else if (*inspect_cmd) {
      cmd_inspect(inspect_path, std::cout);
    }
  } catch (...) {
    return exit_code_for_current_exception(std::cerr);
  }
  return exit_code::kOk;
}
