// SPDX-License-Identifier: Apache-2.0
#include "swcm/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "swcm/batch.hpp"
#include "swcm/checkpoint.hpp"
#include "swcm/error.hpp"
#include "swcm/grafting.hpp"
#include "swcm/train.hpp"
#include "swcm/vocab.hpp"

namespace fs = std::filesystem;

namespace swcm {

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const FormatError& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return exit_code::kMalformedInput;
  } catch (const VocabError& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return exit_code::kMalformedInput;
  } catch (const NumericError& e) {
    err << "error: numeric failure: " << e.what() << '\n';
    return exit_code::kNumeric;
  } catch (const EmptyEvaluationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kEmptyEvaluation;
  } catch (const Error& e) {
    err << "error: configuration: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

Vocab vocab_from(const Checkpoint& ckpt, const std::string& override_path) {
  if (!override_path.empty()) return Vocab::load(override_path);
  if (ckpt.vocab.empty()) throw ConfigError("checkpoint has no vocabulary; pass --vocab");
  return Vocab::from_lines(ckpt.vocab);
}

Vocab load_run_vocab(const RunConfig& cfg) {
  if (cfg.vocab_path.empty()) throw ConfigError("vocab_path is required");
  return Vocab::load(cfg.vocab_path);
}

ModelConfig resolved_model_config(const RunConfig& cfg, const Vocab& vocab) {
  ModelConfig m = cfg.model;
  if (m.vocab_size == 0) m.vocab_size = static_cast<int>(vocab.size());
  if (static_cast<std::size_t>(m.vocab_size) < vocab.size()) {
    throw ConfigError("vocab_size is smaller than the vocabulary");
  }
  m.validate();
  return m;
}

AssembleOptions assemble_options(const RunConfig& cfg) {
  return {cfg.seed, cfg.use_weight_sharing, cfg.normal_layer_mode, cfg.tie_grafted_weights};
}

// Starting model for a training run: a full checkpoint, a grafted encoder
// checkpoint, or a fresh random encoder.
SharedWeightModel initial_model(const RunConfig& cfg, const Vocab& vocab) {
  if (!cfg.init_checkpoint.empty()) {
    Checkpoint c = load_checkpoint(cfg.init_checkpoint);
    if (c.kind != CheckpointKind::Seq2Seq) {
      throw FormatError("init_checkpoint must hold a full model");
    }
    if (static_cast<std::size_t>(c.config.vocab_size) < vocab.size()) {
      throw ConfigError("checkpoint vocabulary is smaller than vocab_path");
    }
    return std::move(c.model);
  }
  ModelConfig m = resolved_model_config(cfg, vocab);
  if (!cfg.encoder_checkpoint.empty()) {
    Checkpoint c = load_checkpoint(cfg.encoder_checkpoint);
    const EncoderStack& enc = c.kind == CheckpointKind::Encoder ? c.encoder : c.model.encoder;
    ModelConfig from = c.config;
    from.insert_every_x = m.insert_every_x;
    if (static_cast<std::size_t>(from.vocab_size) < vocab.size()) {
      throw ConfigError("encoder vocabulary is smaller than vocab_path");
    }
    return assemble_model(from, enc, assemble_options(cfg));
  }
  return assemble_model(m, assemble_options(cfg));
}

void save_model(const fs::path& path, const SharedWeightModel& model, const Vocab& vocab,
                const OptimizerState* opt, std::size_t step, std::uint64_t seed) {
  Checkpoint c = make_checkpoint(model);
  c.vocab = vocab.to_lines();
  if (opt) c.optimizer = *opt;
  c.metadata["step"] = std::to_string(step);
  c.metadata["seed"] = std::to_string(seed);
  save_checkpoint(path.string(), c);
}

std::vector<EvalExample> eval_examples(const std::vector<ParallelExample>& pairs,
                                       const Vocab& vocab, std::size_t max_seq_len) {
  std::vector<EvalExample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({std::to_string(i), encode_text(pairs[i].src, pairs[i].src_lang, vocab, max_seq_len),
                   encode_text(pairs[i].tgt, pairs[i].tgt_lang, vocab, max_seq_len)});
  }
  return out;
}

std::string common_target_language(const std::vector<ParallelExample>& pairs) {
  std::string lang;
  for (const auto& p : pairs) {
    if (lang.empty()) lang = p.tgt_lang;
    if (p.tgt_lang != lang) {
      throw ConfigError("evaluation data mixes target languages; pass --lang");
    }
  }
  return lang;
}

void print_rouge(std::ostream& out, const RougeL& s, std::size_t n) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "rouge-l f=%.6f p=%.6f r=%.6f n=%zu\n", s.f, s.p, s.r, n);
  out << buf;
}

}  // namespace

void cmd_graft(const GraftOptions& opt, std::ostream& out) {
  Checkpoint src = load_checkpoint(opt.encoder_ckpt);
  const EncoderStack& enc = src.kind == CheckpointKind::Encoder ? src.encoder : src.model.encoder;
  ModelConfig config = src.config;
  config.insert_every_x = opt.x;
  if (opt.x < 1) throw ConfigError("--x must be >= 1");
  SharedWeightModel model = assemble_model(
      config, enc, {opt.seed, opt.use_weight_sharing, opt.normal_layer_mode, opt.tie});
  Checkpoint c = make_checkpoint(model);
  c.vocab = src.vocab;
  c.metadata["seed"] = std::to_string(opt.seed);
  c.metadata["step"] = "0";
  save_checkpoint(opt.out, c);

  const std::size_t total = parameter_count(unique_parameters(model));
  const std::size_t encoder = parameter_count(unique_parameters(model.encoder));
  out << "layout: " << model.layout.to_string() << '\n';
  out << model.layout.size() << " decoder layers (" << model.layout.custom_count() << " custom, "
      << model.layout.normal_count() << " normal)\n";
  out << "parameters: encoder " << encoder << ", decoder " << total - encoder << ", total "
      << total << '\n';
}

void cmd_gen_corpus(const GenCorpusOptions& opt, std::ostream& out) {
  SyntheticCorpusSpec spec = opt.spec;
  for (auto& s : spec.sizes) s += opt.valid_per_language;
  SyntheticCorpus corpus = gen_synthetic_corpus(spec);
  ensure_dir(opt.out_dir);
  std::vector<MonolingualExample> train, valid;
  std::map<std::string, std::size_t> seen;
  for (const auto& ex : corpus.monolingual) {
    const std::size_t k = seen[ex.lang]++;
    (k < opt.valid_per_language ? valid : train).push_back(ex);
  }
  const fs::path dir(opt.out_dir);
  write_monolingual((dir / "mono.tsv").string(), train);
  write_parallel((dir / "parallel.tsv").string(), corpus.parallel);
  if (opt.valid_per_language > 0) write_monolingual((dir / "valid.tsv").string(), valid);
  std::vector<std::string> extra;
  for (const auto& code : corpus.codes()) extra.push_back(code);
  Vocab vocab = Vocab::build(extra, corpus.symbols());
  vocab.save((dir / "vocab.txt").string());
  out << "monolingual " << train.size() << ", held-out " << valid.size() << ", parallel "
      << corpus.parallel.size() << ", vocabulary " << vocab.size() << '\n';
}

void cmd_init_encoder(const InitEncoderOptions& opt, std::ostream& out) {
  RunConfig cfg = RunConfig::load(opt.config);
  Vocab vocab = load_run_vocab(cfg);
  ModelConfig m = resolved_model_config(cfg, vocab);
  EncoderStack enc = random_encoder_stack(m, cfg.seed);
  if (opt.mlm_steps > 0) {
    if (cfg.monolingual_path.empty()) throw ConfigError("masked-LM pretraining needs monolingual_path");
    std::vector<std::vector<TokenId>> sentences;
    for (const auto& ex : read_monolingual(cfg.monolingual_path)) {
      sentences.push_back(encode_text(ex.text, ex.lang, vocab, static_cast<std::size_t>(m.max_seq_len)));
    }
    MlmConfig mlm;
    mlm.steps = opt.mlm_steps;
    mlm.batch = opt.mlm_batch;
    mlm.peak_lr = opt.mlm_lr;
    mlm.seed = cfg.seed;
    const auto losses = pretrain_encoder_mlm(enc, m, sentences, mlm);
    out << "masked-LM loss " << losses.front() << " -> " << losses.back() << '\n';
  }
  Checkpoint c = make_checkpoint(enc, m);
  c.vocab = vocab.to_lines();
  c.metadata["seed"] = std::to_string(cfg.seed);
  save_checkpoint(opt.out, c);
  out << "encoder: " << m.n_encoder_layers << " layers, "
      << parameter_count(unique_parameters(enc)) << " parameters\n";
}

double cmd_pretrain(const RunConfig& cfg, const PretrainOptions& opt, std::ostream& out) {
  cfg.validate();
  Vocab vocab = load_run_vocab(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  write_text(dir / "resolved.cfg", cfg.to_text());

  std::vector<MonolingualExample> mono;
  std::vector<ParallelExample> parallel;
  if (!cfg.monolingual_path.empty()) mono = read_monolingual(cfg.monolingual_path);
  if (!cfg.parallel_path.empty()) parallel = read_parallel(cfg.parallel_path);

  const fs::path ckpt_path = dir / "model.ckpt";
  const fs::path log_path = dir / "loss.log";
  SharedWeightModel model;
  std::optional<OptimizerState> restored;
  std::size_t start = 0;
  if (opt.resume && fs::exists(ckpt_path)) {
    Checkpoint c = load_checkpoint(ckpt_path.string());
    if (c.kind != CheckpointKind::Seq2Seq) throw FormatError("resume checkpoint is not a full model");
    model = std::move(c.model);
    restored = std::move(c.optimizer);
    start = c.metadata.count("step") ? std::stoull(c.metadata.at("step")) : 0;
  } else {
    model = initial_model(cfg, vocab);
  }
  const std::size_t max_len = static_cast<std::size_t>(model.config.max_seq_len);
  PretrainData data = build_pretrain_data(mono, parallel, vocab, max_len, cfg.noise);
  const std::size_t size =
      (cfg.train.use_dae ? data.mono_count() : 0) + (cfg.train.use_mt ? data.pair_count() : 0);
  Trainer trainer(
      model, cfg.train, [&](Rng& rng) { return draw_pretrain_example(data, cfg.train, rng); },
      size, cfg.train.scheduled_sampling);

  // Keep the log consistent with the restored step.
  std::vector<std::string> kept;
  if (start > 0) {
    if (!restored) throw FormatError("resume checkpoint lacks optimizer state");
    trainer.restore(start, *restored);
    std::ifstream in(log_path);
    std::string line;
    while (std::getline(in, line) && kept.size() < start) kept.push_back(line);
  }
  {
    std::ofstream log(log_path, std::ios::trunc);
    for (const auto& l : kept) log << l << '\n';
  }
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw ConfigError("cannot write " + log_path.string());

  const std::size_t until = opt.stop_after > 0 ? opt.stop_after : 0;
  trainer.run(until, [&](const StepRecord& r) {
    log << format_log_line(r) << '\n';
    log.flush();
    if (cfg.checkpoint_every > 0 && r.step % cfg.checkpoint_every == 0) {
      save_model(ckpt_path, model, vocab, &trainer.optimizer(), r.step, cfg.seed);
    }
  });
  save_model(ckpt_path, model, vocab, &trainer.optimizer(), trainer.steps_done(), cfg.seed);
  out << "steps " << trainer.steps_done() << "/" << trainer.total_steps() << '\n';

  double valid_loss = std::numeric_limits<double>::quiet_NaN();
  if (!cfg.valid_path.empty() && trainer.steps_done() == trainer.total_steps()) {
    const auto held_out =
        make_dae_examples(read_monolingual(cfg.valid_path), vocab, max_len, cfg.noise, cfg.seed);
    valid_loss = evaluate_loss(model, held_out);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g\n", valid_loss);
    write_text(dir / "valid_loss.txt", buf);
    out << "held-out loss " << buf;
  }
  return valid_loss;
}

RougeL cmd_finetune(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  Vocab vocab = load_run_vocab(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  write_text(dir / "resolved.cfg", cfg.to_text());
  if (cfg.parallel_path.empty()) throw ConfigError("finetuning needs parallel_path");

  SharedWeightModel model = initial_model(cfg, vocab);
  const std::size_t max_len = static_cast<std::size_t>(model.config.max_seq_len);
  std::vector<Example> examples;
  for (const auto& p : read_parallel(cfg.parallel_path)) {
    examples.push_back(make_pair_example(p, vocab, max_len, Task::Seq2Seq));
  }
  if (examples.empty()) throw ConfigError("finetuning data is empty");

  std::ofstream log(dir / "loss.log", std::ios::trunc);
  Trainer trainer(
      model, cfg.train,
      [&](Rng& rng) {
        return examples[std::uniform_int_distribution<std::size_t>(0, examples.size() - 1)(rng)];
      },
      examples.size(), cfg.train.scheduled_sampling_in_finetune);
  trainer.run(0, [&](const StepRecord& r) { log << format_log_line(r) << '\n'; });
  save_model(dir / "model.ckpt", model, vocab, nullptr, trainer.steps_done(), cfg.seed);
  out << "steps " << trainer.steps_done() << '\n';

  RougeL mean;
  if (!cfg.valid_path.empty()) {
    const auto pairs = read_parallel(cfg.valid_path);
    const auto set = eval_examples(pairs, vocab, max_len);
    const std::string lang = common_target_language(pairs);
    if (set.empty()) throw EmptyEvaluationError("validation set is empty");
    EvalReport report =
        evaluate_corpus(model, set, vocab.language(lang).token, cfg.eval_max_new);
    write_text(dir / "results.tsv", format_report(report));
    print_rouge(out, report.mean, report.records.size());
    mean = report.mean;
  }
  return mean;
}

RougeL cmd_evaluate(const EvaluateOptions& opt, std::ostream& out) {
  Checkpoint c = load_checkpoint(opt.ckpt);
  if (c.kind != CheckpointKind::Seq2Seq) throw FormatError("evaluate needs a full model checkpoint");
  Vocab vocab = vocab_from(c, opt.vocab);
  const auto pairs = read_parallel(opt.data);
  if (pairs.empty()) throw EmptyEvaluationError("evaluation set is empty");
  const std::string lang = opt.lang.empty() ? common_target_language(pairs) : opt.lang;
  const auto set = eval_examples(pairs, vocab, static_cast<std::size_t>(c.config.max_seq_len));
  EvalReport report = evaluate_corpus(c.model, set, vocab.language(lang).token, opt.max_new);
  if (!opt.out.empty()) write_text(opt.out, format_report(report));
  print_rouge(out, report.mean, report.records.size());
  return report.mean;
}

void cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  Checkpoint c = load_checkpoint(opt.ckpt);
  if (c.kind != CheckpointKind::Seq2Seq) throw FormatError("generate needs a full model checkpoint");
  Vocab vocab = vocab_from(c, opt.vocab);
  const TokenId lang = vocab.language(opt.lang).token;
  const auto inputs = read_monolingual(opt.input);
  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out, std::ios::trunc);
    if (!file) throw ConfigError("cannot write " + opt.out);
  }
  std::ostream& sink = opt.out.empty() ? out : file;
  const std::size_t max_len = static_cast<std::size_t>(c.config.max_seq_len);
  for (const auto& ex : inputs) {
    const auto src = encode_text(ex.text, ex.lang, vocab, max_len);
    const auto seq = generate_greedy(c.model, TokenBatch::from_sequences({src}), lang, opt.max_new);
    sink << vocab.token(seq[0][1]) << '\t' << detokenize(strip_frame(seq[0]), vocab) << '\n';
  }
  if (!opt.out.empty()) out << "generated " << inputs.size() << " lines\n";
}

void cmd_sweep_x(const RunConfig& base, const SweepOptions& opt, std::ostream& out) {
  if (opt.x_list.empty() || opt.sizes.empty()) throw ConfigError("sweep needs --x-list and --sizes");
  if (base.parallel_path.empty()) throw ConfigError("sweep needs parallel_path");
  const auto pairs = read_parallel(base.parallel_path);
  ensure_dir(opt.out_dir);
  std::ofstream grid(fs::path(opt.out_dir) / "grid.tsv", std::ios::trunc);
  grid << "x\tsize\tf\tp\tr\n";
  for (int x : opt.x_list) {
    for (std::size_t size : opt.sizes) {
      if (size == 0 || size > pairs.size()) {
        throw ConfigError("sweep size " + std::to_string(size) + " exceeds the available pairs");
      }
      RunConfig cell = base;
      cell.model.insert_every_x = x;
      const fs::path dir =
          fs::path(opt.out_dir) / ("x" + std::to_string(x) + "_n" + std::to_string(size));
      ensure_dir(dir.string());
      const fs::path subset = dir / "train.tsv";
      write_parallel(subset.string(), {pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(size)});
      cell.parallel_path = subset.string();
      cell.output_dir = dir.string();
      out << "cell x=" << x << " size=" << size << '\n';
      const RougeL r = cmd_finetune(cell, out);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d\t%zu\t%.17g\t%.17g\t%.17g\n", x, size, r.f, r.p, r.r);
      grid << buf;
      grid.flush();
    }
  }
}

void cmd_inspect(const std::string& ckpt, std::ostream& out) {
  CheckpointManifest m = read_manifest(ckpt);
  const ModelConfig& c = m.config;
  out << "kind: " << to_string(m.kind) << '\n';
  out << "config: n_encoder_layers=" << c.n_encoder_layers << " d_model=" << c.d_model
      << " n_heads=" << c.n_heads << " d_ff=" << c.d_ff << " vocab_size=" << c.vocab_size
      << " max_seq_len=" << c.max_seq_len << " insert_every_x=" << c.insert_every_x << '\n';
  if (m.layout) {
    out << "layout: " << m.layout->to_string() << '\n';
    out << m.layout->size() << " decoder layers (" << m.layout->custom_count() << " custom, "
        << m.layout->normal_count() << " normal)\n";
  }
  std::size_t params = 0, tensors = 0, optim = 0;
  for (const auto& t : m.tensors) {
    if (t.name.rfind("optim.", 0) == 0) {
      ++optim;
    } else {
      ++tensors;
      params += shape_numel(t.shape);
    }
  }
  out << "tensors: " << tensors << " (" << params << " parameters)\n";
  for (const auto& [alias, target] : m.ties) out << "tie: " << alias << " -> " << target << '\n';
  if (m.optimizer_header) {
    out << "optimizer: step " << m.optimizer_header->step << ", " << optim / 2 << " moment pairs\n";
  }
  if (!m.vocab.empty()) out << "vocabulary: " << m.vocab.size() << " tokens\n";
  for (const auto& [k, v] : m.metadata) out << "meta: " << k << " = " << v << '\n';
}

}  // namespace swcm
