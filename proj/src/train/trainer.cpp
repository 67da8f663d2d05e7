// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "swcm/error.hpp"
#include "swcm/ops.hpp"
#include "swcm/train.hpp"

namespace swcm {

std::size_t PretrainData::mono_count() const {
  std::size_t n = 0;
  for (const auto& m : mono) n += m.size();
  return n;
}

std::size_t PretrainData::pair_count() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.size();
  return n;
}

PretrainData build_pretrain_data(const std::vector<MonolingualExample>& mono,
                                 const std::vector<ParallelExample>& parallel, const Vocab& vocab,
                                 std::size_t max_seq_len, const NoiseConfig& noise) {
  noise.validate();
  PretrainData data;
  data.noise = noise;
  std::map<std::string, std::size_t> mono_index, pair_index;
  for (const auto& ex : mono) {
    auto [it, inserted] = mono_index.emplace(ex.lang, data.mono_langs.size());
    if (inserted) {
      data.mono_langs.push_back(ex.lang);
      data.mono.emplace_back();
    }
    auto framed = encode_text(ex.text, ex.lang, vocab, max_seq_len);
    if (framed.size() > 3) data.mono[it->second].push_back(std::move(framed));
  }
  for (const auto& p : parallel) {
    auto [it, inserted] = pair_index.emplace(p.src_lang, data.pair_groups.size());
    if (inserted) {
      data.pair_groups.push_back(p.src_lang);
      data.pairs.emplace_back();
    }
    data.pairs[it->second].push_back(
        {make_pair_example(p, vocab, max_seq_len, Task::Translation, false),
         make_pair_example(p, vocab, max_seq_len, Task::Translation, true)});
  }
  return data;
}

namespace {

template <typename Group>
std::size_t draw_group(const std::vector<Group>& groups, double alpha, Rng& rng) {
  std::vector<std::size_t> counts;
  std::vector<std::size_t> nonempty;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!groups[i].empty()) {
      counts.push_back(groups[i].size());
      nonempty.push_back(i);
    }
  }
  const auto q = proportions(counts);
  return nonempty[sample_language(sampling_weights(q, alpha), rng)];
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

Example draw_pretrain_example(const PretrainData& data, const TrainConfig& cfg, Rng& rng) {
  const std::size_t n_mono = cfg.use_dae ? data.mono_count() : 0;
  const std::size_t n_pair = cfg.use_mt ? data.pair_count() : 0;
  if (n_mono == 0 && n_pair == 0) throw ConfigError("no pretraining data for the enabled tasks");
  double p_mt = 0.0;
  if (n_mono == 0) {
    p_mt = 1.0;
  } else if (n_pair > 0) {
    p_mt = cfg.mt_probability >= 0.0
               ? cfg.mt_probability
               : static_cast<double>(n_pair) / static_cast<double>(n_pair + n_mono);
  }
  const bool mt = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_mt;
  if (mt) {
    const std::size_t g = draw_group(data.pairs, cfg.sampling_alpha, rng);
    const auto& pair = data.pairs[g][uniform_index(data.pairs[g].size(), rng)];
    return pair[std::bernoulli_distribution(0.5)(rng) ? 1 : 0];
  }
  const std::size_t l = draw_group(data.mono, cfg.sampling_alpha, rng);
  const auto& framed = data.mono[l][uniform_index(data.mono[l].size(), rng)];
  NoisedExample noised = dae_noise(framed, data.noise, rng);
  return {std::move(noised.input), std::move(noised.target), Task::Dae, data.mono_langs[l]};
}

std::vector<Example> make_dae_examples(const std::vector<MonolingualExample>& mono,
                                       const Vocab& vocab, std::size_t max_seq_len,
                                       const NoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  std::vector<Example> out;
  out.reserve(mono.size());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    auto framed = encode_text(mono[i].text, mono[i].lang, vocab, max_seq_len);
    if (framed.size() <= 3) continue;
    Rng rng = derive_rng(seed, "dae_eval", i);
    NoisedExample n = dae_noise(framed, noise, rng);
    out.push_back({std::move(n.input), std::move(n.target), Task::Dae, mono[i].lang});
  }
  return out;
}

TokenBatch scheduled_sampling_inputs(const SharedWeightModel& model, const Batch& batch,
                                     double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("sampling ratio must lie in [0, 1]");
  ShiftedTarget shifted = shift_target(batch.target);
  TokenBatch inputs = shifted.inputs;
  if (ratio >= 1.0) return inputs;
  std::vector<TokenId> preds(inputs.rows * inputs.cols);
  {
    NoGradGuard no_grad;
    Tensor enc = encoder_forward(model, batch.source);
    Tensor logits = decoder_forward(model, inputs, enc, batch.source.padding);
    const auto z = logits.data();
    const std::size_t vocab = static_cast<std::size_t>(model.config.vocab_size);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double* row = z.data() + i * vocab;
      preds[i] = static_cast<TokenId>(std::max_element(row, row + vocab) - row);
    }
  }
  std::bernoulli_distribution keep(ratio);
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    for (std::size_t c = 2; c < inputs.cols; ++c) {
      if (inputs.is_pad(r, c)) continue;
      if (!keep(rng)) inputs.ids[r * inputs.cols + c] = preds[r * inputs.cols + c - 1];
    }
  }
  return inputs;
}

double evaluate_loss(const SharedWeightModel& model, std::span<const Example> examples,
                     std::size_t batch_size) {
  if (examples.empty()) throw EmptyEvaluationError("no examples to evaluate");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  NoGradGuard no_grad;
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < examples.size(); i += batch_size) {
    const auto chunk = examples.subspan(i, std::min(batch_size, examples.size() - i));
    Batch b = make_batch(chunk);
    const double loss = seq2seq_loss(model, b.source, b.target).item();
    total += loss * static_cast<double>(b.target_tokens);
    tokens += b.target_tokens;
  }
  return total / static_cast<double>(tokens);
}

std::string format_log_line(const StepRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu\t%d\t%s\t%s\t%.17g\t%.17g\t%.17g", r.step, r.epoch,
                r.task.c_str(), r.lang.c_str(), r.loss, r.lr, r.grad_norm);
  return buf;
}

StepRecord parse_log_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) f.push_back(field);
  if (f.size() != 7) throw FormatError("loss log line needs 7 fields: " + line);
  StepRecord r;
  try {
    r.step = static_cast<std::size_t>(std::stoull(f[0]));
    r.epoch = std::stoi(f[1]);
    r.task = f[2];
    r.lang = f[3];
    r.loss = std::stod(f[4]);
    r.lr = std::stod(f[5]);
    r.grad_norm = std::stod(f[6]);
  } catch (const std::logic_error&) {
    throw FormatError("malformed loss log line: " + line);
  }
  return r;
}

Trainer::Trainer(SharedWeightModel& model, TrainConfig cfg, ExampleSource source,
                 std::size_t dataset_size, bool scheduled_sampling)
    : model_(model), cfg_(std::move(cfg)), source_(std::move(source)),
      scheduled_sampling_(scheduled_sampling) {
  cfg_.validate();
  if (dataset_size == 0) throw ConfigError("training set is empty");
  steps_per_epoch_ = (dataset_size + cfg_.global_batch - 1) / cfg_.global_batch;
  total_steps_ = cfg_.max_steps > 0 ? cfg_.max_steps
                                    : static_cast<std::size_t>(cfg_.epochs) * steps_per_epoch_;
  optimizer_ = OptimizerState::from_config(cfg_);
  trainable_ = trainable_parameters(model_, cfg_.frozen_prefixes);
  all_params_ = unique_parameters(model_);
}

int Trainer::total_epochs() const {
  if (cfg_.max_steps == 0) return cfg_.epochs;
  return static_cast<int>((total_steps_ + steps_per_epoch_ - 1) / steps_per_epoch_);
}

int Trainer::epoch_of(std::size_t step_index) const {
  return std::min(static_cast<int>(step_index / steps_per_epoch_) + 1, total_epochs());
}

void Trainer::restore(std::size_t steps_done, OptimizerState optimizer) {
  if (steps_done > total_steps_) throw ConfigError("restored step beyond the training budget");
  steps_done_ = steps_done;
  optimizer_ = std::move(optimizer);
}

StepRecord Trainer::step() {
  if (steps_done_ >= total_steps_) throw ConfigError("training budget exhausted");
  const std::size_t index = steps_done_;
  Rng rng = derive_rng(cfg_.seed, "step", index);
  std::vector<Example> examples;
  examples.reserve(cfg_.global_batch);
  for (std::size_t i = 0; i < cfg_.global_batch; ++i) examples.push_back(source_(rng));

  StepRecord rec;
  rec.step = index + 1;
  rec.epoch = epoch_of(index);
  rec.task = to_string(examples.front().task);
  rec.lang = examples.front().lang;
  std::size_t tokens = 0;
  for (const auto& e : examples) {
    if (to_string(e.task) != rec.task) rec.task = "mixed";
    if (e.lang != rec.lang) rec.lang = "mixed";
    if (e.target.size() < 2) throw ShapeError("target shorter than two tokens");
    tokens += e.target.size() - 1;
  }

  const double ratio =
      scheduled_sampling_ ? teacher_forcing_ratio(rec.epoch, total_epochs(), cfg_) : 1.0;
  for (auto& p : all_params_) p.tensor.zero_grad();
  const std::size_t micro = cfg_.global_batch / cfg_.grad_accum_steps;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += micro) {
    const Batch b = make_batch(std::span<const Example>(examples).subspan(start, micro));
    Tensor loss;
    if (ratio < 1.0) {
      TokenBatch inputs = scheduled_sampling_inputs(model_, b, ratio, rng);
      ShiftedTarget shifted = shift_target(b.target);
      loss = seq2seq_loss(model_, b.source, inputs, shifted.labels, static_cast<double>(tokens));
    } else {
      loss = seq2seq_loss(model_, b.source, b.target, static_cast<double>(tokens));
    }
    loss.backward();
    loss_sum += loss.item();
  }
  if (!std::isfinite(loss_sum)) {
    throw NumericError("non-finite loss at step " + std::to_string(rec.step));
  }
  rec.loss = loss_sum;
  rec.lr = lr_schedule(index, total_steps_, cfg_, steps_per_epoch_);
  rec.grad_norm = clip_gradients(trainable_, cfg_.grad_clip_norm);
  adamw_step(trainable_, optimizer_, rec.lr);
  for (auto& p : all_params_) p.tensor.zero_grad();
  ++steps_done_;
  return rec;
}

std::vector<StepRecord> Trainer::run(std::size_t until,
                                     const std::function<void(const StepRecord&)>& on_step) {
  const std::size_t target = until == 0 ? total_steps_ : std::min(until, total_steps_);
  std::vector<StepRecord> log;
  while (steps_done_ < target) {
    log.push_back(step());
    if (on_step) on_step(log.back());
  }
  return log;
}

TrainResult pretrain(SharedWeightModel& model, const PretrainData& data, const TrainConfig& cfg,
                     const std::function<void(const StepRecord&)>& on_step) {
  const std::size_t size =
      (cfg.use_dae ? data.mono_count() : 0) + (cfg.use_mt ? data.pair_count() : 0);
  Trainer trainer(
      model, cfg, [&](Rng& rng) { return draw_pretrain_example(data, cfg, rng); }, size,
      cfg.scheduled_sampling);
  return {trainer.run(0, on_step)};
}

TrainResult finetune(SharedWeightModel& model, const std::vector<Example>& examples,
                     const TrainConfig& cfg,
                     const std::function<void(const StepRecord&)>& on_step) {
  Trainer trainer(
      model, cfg, [&](Rng& rng) { return examples[uniform_index(examples.size(), rng)]; },
      examples.size(), cfg.scheduled_sampling_in_finetune);
  return {trainer.run(0, on_step)};
}

std::vector<double> pretrain_encoder_mlm(EncoderStack& encoder, const ModelConfig& config,
                                         const std::vector<std::vector<TokenId>>& sentences,
                                         const MlmConfig& mlm) {
  config.validate();
  if (mlm.steps == 0 || mlm.batch == 0) throw ConfigError("mlm steps and batch must be positive");
  if (!(mlm.mask_prob > 0.0 && mlm.mask_prob < 1.0)) {
    throw ConfigError("mask_prob must lie in (0, 1)");
  }
  std::vector<const std::vector<TokenId>*> usable;
  std::vector<TokenId> body_tokens;
  for (const auto& s : sentences) {
    if (s.size() <= 3) continue;
    usable.push_back(&s);
    body_tokens.insert(body_tokens.end(), s.begin() + 2, s.end() - 1);
  }
  if (usable.empty()) throw ConfigError("no sentences for masked-LM pretraining");

  TrainConfig sched;
  sched.peak_lr = mlm.peak_lr;
  sched.warmup_floor_lr = 0.0;
  OptimizerState opt = OptimizerState::from_config(sched);
  auto params = unique_parameters(encoder);
  std::vector<double> losses;
  losses.reserve(mlm.steps);
  for (std::size_t step = 0; step < mlm.steps; ++step) {
    Rng rng = derive_rng(mlm.seed, "mlm", step);
    std::vector<std::vector<TokenId>> inputs;
    std::vector<std::vector<TokenId>> labels;
    std::bernoulli_distribution pick(mlm.mask_prob);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < mlm.batch; ++i) {
      auto seq = *usable[uniform_index(usable.size(), rng)];
      std::vector<TokenId> lab(seq.size(), kIgnoreLabel);
      std::vector<std::size_t> chosen;
      for (std::size_t c = 2; c + 1 < seq.size(); ++c) {
        if (pick(rng)) chosen.push_back(c);
      }
      if (chosen.empty()) chosen.push_back(2 + uniform_index(seq.size() - 3, rng));
      for (std::size_t c : chosen) {
        lab[c] = seq[c];
        const double u = unit(rng);
        if (u < 0.8) {
          seq[c] = special::kMask;
        } else if (u < 0.9) {
          seq[c] = body_tokens[uniform_index(body_tokens.size(), rng)];
        }
      }
      inputs.push_back(std::move(seq));
      labels.push_back(std::move(lab));
    }
    TokenBatch batch = TokenBatch::from_sequences(inputs);
    std::vector<TokenId> flat(batch.rows * batch.cols, kIgnoreLabel);
    for (std::size_t r = 0; r < batch.rows; ++r) {
      std::copy(labels[r].begin(), labels[r].end(), flat.begin() + r * batch.cols);
    }
    for (auto& p : params) p.tensor.zero_grad();
    Tensor hidden = encoder_forward(encoder, config, batch);
    Tensor logits = ops::matmul_transposed(hidden, encoder.token_embedding);
    Tensor loss = ops::softmax_cross_entropy(logits, flat, kIgnoreLabel);
    loss.backward();
    clip_gradients(params, 1.0);
    adamw_step(params, opt, lr_schedule(step, mlm.steps, sched));
    losses.push_back(loss.item());
  }
  for (auto& p : params) p.tensor.zero_grad();
  return losses;
}

}  // namespace swcm
