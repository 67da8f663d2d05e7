// SPDX-License-Identifier: Apache-2.0
#include "swcm/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "swcm/error.hpp"

namespace swcm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

unsigned long long to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::out_of_range&) {
    throw ConfigError(key + ": value out of range");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const bool neg = !v.empty() && v[0] == '-';
  const auto u = to_unsigned(key, neg ? v.substr(1) : v);
  if (u > 1000000000ULL) throw ConfigError(key + ": value out of range");
  return neg ? -static_cast<int>(u) : static_cast<int>(u);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool is_path = false;
};

#define SWCM_INT(name, member)                                               \
  Field {                                                                    \
    name, [](const RunConfig& c) { return std::to_string(c.member); },       \
        [](RunConfig& c, const std::string& v) { c.member = to_int(name, v); } \
  }
#define SWCM_SIZE(name, member)                                                   \
  Field {                                                                         \
    name, [](const RunConfig& c) { return std::to_string(c.member); },            \
        [](RunConfig& c, const std::string& v) {                                  \
          c.member = static_cast<decltype(c.member)>(to_unsigned(name, v));       \
        }                                                                         \
  }
#define SWCM_DOUBLE(name, member)                                                 \
  Field {                                                                         \
    name, [](const RunConfig& c) { return fmt(c.member); },                       \
        [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); } \
  }
#define SWCM_BOOL(name, member)                                                 \
  Field {                                                                       \
    name, [](const RunConfig& c) { return from_bool(c.member); },               \
        [](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); } \
  }
#define SWCM_PATH(name, member)                                                              \
  Field {                                                                                    \
    name, [](const RunConfig& c) { return c.member; },                                       \
        [](RunConfig& c, const std::string& v) { c.member = v; }, true                      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SWCM_SIZE("seed", seed),
      SWCM_INT("n_encoder_layers", model.n_encoder_layers),
      SWCM_INT("d_model", model.d_model),
      SWCM_INT("n_heads", model.n_heads),
      SWCM_INT("d_ff", model.d_ff),
      SWCM_INT("vocab_size", model.vocab_size),
      SWCM_INT("max_seq_len", model.max_seq_len),
      SWCM_INT("insert_every_x", model.insert_every_x),
      SWCM_BOOL("use_weight_sharing", use_weight_sharing),
      Field{"normal_layer_mode",
            [](const RunConfig& c) { return std::string(to_string(c.normal_layer_mode)); },
            [](RunConfig& c, const std::string& v) {
              c.normal_layer_mode = parse_normal_layer_mode(v);
            }},
      SWCM_BOOL("tie_grafted_weights", tie_grafted_weights),
      SWCM_BOOL("use_dae", train.use_dae),
      SWCM_BOOL("use_mt", train.use_mt),
      SWCM_DOUBLE("mt_probability", train.mt_probability),
      SWCM_DOUBLE("sampling_alpha", train.sampling_alpha),
      SWCM_DOUBLE("mask_ratio", noise.mask_ratio),
      SWCM_DOUBLE("span_lambda", noise.span_lambda),
      SWCM_DOUBLE("peak_lr", train.peak_lr),
      SWCM_DOUBLE("warmup_floor_lr", train.warmup_floor_lr),
      SWCM_DOUBLE("warmup_proportion", train.warmup_proportion),
      Field{"warmup_mode",
            [](const RunConfig& c) { return std::string(to_string(c.train.warmup_mode)); },
            [](RunConfig& c, const std::string& v) { c.train.warmup_mode = parse_warmup_mode(v); }},
      SWCM_INT("epochs", train.epochs),
      SWCM_SIZE("max_steps", train.max_steps),
      SWCM_SIZE("global_batch", train.global_batch),
      SWCM_SIZE("grad_accum_steps", train.grad_accum_steps),
      SWCM_DOUBLE("grad_clip_norm", train.grad_clip_norm),
      SWCM_DOUBLE("adam_beta1", train.adam_beta1),
      SWCM_DOUBLE("adam_beta2", train.adam_beta2),
      SWCM_DOUBLE("adam_eps", train.adam_eps),
      SWCM_DOUBLE("weight_decay", train.weight_decay),
      SWCM_DOUBLE("tf_final_ratio", train.tf_final_ratio),
      SWCM_BOOL("scheduled_sampling", train.scheduled_sampling),
      SWCM_BOOL("scheduled_sampling_in_finetune", train.scheduled_sampling_in_finetune),
      Field{"frozen_prefixes", [](const RunConfig& c) { return join(c.train.frozen_prefixes); },
            [](RunConfig& c, const std::string& v) { c.train.frozen_prefixes = split_list(v); }},
      SWCM_PATH("vocab_path", vocab_path),
      SWCM_PATH("monolingual_path", monolingual_path),
      SWCM_PATH("parallel_path", parallel_path),
      SWCM_PATH("valid_path", valid_path),
      SWCM_PATH("encoder_checkpoint", encoder_checkpoint),
      SWCM_PATH("init_checkpoint", init_checkpoint),
      SWCM_PATH("output_dir", output_dir),
      SWCM_SIZE("checkpoint_every", checkpoint_every),
      SWCM_INT("eval_max_new", eval_max_new),
  };
  return table;
}

#undef SWCM_INT
#undef SWCM_SIZE
#undef SWCM_DOUBLE
#undef SWCM_BOOL
#undef SWCM_PATH

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::validate() const {
  ModelConfig m = model;
  if (m.vocab_size == 0) m.vocab_size = special::kFirstLanguage + 1;  // taken from the vocabulary
  m.validate();
  train.validate();
  noise.validate();
  if (eval_max_new < 1) throw ConfigError("eval_max_new must be >= 1");
}

RunConfig RunConfig::parse(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const Field& f = field(key);
    if (f.is_path && !value.empty() && !base_dir.empty() &&
        std::filesystem::path(value).is_relative()) {
      value = (std::filesystem::path(base_dir) / value).lexically_normal().string();
    }
    f.set(cfg, value);
  }
  cfg.train.seed = cfg.seed;
  cfg.noise.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  RunConfig cfg = parse(ss.str(), dir);
  cfg.seed = seed_override(cfg.seed);
  cfg.train.seed = cfg.seed;
  cfg.noise.seed = cfg.seed;
  return cfg;
}

std::uint64_t seed_override(std::uint64_t fallback) {
  const char* env = std::getenv("SWCM_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  return to_unsigned("SWCM_SEED", env);
}

}  // namespace swcm
