// SPDX-License-Identifier: Apache-2.0
#include "swcm/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "swcm/error.hpp"

namespace swcm {

static_assert(std::endian::native == std::endian::little, "payload is little-endian f64");

namespace {

constexpr const char* kMagic = "swcm-checkpoint";
constexpr int kVersion = 1;
constexpr const char* kTerminator = "end-of-manifest";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("bad number '" + s + "' in checkpoint");
  return v;
}

std::size_t parse_size(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("bad integer '" + s + "' in checkpoint");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

std::string shape_field(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(shape[i]);
  }
  return out.empty() ? "scalar" : out;
}

Shape parse_shape(const std::string& s) {
  Shape shape;
  if (s == "scalar") return shape;
  std::stringstream ss(s);
  std::string dim;
  while (std::getline(ss, dim, ',')) shape.push_back(parse_size(dim));
  return shape;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

struct Blob {
  std::string name;
  const Tensor* tensor = nullptr;
  const std::vector<double>* values = nullptr;
};

}  // namespace

std::string_view to_string(CheckpointKind kind) {
  return kind == CheckpointKind::Encoder ? "encoder" : "seq2seq";
}

Checkpoint make_checkpoint(const SharedWeightModel& model) {
  Checkpoint c;
  c.kind = CheckpointKind::Seq2Seq;
  c.config = model.config;
  c.model = model;
  return c;
}

Checkpoint make_checkpoint(const EncoderStack& encoder, const ModelConfig& config) {
  Checkpoint c;
  c.kind = CheckpointKind::Encoder;
  c.config = config;
  c.encoder = encoder;
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<ParameterRef> slots =
      ckpt.kind == CheckpointKind::Encoder
          ? parameter_slots(const_cast<EncoderStack&>(ckpt.encoder))
          : parameter_slots(const_cast<SharedWeightModel&>(ckpt.model));
  std::ostringstream h;
  const ModelConfig& c = ckpt.config;
  h << kMagic << ' ' << kVersion << '\n';
  h << "kind " << to_string(ckpt.kind) << '\n';
  h << "config n_encoder_layers " << c.n_encoder_layers << " d_model " << c.d_model
    << " n_heads " << c.n_heads << " d_ff " << c.d_ff << " vocab_size " << c.vocab_size
    << " max_seq_len " << c.max_seq_len << " insert_every_x " << c.insert_every_x << '\n';
  if (ckpt.kind == CheckpointKind::Seq2Seq) h << "layout " << ckpt.model.layout.to_string() << '\n';
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.empty() || k.find_first_of(" \t\n") != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw FormatError("metadata entries must be single-line and keys space-free");
    }
    h << "meta " << k << ' ' << v << '\n';
  }
  if (!ckpt.vocab.empty()) {
    h << "vocab " << ckpt.vocab.size() << '\n';
    for (const auto& t : ckpt.vocab) h << t << '\n';
  }

  std::vector<Blob> blobs;
  std::unordered_map<const TensorImpl*, std::string> stored;
  for (const auto& s : slots) {
    auto it = stored.find(s.tensor->impl().get());
    if (it != stored.end()) {
      h << "tie " << s.name << ' ' << it->second << '\n';
      continue;
    }
    stored.emplace(s.tensor->impl().get(), s.name);
    blobs.push_back({s.name, s.tensor, nullptr});
  }
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    h << "optimizer " << o.step << ' ' << hex(o.beta1) << ' ' << hex(o.beta2) << ' '
      << hex(o.eps) << ' ' << hex(o.weight_decay) << '\n';
    for (const auto& m : o.moments) {
      blobs.push_back({"optim.m." + m.name, nullptr, &m.m});
      blobs.push_back({"optim.v." + m.name, nullptr, &m.v});
    }
  }
  std::size_t offset = 0;
  std::string payload;
  for (const auto& b : blobs) {
    std::span<const double> data = b.tensor ? b.tensor->data() : std::span<const double>(*b.values);
    const Shape shape = b.tensor ? b.tensor->shape() : Shape{b.values->size()};
    const std::size_t bytes = data.size() * sizeof(double);
    h << "tensor " << b.name << ' ' << shape_field(shape) << " f64 " << offset << ' ' << bytes
      << '\n';
    payload.append(reinterpret_cast<const char*>(data.data()), bytes);
    offset += bytes;
  }
  h << kTerminator << '\n';
  return h.str() + payload;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("cannot move checkpoint into place at " + path);
  }
}

namespace {

CheckpointManifest parse_manifest(const std::string& bytes, std::size_t& payload_start) {
  std::istringstream in(bytes);
  std::string line;
  bool terminated = false;

  CheckpointManifest m;
  if (!std::getline(in, line)) throw FormatError("empty checkpoint");
  auto head = words(line);
  if (head.size() != 2 || head[0] != kMagic) throw FormatError("not a checkpoint file");
  m.version = static_cast<int>(parse_size(head[1]));
  if (m.version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(m.version));
  }
  bool have_kind = false, have_config = false;
  while (std::getline(in, line)) {
    if (line == kTerminator) {
      terminated = true;
      break;
    }
    auto w = words(line);
    if (w.empty()) throw FormatError("blank line in checkpoint manifest");
    const std::string& key = w[0];
    if (key == "kind" && w.size() == 2) {
      if (w[1] == "encoder") {
        m.kind = CheckpointKind::Encoder;
      } else if (w[1] == "seq2seq") {
        m.kind = CheckpointKind::Seq2Seq;
      } else {
        throw FormatError("unknown checkpoint kind '" + w[1] + "'");
      }
      have_kind = true;
    } else if (key == "config" && w.size() == 15) {
      std::map<std::string, int> v;
      for (std::size_t i = 1; i + 1 < w.size(); i += 2) {
        v[w[i]] = static_cast<int>(parse_size(w[i + 1]));
      }
      const char* names[] = {"n_encoder_layers", "d_model", "n_heads", "d_ff",
                             "vocab_size", "max_seq_len", "insert_every_x"};
      for (const char* n : names) {
        if (!v.count(n)) throw FormatError(std::string("config is missing ") + n);
      }
      m.config = {v["n_encoder_layers"], v["d_model"], v["n_heads"], v["d_ff"],
                  v["vocab_size"],       v["max_seq_len"], v["insert_every_x"]};
      have_config = true;
    } else if (key == "layout") {
      try {
        m.layout = DecoderLayout::parse(line.substr(7));
      } catch (const Error& e) {
        throw FormatError(std::string("bad layout: ") + e.what());
      }
    } else if (key == "meta" && w.size() >= 2) {
      const std::size_t start = line.find(w[1], 5) + w[1].size();
      m.metadata[w[1]] = start < line.size() ? line.substr(start + 1) : "";
    } else if (key == "vocab" && w.size() == 2) {
      const std::size_t n = parse_size(w[1]);
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw FormatError("truncated vocabulary in checkpoint");
        m.vocab.push_back(line);
      }
    } else if (key == "optimizer" && w.size() == 6) {
      OptimizerState o;
      o.step = static_cast<std::int64_t>(parse_size(w[1]));
      o.beta1 = parse_double(w[2]);
      o.beta2 = parse_double(w[3]);
      o.eps = parse_double(w[4]);
      o.weight_decay = parse_double(w[5]);
      m.optimizer_header = o;
    } else if (key == "tie" && w.size() == 3) {
      m.ties.emplace_back(w[1], w[2]);
    } else if (key == "tensor" && w.size() == 6) {
      if (w[3] != "f64") throw FormatError("unsupported dtype '" + w[3] + "'");
      m.tensors.push_back({w[1], parse_shape(w[2]), parse_size(w[4]), parse_size(w[5])});
    } else {
      throw FormatError("unrecognized manifest line: " + line);
    }
  }
  if (!terminated) throw FormatError("checkpoint manifest is not terminated");
  payload_start = static_cast<std::size_t>(in.tellg());
  if (!have_kind || !have_config) throw FormatError("checkpoint manifest lacks kind or config");
  try {
    m.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid config in checkpoint: ") + e.what());
  }
  if (m.kind == CheckpointKind::Seq2Seq && !m.layout) {
    throw FormatError("seq2seq checkpoint lacks a layout");
  }
  if (m.layout) {
    for (const auto& e : m.layout->entries) {
      if (e.source_encoder_layer && (*e.source_encoder_layer < 0 ||
                                     *e.source_encoder_layer >= m.config.n_encoder_layers)) {
        throw FormatError("layout references a missing encoder layer");
      }
    }
  }
  std::size_t expected = 0;
  for (const auto& t : m.tensors) {
    if (t.offset != expected) throw FormatError("tensor offsets are not contiguous at " + t.name);
    if (t.length != shape_numel(t.shape) * sizeof(double)) {
      throw FormatError("tensor length does not match shape for " + t.name);
    }
    expected += t.length;
  }
  if (bytes.size() - payload_start != expected) {
    throw FormatError("checkpoint payload size does not match the manifest");
  }
  return m;
}

}  // namespace

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  std::size_t payload_start = 0;
  CheckpointManifest m = parse_manifest(bytes, payload_start);
  Checkpoint c;
  c.kind = m.kind;
  c.config = m.config;
  c.vocab = m.vocab;
  c.metadata = m.metadata;
  std::vector<ParameterRef> slots;
  if (m.kind == CheckpointKind::Encoder) {
    c.encoder = make_encoder_skeleton(m.config);
    slots = parameter_slots(c.encoder);
  } else {
    c.model = make_model_skeleton(m.config, *m.layout);
    slots = parameter_slots(c.model);
  }
  std::unordered_map<std::string, Tensor*> by_name;
  for (const auto& s : slots) by_name.emplace(s.name, s.tensor);
  std::set<std::string> filled;
  std::unordered_map<std::string, std::vector<double>> moments;
  std::vector<std::string> moment_order;

  const char* payload = bytes.data() + payload_start;
  for (const auto& t : m.tensors) {
    std::vector<double> values(shape_numel(t.shape));
    std::memcpy(values.data(), payload + t.offset, t.length);
    if (t.name.rfind("optim.", 0) == 0) {
      if (!m.optimizer_header) throw FormatError("optimizer tensor without optimizer header");
      if (t.name.rfind("optim.m.", 0) == 0) moment_order.push_back(t.name.substr(8));
      moments[t.name] = std::move(values);
      continue;
    }
    auto it = by_name.find(t.name);
    if (it == by_name.end()) throw FormatError("unknown tensor '" + t.name + "'");
    if (it->second->shape() != t.shape) {
      throw FormatError("shape mismatch for '" + t.name + "': expected " +
                        shape_to_string(it->second->shape()) + ", found " +
                        shape_to_string(t.shape));
    }
    if (!filled.insert(t.name).second) throw FormatError("duplicate tensor '" + t.name + "'");
    *it->second = Tensor::from_data(t.shape, std::move(values), true);
  }
  for (const auto& [alias, target] : m.ties) {
    auto a = by_name.find(alias);
    auto b = by_name.find(target);
    if (a == by_name.end() || b == by_name.end() || !filled.count(target)) {
      throw FormatError("bad tie " + alias + " -> " + target);
    }
    if (a->second->shape() != b->second->shape()) throw FormatError("tie shape mismatch for " + alias);
    if (!filled.insert(alias).second) throw FormatError("tensor '" + alias + "' stored twice");
    *a->second = *b->second;
  }
  for (const auto& s : slots) {
    if (!filled.count(s.name)) throw FormatError("checkpoint is missing tensor '" + s.name + "'");
  }
  if (m.optimizer_header) {
    OptimizerState o = *m.optimizer_header;
    for (const auto& name : moment_order) {
      auto mi = moments.find("optim.m." + name);
      auto vi = moments.find("optim.v." + name);
      if (vi == moments.end() || mi->second.size() != vi->second.size()) {
        throw FormatError("incomplete optimizer moments for " + name);
      }
      o.moments.push_back({name, std::move(mi->second), std::move(vi->second)});
    }
    if (o.moments.size() * 2 != moments.size()) throw FormatError("unpaired optimizer moments");
    c.optimizer = std::move(o);
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

CheckpointManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::size_t start = 0;
  return parse_manifest(ss.str(), start);
}

}  // namespace swcm
