// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swcm/model.hpp"
#include "swcm/train.hpp"

namespace swcm {

enum class CheckpointKind { Encoder, Seq2Seq };

std::string_view to_string(CheckpointKind kind);

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::Seq2Seq;
  ModelConfig config;
  EncoderStack encoder;     // Encoder kind
  SharedWeightModel model;  // Seq2Seq kind
  std::vector<std::string> vocab;  // token per id; may be empty
  std::optional<OptimizerState> optimizer;
  std::map<std::string, std::string> metadata;  // e.g. "step"
};

Checkpoint make_checkpoint(const SharedWeightModel& model);
Checkpoint make_checkpoint(const EncoderStack& encoder, const ModelConfig& config);

/// One tensor record of the manifest.
struct TensorRecord {
  std::string name;
  Shape shape;
  std::size_t offset = 0;  // bytes from the start of the payload
  std::size_t length = 0;  // bytes
};

struct CheckpointManifest {
  int version = 0;
  CheckpointKind kind = CheckpointKind::Seq2Seq;
  ModelConfig config;
  std::optional<DecoderLayout> layout;
  std::vector<std::pair<std::string, std::string>> ties;  // alias -> stored tensor
  std::vector<TensorRecord> tensors;
  std::vector<std::string> vocab;
  std::map<std::string, std::string> metadata;
  std::optional<OptimizerState> optimizer_header;  // scalars only
};

/// Text manifest followed by the raw little-endian f64 payload. Aliased
/// slots are written once and listed as ties.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
std::string serialize_checkpoint(const Checkpoint& ckpt);

/// Throws FormatError on any malformed or inconsistent content.
Checkpoint load_checkpoint(const std::string& path);
Checkpoint deserialize_checkpoint(const std::string& bytes);
CheckpointManifest read_manifest(const std::string& path);

}  // namespace swcm
