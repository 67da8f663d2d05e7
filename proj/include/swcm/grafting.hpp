// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "swcm/layout.hpp"
#include "swcm/model.hpp"

namespace swcm {

/// Builds decoder layers for `layout` from `encoder`.
///
/// A Custom entry copies its source encoder layer: self-attention into both
/// the self- and cross-attention blocks, the FFN into FFN1 and FFN2, the
/// attention norm into both attention norms and the FFN norm into both FFN
/// norms. Normal entries are freshly initialized from a stream keyed by
/// (seed, slot), so the seed only affects Normal layers.
///
/// With `tie` set, Custom blocks alias encoder storage instead of copying.
std::vector<DecoderLayerParams> graft_weights(const ModelConfig& config,
                                              const std::vector<EncoderLayerParams>& encoder,
                                              const DecoderLayout& layout, std::uint64_t seed,
                                              bool tie = false);

/// Same shapes as graft_weights, every layer randomly initialized.
std::vector<DecoderLayerParams> random_decoder(const ModelConfig& config,
                                               const DecoderLayout& layout, std::uint64_t seed);

struct AssembleOptions {
  std::uint64_t seed = 0;
  bool use_weight_sharing = true;
  NormalLayerMode normal_layer_mode = NormalLayerMode::Insert;
  bool tie_grafted_weights = false;
};

/// Full model over a freshly initialized encoder (seeded from options.seed).
SharedWeightModel assemble_model(const ModelConfig& config, const AssembleOptions& options);
/// Full model over a copy of `pretrained`.
SharedWeightModel assemble_model(const ModelConfig& config, const EncoderStack& pretrained,
                                 const AssembleOptions& options);

/// Throws GraftError if `encoder` does not have the shapes `config` implies.
void check_encoder_shapes(const ModelConfig& config, const EncoderStack& encoder);

}  // namespace swcm
