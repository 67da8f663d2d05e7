// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "swcm/layout.hpp"
#include "swcm/tensor.hpp"
#include "swcm/tokens.hpp"

namespace swcm {

struct ModelConfig {
  int n_encoder_layers = 4;
  int d_model = 32;
  int n_heads = 4;
  int d_ff = 64;
  int vocab_size = 256;
  int max_seq_len = 64;
  int insert_every_x = 3;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Weight is [in, out]; y = x·W + b.
struct LinearParams {
  Tensor weight;
  Tensor bias;
};

struct AttentionParams {
  LinearParams query, key, value, output;
};

struct FeedForwardParams {
  LinearParams expand;    // d_model -> d_ff
  LinearParams contract;  // d_ff -> d_model
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct EncoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams self_attn_norm;
  FeedForwardParams ffn;
  LayerNormParams ffn_norm;
};

// self-attn -> FFN1 -> cross-attn -> FFN2, each post-norm with residual.
struct CustomDecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams self_attn_norm;
  FeedForwardParams ffn1;
  LayerNormParams ffn1_norm;
  AttentionParams cross_attn;
  LayerNormParams cross_attn_norm;
  FeedForwardParams ffn2;
  LayerNormParams ffn2_norm;
};

// self-attn -> cross-attn -> FFN.
struct NormalDecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams self_attn_norm;
  AttentionParams cross_attn;
  LayerNormParams cross_attn_norm;
  FeedForwardParams ffn;
  LayerNormParams ffn_norm;
};

using DecoderLayerParams = std::variant<CustomDecoderLayerParams, NormalDecoderLayerParams>;

/// Embeddings plus encoder layers: everything a pretrained encoder provides.
struct EncoderStack {
  Tensor token_embedding;     // [vocab, d_model]
  Tensor position_embedding;  // [max_seq_len, d_model]
  LayerNormParams embedding_norm;
  std::vector<EncoderLayerParams> layers;
};

struct SharedWeightModel {
  ModelConfig config;
  EncoderStack encoder;
  DecoderLayout layout;
  std::vector<DecoderLayerParams> decoder;
  // Tied: same storage as encoder.token_embedding.
  Tensor output_projection;
};

struct ParameterRef {
  std::string name;
  Tensor* tensor;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Every parameter slot by name, aliases included (e.g. output_projection).
std::vector<ParameterRef> parameter_slots(EncoderStack& encoder);
std::vector<ParameterRef> parameter_slots(SharedWeightModel& model);

/// One entry per distinct storage, in slot order; the first slot name wins.
std::vector<NamedTensor> unique_parameters(const EncoderStack& encoder);
std::vector<NamedTensor> unique_parameters(const SharedWeightModel& model);

std::size_t parameter_count(const std::vector<NamedTensor>& params);

// Closed-form sizes.
std::size_t encoder_layer_parameter_count(const ModelConfig& config);
std::size_t custom_layer_parameter_count(const ModelConfig& config);
std::size_t normal_layer_parameter_count(const ModelConfig& config);
std::size_t decoder_parameter_count(const ModelConfig& config, const DecoderLayout& layout);

// ---------------------------------------------------------------------------
// Initialization

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, index).
Rng derive_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

/// Truncated normal (2σ), std 0.02.
Tensor init_weight(Shape shape, Rng& rng);

EncoderLayerParams random_encoder_layer(const ModelConfig& config, Rng& rng);
CustomDecoderLayerParams random_custom_layer(const ModelConfig& config, Rng& rng);
NormalDecoderLayerParams random_normal_layer(const ModelConfig& config, Rng& rng);
EncoderStack random_encoder_stack(const ModelConfig& config, std::uint64_t seed);

/// Zero-valued model with the given layout; loaders fill it slot by slot.
SharedWeightModel make_model_skeleton(const ModelConfig& config, const DecoderLayout& layout);
EncoderStack make_encoder_skeleton(const ModelConfig& config);

EncoderLayerParams clone_layer(const EncoderLayerParams& layer);
EncoderStack clone_encoder(const EncoderStack& encoder);
DecoderLayerParams clone_layer(const DecoderLayerParams& layer);
SharedWeightModel clone_model(const SharedWeightModel& model);

// ---------------------------------------------------------------------------
// Forward passes

/// Row-major [rows, cols] token ids with a per-position padding flag.
struct TokenBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> padding;  // 1 = pad position

  TokenId at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  bool is_pad(std::size_t r, std::size_t c) const { return padding[r * cols + c] != 0; }
  // Row without trailing padding.
  std::vector<TokenId> row(std::size_t r) const;

  /// Right-pads sequences with `pad_id` to the longest length.
  static TokenBatch from_sequences(const std::vector<std::vector<TokenId>>& seqs,
                                   TokenId pad_id = special::kPad);
};

/// Number of feed-forward sub-blocks executed on this thread since the last
/// reset (instrumentation for layer-structure tests).
std::size_t feed_forward_calls();
void reset_feed_forward_calls();

Tensor encoder_forward(const EncoderStack& encoder, const ModelConfig& config,
                       const TokenBatch& tokens);
Tensor encoder_forward(const SharedWeightModel& model, const TokenBatch& tokens);

/// Causal decoder over `dec_tokens` attending to `enc_out`; returns logits
/// [b, t, vocab]. `src_padding` masks padded encoder positions.
Tensor decoder_forward(const SharedWeightModel& model, const TokenBatch& dec_tokens,
                       const Tensor& enc_out, std::span<const std::uint8_t> src_padding);

/// Decoder inputs (all but the last position) and next-token labels (all but
/// the first), with padded labels set to kIgnoreLabel.
struct ShiftedTarget {
  TokenBatch inputs;
  std::vector<TokenId> labels;
};
inline constexpr TokenId kIgnoreLabel = -1;
ShiftedTarget shift_target(const TokenBatch& tgt);

/// Teacher-forced shifted cross-entropy over non-pad target positions.
/// A positive `normalizer` overrides the token count divisor.
Tensor seq2seq_loss(const SharedWeightModel& model, const TokenBatch& src, const TokenBatch& tgt,
                    double normalizer = 0.0);
/// Same, with explicit decoder inputs (scheduled sampling).
Tensor seq2seq_loss(const SharedWeightModel& model, const TokenBatch& src,
                    const TokenBatch& decoder_inputs, std::span<const TokenId> labels,
                    double normalizer = 0.0);

/// Greedy decoding from `<s> lang`. Returns each row's full sequence: the
/// two-token prefix followed by up to `max_new` generated tokens, ending
/// with `</s>` when the model emitted it.
std::vector<std::vector<TokenId>> generate_greedy(const SharedWeightModel& model,
                                                  const TokenBatch& src, TokenId lang_token,
                                                  int max_new);

}  // namespace swcm
