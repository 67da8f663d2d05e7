// SPDX-License-Identifier: Apache-2.0
#include "swcm/grafting.hpp"

#include <set>

#include "swcm/error.hpp"

namespace swcm {

namespace {

Tensor take(const Tensor& t, bool tie) { return tie ? t : t.clone(true); }

LinearParams take(const LinearParams& p, bool tie) {
  return {take(p.weight, tie), take(p.bias, tie)};
}

AttentionParams take(const AttentionParams& p, bool tie) {
  return {take(p.query, tie), take(p.key, tie), take(p.value, tie), take(p.output, tie)};
}

FeedForwardParams take(const FeedForwardParams& p, bool tie) {
  return {take(p.expand, tie), take(p.contract, tie)};
}

LayerNormParams take(const LayerNormParams& p, bool tie) {
  return {take(p.gain, tie), take(p.bias, tie)};
}

CustomDecoderLayerParams graft_layer(const EncoderLayerParams& src, bool tie) {
  CustomDecoderLayerParams l;
  l.self_attn = take(src.self_attn, tie);
  l.self_attn_norm = take(src.self_attn_norm, tie);
  l.ffn1 = take(src.ffn, tie);
  l.ffn1_norm = take(src.ffn_norm, tie);
  l.cross_attn = take(src.self_attn, tie);
  l.cross_attn_norm = take(src.self_attn_norm, tie);
  l.ffn2 = take(src.ffn, tie);
  l.ffn2_norm = take(src.ffn_norm, tie);
  return l;
}

void check_layout_depth(const DecoderLayout& layout, std::size_t depth) {
  std::set<int> sources;
  for (const auto& e : layout.entries) {
    if (e.kind != LayerKind::Custom) continue;
    if (!e.source_encoder_layer || *e.source_encoder_layer < 0 ||
        static_cast<std::size_t>(*e.source_encoder_layer) >= depth) {
      throw GraftError("layout references encoder layer outside depth " + std::to_string(depth));
    }
    sources.insert(*e.source_encoder_layer);
  }
  if (sources.size() != depth) {
    throw GraftError("layout covers " + std::to_string(sources.size()) +
                     " encoder layers, encoder has " + std::to_string(depth));
  }
}

}  // namespace

std::vector<DecoderLayerParams> graft_weights(const ModelConfig& config,
                                              const std::vector<EncoderLayerParams>& encoder,
                                              const DecoderLayout& layout, std::uint64_t seed,
                                              bool tie) {
  check_layout_depth(layout, encoder.size());
  std::vector<DecoderLayerParams> out;
  out.reserve(layout.size());
  for (std::size_t slot = 0; slot < layout.size(); ++slot) {
    const auto& entry = layout.entries[slot];
    if (entry.kind == LayerKind::Custom) {
      out.emplace_back(graft_layer(encoder[static_cast<std::size_t>(*entry.source_encoder_layer)], tie));
    } else {
      Rng rng = derive_rng(seed, "normal", slot);
      out.emplace_back(random_normal_layer(config, rng));
    }
  }
  return out;
}

std::vector<DecoderLayerParams> random_decoder(const ModelConfig& config,
                                               const DecoderLayout& layout, std::uint64_t seed) {
  std::vector<DecoderLayerParams> out;
  out.reserve(layout.size());
  for (std::size_t slot = 0; slot < layout.size(); ++slot) {
    if (layout.entries[slot].kind == LayerKind::Custom) {
      Rng rng = derive_rng(seed, "decoder", slot);
      out.emplace_back(random_custom_layer(config, rng));
    } else {
      Rng rng = derive_rng(seed, "normal", slot);
      out.emplace_back(random_normal_layer(config, rng));
    }
  }
  return out;
}

void check_encoder_shapes(const ModelConfig& c, const EncoderStack& e) {
  const auto d = static_cast<std::size_t>(c.d_model);
  const auto ff = static_cast<std::size_t>(c.d_ff);
  auto expect = [](const Tensor& t, const Shape& shape, const char* what) {
    if (!t.defined() || t.shape() != shape) {
      throw GraftError(std::string("encoder ") + what + " has shape " +
                       (t.defined() ? shape_to_string(t.shape()) : "<none>") + ", expected " +
                       shape_to_string(shape));
    }
  };
  if (e.layers.size() != static_cast<std::size_t>(c.n_encoder_layers)) {
    throw GraftError("encoder has " + std::to_string(e.layers.size()) + " layers, config says " +
                     std::to_string(c.n_encoder_layers));
  }
  expect(e.token_embedding, {static_cast<std::size_t>(c.vocab_size), d}, "token embedding");
  expect(e.position_embedding, {static_cast<std::size_t>(c.max_seq_len), d}, "position embedding");
  for (const auto& l : e.layers) {
    expect(l.self_attn.query.weight, {d, d}, "attention");
    expect(l.ffn.expand.weight, {d, ff}, "ffn");
  }
}

SharedWeightModel assemble_model(const ModelConfig& config, const AssembleOptions& options) {
  config.validate();
  EncoderStack encoder = random_encoder_stack(config, options.seed);
  SharedWeightModel m;
  m.config = config;
  m.encoder = std::move(encoder);
  m.layout = build_decoder_layout(config.n_encoder_layers, config.insert_every_x,
                                  options.normal_layer_mode);
  m.decoder = options.use_weight_sharing
                  ? graft_weights(config, m.encoder.layers, m.layout, options.seed,
                                  options.tie_grafted_weights)
                  : random_decoder(config, m.layout, options.seed);
  m.output_projection = m.encoder.token_embedding;
  return m;
}

SharedWeightModel assemble_model(const ModelConfig& config, const EncoderStack& pretrained,
                                 const AssembleOptions& options) {
  config.validate();
  check_encoder_shapes(config, pretrained);
  SharedWeightModel m;
  m.config = config;
  m.encoder = clone_encoder(pretrained);
  m.layout = build_decoder_layout(config.n_encoder_layers, config.insert_every_x,
                                  options.normal_layer_mode);
  m.decoder = options.use_weight_sharing
                  ? graft_weights(config, m.encoder.layers, m.layout, options.seed,
                                  options.tie_grafted_weights)
                  : random_decoder(config, m.layout, options.seed);
  m.output_projection = m.encoder.token_embedding;
  return m;
}

}  // namespace swcm
