// SPDX-License-Identifier: Apache-2.0
#include "swcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "swcm/ops.hpp"

namespace swcm {

void ModelConfig::validate() const {
  if (n_encoder_layers < 1) throw ConfigError("n_encoder_layers must be >= 1");
  if (d_model < 1 || n_heads < 1) throw ConfigError("d_model and n_heads must be >= 1");
  if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  if (d_ff < 1) throw ConfigError("d_ff must be >= 1");
  if (vocab_size <= special::kFirstLanguage) throw ConfigError("vocab_size too small");
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
  if (insert_every_x < 1) throw ConfigError("insert_every_x must be >= 1");
}

// ---------------------------------------------------------------------------
// Parameter enumeration

namespace {

void add_linear(std::vector<ParameterRef>& out, const std::string& prefix, LinearParams& p) {
  out.push_back({prefix + ".weight", &p.weight});
  out.push_back({prefix + ".bias", &p.bias});
}

void add_attention(std::vector<ParameterRef>& out, const std::string& prefix, AttentionParams& p) {
  add_linear(out, prefix + ".query", p.query);
  add_linear(out, prefix + ".key", p.key);
  add_linear(out, prefix + ".value", p.value);
  add_linear(out, prefix + ".output", p.output);
}

void add_ffn(std::vector<ParameterRef>& out, const std::string& prefix, FeedForwardParams& p) {
  add_linear(out, prefix + ".expand", p.expand);
  add_linear(out, prefix + ".contract", p.contract);
}

void add_norm(std::vector<ParameterRef>& out, const std::string& prefix, LayerNormParams& p) {
  out.push_back({prefix + ".gain", &p.gain});
  out.push_back({prefix + ".bias", &p.bias});
}

std::vector<NamedTensor> dedup(const std::vector<ParameterRef>& slots) {
  std::vector<NamedTensor> out;
  std::unordered_set<const TensorImpl*> seen;
  for (const auto& s : slots) {
    if (seen.insert(s.tensor->impl().get()).second) out.push_back({s.name, *s.tensor});
  }
  return out;
}

}  // namespace

std::vector<ParameterRef> parameter_slots(EncoderStack& encoder) {
  std::vector<ParameterRef> out;
  out.push_back({"embedding.token", &encoder.token_embedding});
  out.push_back({"embedding.position", &encoder.position_embedding});
  add_norm(out, "embedding.norm", encoder.embedding_norm);
  for (std::size_t i = 0; i < encoder.layers.size(); ++i) {
    const std::string p = "encoder." + std::to_string(i);
    auto& l = encoder.layers[i];
    add_attention(out, p + ".self_attn", l.self_attn);
    add_norm(out, p + ".self_attn_norm", l.self_attn_norm);
    add_ffn(out, p + ".ffn", l.ffn);
    add_norm(out, p + ".ffn_norm", l.ffn_norm);
  }
  return out;
}

std::vector<ParameterRef> parameter_slots(SharedWeightModel& model) {
  auto out = parameter_slots(model.encoder);
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    const std::string p = "decoder." + std::to_string(i);
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, CustomDecoderLayerParams>) {
            add_attention(out, p + ".self_attn", l.self_attn);
            add_norm(out, p + ".self_attn_norm", l.self_attn_norm);
            add_ffn(out, p + ".ffn1", l.ffn1);
            add_norm(out, p + ".ffn1_norm", l.ffn1_norm);
            add_attention(out, p + ".cross_attn", l.cross_attn);
            add_norm(out, p + ".cross_attn_norm", l.cross_attn_norm);
            add_ffn(out, p + ".ffn2", l.ffn2);
            add_norm(out, p + ".ffn2_norm", l.ffn2_norm);
          } else {
            add_attention(out, p + ".self_attn", l.self_attn);
            add_norm(out, p + ".self_attn_norm", l.self_attn_norm);
            add_attention(out, p + ".cross_attn", l.cross_attn);
            add_norm(out, p + ".cross_attn_norm", l.cross_attn_norm);
            add_ffn(out, p + ".ffn", l.ffn);
            add_norm(out, p + ".ffn_norm", l.ffn_norm);
          }
        },
        model.decoder[i]);
  }
  out.push_back({"output_projection", &model.output_projection});
  return out;
}

std::vector<NamedTensor> unique_parameters(const EncoderStack& encoder) {
  return dedup(parameter_slots(const_cast<EncoderStack&>(encoder)));
}

std::vector<NamedTensor> unique_parameters(const SharedWeightModel& model) {
  return dedup(parameter_slots(const_cast<SharedWeightModel&>(model)));
}

std::size_t parameter_count(const std::vector<NamedTensor>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

namespace {
std::size_t attention_size(std::size_t d) { return 4 * (d * d + d); }
std::size_t ffn_size(std::size_t d, std::size_t ff) { return 2 * d * ff + ff + d; }
std::size_t norm_size(std::size_t d) { return 2 * d; }
}  // namespace

std::size_t encoder_layer_parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, ff = c.d_ff;
  return attention_size(d) + ffn_size(d, ff) + 2 * norm_size(d);
}

std::size_t custom_layer_parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, ff = c.d_ff;
  return 2 * attention_size(d) + 2 * ffn_size(d, ff) + 4 * norm_size(d);
}

std::size_t normal_layer_parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, ff = c.d_ff;
  return 2 * attention_size(d) + ffn_size(d, ff) + 3 * norm_size(d);
}

std::size_t decoder_parameter_count(const ModelConfig& c, const DecoderLayout& layout) {
  return layout.custom_count() * custom_layer_parameter_count(c) +
         layout.normal_count() * normal_layer_parameter_count(c);
}

// ---------------------------------------------------------------------------
// Initialization

Rng derive_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Tensor init_weight(Shape shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) {
    double z = normal(rng);
    while (std::abs(z) > 2.0) z = normal(rng);
    v = 0.02 * z;
  }
  return Tensor::from_data(std::move(shape), std::move(values), true);
}

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

LinearParams random_linear(std::size_t in, std::size_t out, Rng& rng) {
  return {init_weight({in, out}, rng), Tensor::zeros({out}, true)};
}

AttentionParams random_attention(const ModelConfig& c, Rng& rng) {
  const std::size_t d = sz(c.d_model);
  AttentionParams a;
  a.query = random_linear(d, d, rng);
  a.key = random_linear(d, d, rng);
  a.value = random_linear(d, d, rng);
  a.output = random_linear(d, d, rng);
  return a;
}

FeedForwardParams random_ffn(const ModelConfig& c, Rng& rng) {
  FeedForwardParams f;
  f.expand = random_linear(sz(c.d_model), sz(c.d_ff), rng);
  f.contract = random_linear(sz(c.d_ff), sz(c.d_model), rng);
  return f;
}

LayerNormParams fresh_norm(const ModelConfig& c) {
  return {Tensor::full({sz(c.d_model)}, 1.0, true), Tensor::zeros({sz(c.d_model)}, true)};
}

}  // namespace

EncoderLayerParams random_encoder_layer(const ModelConfig& c, Rng& rng) {
  EncoderLayerParams l;
  l.self_attn = random_attention(c, rng);
  l.self_attn_norm = fresh_norm(c);
  l.ffn = random_ffn(c, rng);
  l.ffn_norm = fresh_norm(c);
  return l;
}

CustomDecoderLayerParams random_custom_layer(const ModelConfig& c, Rng& rng) {
  CustomDecoderLayerParams l;
  l.self_attn = random_attention(c, rng);
  l.self_attn_norm = fresh_norm(c);
  l.ffn1 = random_ffn(c, rng);
  l.ffn1_norm = fresh_norm(c);
  l.cross_attn = random_attention(c, rng);
  l.cross_attn_norm = fresh_norm(c);
  l.ffn2 = random_ffn(c, rng);
  l.ffn2_norm = fresh_norm(c);
  return l;
}

NormalDecoderLayerParams random_normal_layer(const ModelConfig& c, Rng& rng) {
  NormalDecoderLayerParams l;
  l.self_attn = random_attention(c, rng);
  l.self_attn_norm = fresh_norm(c);
  l.cross_attn = random_attention(c, rng);
  l.cross_attn_norm = fresh_norm(c);
  l.ffn = random_ffn(c, rng);
  l.ffn_norm = fresh_norm(c);
  return l;
}

EncoderStack random_encoder_stack(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  EncoderStack e;
  Rng emb = derive_rng(seed, "embedding");
  e.token_embedding = init_weight({sz(c.vocab_size), sz(c.d_model)}, emb);
  e.position_embedding = init_weight({sz(c.max_seq_len), sz(c.d_model)}, emb);
  e.embedding_norm = fresh_norm(c);
  for (int i = 0; i < c.n_encoder_layers; ++i) {
    Rng rng = derive_rng(seed, "encoder", static_cast<std::uint64_t>(i));
    e.layers.push_back(random_encoder_layer(c, rng));
  }
  return e;
}

EncoderStack make_encoder_skeleton(const ModelConfig& c) {
  c.validate();
  EncoderStack e = random_encoder_stack(c, 0);
  for (auto& slot : parameter_slots(e)) std::fill(slot.tensor->mutable_data().begin(), slot.tensor->mutable_data().end(), 0.0);
  return e;
}

SharedWeightModel make_model_skeleton(const ModelConfig& c, const DecoderLayout& layout) {
  SharedWeightModel m;
  m.config = c;
  m.encoder = make_encoder_skeleton(c);
  m.layout = layout;
  Rng rng = derive_rng(0, "skeleton");
  for (const auto& entry : layout.entries) {
    if (entry.kind == LayerKind::Custom) {
      m.decoder.emplace_back(random_custom_layer(c, rng));
    } else {
      m.decoder.emplace_back(random_normal_layer(c, rng));
    }
  }
  m.output_projection = m.encoder.token_embedding;
  for (auto& slot : parameter_slots(m)) {
    auto d = slot.tensor->mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  return m;
}

namespace {
Tensor copy_param(const Tensor& t) { return t.clone(true); }
LinearParams copy(const LinearParams& p) { return {copy_param(p.weight), copy_param(p.bias)}; }
AttentionParams copy(const AttentionParams& p) {
  return {copy(p.query), copy(p.key), copy(p.value), copy(p.output)};
}
FeedForwardParams copy(const FeedForwardParams& p) { return {copy(p.expand), copy(p.contract)}; }
LayerNormParams copy(const LayerNormParams& p) { return {copy_param(p.gain), copy_param(p.bias)}; }
}  // namespace

EncoderLayerParams clone_layer(const EncoderLayerParams& l) {
  return {copy(l.self_attn), copy(l.self_attn_norm), copy(l.ffn), copy(l.ffn_norm)};
}

EncoderStack clone_encoder(const EncoderStack& e) {
  EncoderStack out;
  out.token_embedding = copy_param(e.token_embedding);
  out.position_embedding = copy_param(e.position_embedding);
  out.embedding_norm = copy(e.embedding_norm);
  for (const auto& l : e.layers) out.layers.push_back(clone_layer(l));
  return out;
}

DecoderLayerParams clone_layer(const DecoderLayerParams& layer) {
  return std::visit(
      [](const auto& l) -> DecoderLayerParams {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, CustomDecoderLayerParams>) {
          return CustomDecoderLayerParams{copy(l.self_attn), copy(l.self_attn_norm),
                                          copy(l.ffn1),      copy(l.ffn1_norm),
                                          copy(l.cross_attn), copy(l.cross_attn_norm),
                                          copy(l.ffn2),      copy(l.ffn2_norm)};
        } else {
          return NormalDecoderLayerParams{copy(l.self_attn),  copy(l.self_attn_norm),
                                          copy(l.cross_attn), copy(l.cross_attn_norm),
                                          copy(l.ffn),        copy(l.ffn_norm)};
        }
      },
      layer);
}

SharedWeightModel clone_model(const SharedWeightModel& model) {
  // Deep copy that preserves aliasing between slots.
  SharedWeightModel out = make_model_skeleton(model.config, model.layout);
  auto src = parameter_slots(const_cast<SharedWeightModel&>(model));
  auto dst = parameter_slots(out);
  std::vector<std::pair<const TensorImpl*, Tensor>> copies;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const TensorImpl* key = src[i].tensor->impl().get();
    auto it = std::find_if(copies.begin(), copies.end(), [&](const auto& p) { return p.first == key; });
    if (it != copies.end()) {
      *dst[i].tensor = it->second;
    } else {
      *dst[i].tensor = src[i].tensor->clone(src[i].tensor->requires_grad());
      copies.emplace_back(key, *dst[i].tensor);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward

std::vector<TokenId> TokenBatch::row(std::size_t r) const {
  std::vector<TokenId> out;
  for (std::size_t c = 0; c < cols; ++c) {
    if (!is_pad(r, c)) out.push_back(at(r, c));
  }
  return out;
}

TokenBatch TokenBatch::from_sequences(const std::vector<std::vector<TokenId>>& seqs,
                                      TokenId pad_id) {
  TokenBatch b;
  b.rows = seqs.size();
  for (const auto& s : seqs) b.cols = std::max(b.cols, s.size());
  if (b.rows == 0 || b.cols == 0) throw ShapeError("empty token batch");
  b.ids.assign(b.rows * b.cols, pad_id);
  b.padding.assign(b.rows * b.cols, 1);
  for (std::size_t r = 0; r < b.rows; ++r) {
    for (std::size_t c = 0; c < seqs[r].size(); ++c) {
      b.ids[r * b.cols + c] = seqs[r][c];
      b.padding[r * b.cols + c] = 0;
    }
  }
  return b;
}

namespace {

thread_local std::size_t g_ffn_calls = 0;

constexpr double kMaskedScore = -1e30;

Tensor linear(const Tensor& x, const LinearParams& p) {
  return ops::add_bias(ops::matmul(x, p.weight), p.bias);
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p) {
  ++g_ffn_calls;
  return linear(ops::gelu(linear(x, p.expand)), p.contract);
}

Tensor norm(const Tensor& x, const LayerNormParams& p) {
  return ops::layer_norm(x, p.gain, p.bias);
}

// Multi-head attention of `query_in` [b, t, d] over `kv_in` [b, s, d].
// `mask` has b·h·t·s entries, nonzero where attention is forbidden.
Tensor attention(const Tensor& query_in, const Tensor& kv_in, const AttentionParams& p,
                 std::size_t heads, std::span<const std::uint8_t> mask) {
  const std::size_t dh = query_in.dim(2) / heads;
  Tensor q = ops::split_heads(linear(query_in, p.query), heads);
  Tensor k = ops::split_heads(linear(kv_in, p.key), heads);
  Tensor v = ops::split_heads(linear(kv_in, p.value), heads);
  Tensor scores = ops::scale(ops::batched_matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh)));
  Tensor weights = ops::softmax(ops::masked_fill(scores, mask, kMaskedScore));
  Tensor context = ops::merge_heads(ops::batched_matmul(weights, v, false), heads);
  return linear(context, p.output);
}

std::vector<std::uint8_t> key_padding_mask(std::span<const std::uint8_t> key_padding,
                                           std::size_t batch, std::size_t heads,
                                           std::size_t queries, std::size_t keys) {
  std::vector<std::uint8_t> mask(batch * heads * queries * keys);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < queries; ++i) {
        std::uint8_t* row = mask.data() + ((b * heads + h) * queries + i) * keys;
        std::copy_n(key_padding.data() + b * keys, keys, row);
      }
  return mask;
}

std::vector<std::uint8_t> causal_mask(std::size_t batch, std::size_t heads, std::size_t t) {
  std::vector<std::uint8_t> mask(batch * heads * t * t, 0);
  for (std::size_t bh = 0; bh < batch * heads; ++bh)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = i + 1; j < t; ++j) mask[(bh * t + i) * t + j] = 1;
  return mask;
}

Tensor embed(const EncoderStack& e, const ModelConfig& c, const TokenBatch& tokens) {
  if (tokens.cols > static_cast<std::size_t>(c.max_seq_len)) {
    throw ShapeError("sequence length " + std::to_string(tokens.cols) + " exceeds max_seq_len " +
                     std::to_string(c.max_seq_len));
  }
  if (tokens.ids.size() != tokens.rows * tokens.cols ||
      tokens.padding.size() != tokens.ids.size()) {
    throw ShapeError("malformed token batch");
  }
  std::vector<TokenId> positions(tokens.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<TokenId>(i % tokens.cols);
  }
  Tensor tok = ops::embedding(e.token_embedding, tokens.ids, {tokens.rows, tokens.cols});
  Tensor pos = ops::embedding(e.position_embedding, positions, {tokens.rows, tokens.cols});
  return norm(ops::add(tok, pos), e.embedding_norm);
}

}  // namespace

std::size_t feed_forward_calls() { return g_ffn_calls; }
void reset_feed_forward_calls() { g_ffn_calls = 0; }

Tensor encoder_forward(const EncoderStack& e, const ModelConfig& c, const TokenBatch& tokens) {
  const std::size_t heads = sz(c.n_heads);
  Tensor x = embed(e, c, tokens);
  const auto mask = key_padding_mask(tokens.padding, tokens.rows, heads, tokens.cols, tokens.cols);
  for (const auto& layer : e.layers) {
    x = norm(ops::add(x, attention(x, x, layer.self_attn, heads, mask)), layer.self_attn_norm);
    x = norm(ops::add(x, feed_forward(x, layer.ffn)), layer.ffn_norm);
  }
  return x;
}

Tensor encoder_forward(const SharedWeightModel& model, const TokenBatch& tokens) {
  return encoder_forward(model.encoder, model.config, tokens);
}

Tensor decoder_forward(const SharedWeightModel& model, const TokenBatch& dec_tokens,
                       const Tensor& enc_out, std::span<const std::uint8_t> src_padding) {
  const ModelConfig& c = model.config;
  const std::size_t heads = sz(c.n_heads);
  if (enc_out.rank() != 3 || enc_out.dim(0) != dec_tokens.rows ||
      enc_out.dim(2) != sz(c.d_model) || src_padding.size() != enc_out.dim(0) * enc_out.dim(1)) {
    throw ShapeError("decoder_forward: encoder output " + shape_to_string(enc_out.shape()) +
                     " incompatible with decoder batch");
  }
  const std::size_t b = dec_tokens.rows, t = dec_tokens.cols, s = enc_out.dim(1);
  Tensor x = embed(model.encoder, c, dec_tokens);
  const auto self_mask = causal_mask(b, heads, t);
  const auto cross_mask = key_padding_mask(src_padding, b, heads, t, s);
  for (const auto& layer : model.decoder) {
    if (const auto* cl = std::get_if<CustomDecoderLayerParams>(&layer)) {
      x = norm(ops::add(x, attention(x, x, cl->self_attn, heads, self_mask)), cl->self_attn_norm);
      x = norm(ops::add(x, feed_forward(x, cl->ffn1)), cl->ffn1_norm);
      x = norm(ops::add(x, attention(x, enc_out, cl->cross_attn, heads, cross_mask)),
               cl->cross_attn_norm);
      x = norm(ops::add(x, feed_forward(x, cl->ffn2)), cl->ffn2_norm);
    } else {
      const auto& nl = std::get<NormalDecoderLayerParams>(layer);
      x = norm(ops::add(x, attention(x, x, nl.self_attn, heads, self_mask)), nl.self_attn_norm);
      x = norm(ops::add(x, attention(x, enc_out, nl.cross_attn, heads, cross_mask)),
               nl.cross_attn_norm);
      x = norm(ops::add(x, feed_forward(x, nl.ffn)), nl.ffn_norm);
    }
  }
  return ops::matmul_transposed(x, model.output_projection);
}

ShiftedTarget shift_target(const TokenBatch& tgt) {
  if (tgt.cols < 2) throw ShapeError("target needs at least two positions to shift");
  ShiftedTarget out;
  auto& in = out.inputs;
  in.rows = tgt.rows;
  in.cols = tgt.cols - 1;
  in.ids.resize(in.rows * in.cols);
  in.padding.resize(in.rows * in.cols);
  out.labels.resize(in.rows * in.cols);
  for (std::size_t r = 0; r < tgt.rows; ++r) {
    for (std::size_t c = 0; c + 1 < tgt.cols; ++c) {
      in.ids[r * in.cols + c] = tgt.at(r, c);
      in.padding[r * in.cols + c] = tgt.padding[r * tgt.cols + c];
      out.labels[r * in.cols + c] = tgt.is_pad(r, c + 1) ? kIgnoreLabel : tgt.at(r, c + 1);
    }
  }
  return out;
}

Tensor seq2seq_loss(const SharedWeightModel& model, const TokenBatch& src,
                    const TokenBatch& decoder_inputs, std::span<const TokenId> labels,
                    double normalizer) {
  Tensor enc = encoder_forward(model, src);
  Tensor logits = decoder_forward(model, decoder_inputs, enc, src.padding);
  return ops::softmax_cross_entropy(logits, labels, kIgnoreLabel, normalizer);
}

Tensor seq2seq_loss(const SharedWeightModel& model, const TokenBatch& src, const TokenBatch& tgt,
                    double normalizer) {
  ShiftedTarget shifted = shift_target(tgt);
  return seq2seq_loss(model, src, shifted.inputs, shifted.labels, normalizer);
}

std::vector<std::vector<TokenId>> generate_greedy(const SharedWeightModel& model,
                                                  const TokenBatch& src, TokenId lang_token,
                                                  int max_new) {
  if (max_new < 1) throw ConfigError("max_new must be >= 1");
  NoGradGuard no_grad;
  const std::size_t budget =
      std::min<std::size_t>(sz(max_new), sz(model.config.max_seq_len) - std::min<std::size_t>(2, sz(model.config.max_seq_len)));
  std::vector<std::vector<TokenId>> seqs(src.rows, std::vector<TokenId>{special::kBos, lang_token});
  std::vector<bool> done(src.rows, false);
  Tensor enc = encoder_forward(model, src);
  const std::size_t vocab = sz(model.config.vocab_size);
  for (std::size_t step = 0; step < budget; ++step) {
    std::vector<std::vector<TokenId>> inputs;
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < src.rows; ++r) {
      if (!done[r]) active.push_back(r);
    }
    if (active.empty()) break;
    // Rows advance in lock step, so every active row has the same length.
    for (std::size_t r = 0; r < src.rows; ++r) inputs.push_back(seqs[r]);
    TokenBatch dec = TokenBatch::from_sequences(inputs);
    Tensor logits = decoder_forward(model, dec, enc, src.padding);
    const auto z = logits.data();
    for (std::size_t r : active) {
      const double* row = z.data() + (r * dec.cols + (seqs[r].size() - 1)) * vocab;
      const TokenId next = static_cast<TokenId>(std::max_element(row, row + vocab) - row);
      seqs[r].push_back(next);
      if (next == special::kEos) done[r] = true;
    }
  }
  return seqs;
}

}  // namespace swcm
