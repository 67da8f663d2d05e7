// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "swcm/error.hpp"
#include "swcm/grafting.hpp"
#include "swcm/ops.hpp"
#include "test_support.hpp"

using namespace swcm;

namespace {

ModelConfig tiny(int layers = 2, int x = 1) {
  ModelConfig c;
  c.n_encoder_layers = layers;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 12;
  c.vocab_size = 20;
  c.max_seq_len = 12;
  c.insert_every_x = x;
  return c;
}

TokenBatch batch(const std::vector<std::vector<TokenId>>& rows) {
  return TokenBatch::from_sequences(rows);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("parameter counts match the closed form") {
  for (int n : {1, 2, 5}) {
    for (int x : {1, 2, 3}) {
      ModelConfig c = tiny(n, x);
      SharedWeightModel m = assemble_model(c, AssembleOptions{});
      const std::size_t d = 8, v = 20, len = 12;
      const std::size_t embeddings = v * d + len * d + 2 * d;
      const std::size_t expected = embeddings + n * encoder_layer_parameter_count(c) +
                                   decoder_parameter_count(c, m.layout);
      CHECK(parameter_count(unique_parameters(m)) == expected);
      // Encoder layer: 4 attention projections, 2 FFN linears, 2 norms.
      CHECK(encoder_layer_parameter_count(c) == 4 * (d * d + d) + (d * 12 + 12) + (12 * d + d) + 4 * d);
    }
  }
}

TEST_CASE("output projection shares storage with the token embedding") {
  SharedWeightModel m = assemble_model(tiny(), AssembleOptions{});
  CHECK(m.output_projection.same_storage(m.encoder.token_embedding));
  auto slots = parameter_slots(m);
  CHECK(slots.back().name == "output_projection");
  CHECK(unique_parameters(m).size() + 1 == slots.size());
}

TEST_CASE("initialization: truncated normal weights, zero biases, unit gains") {
  ModelConfig c = tiny();
  c.d_model = 64;
  c.d_ff = 128;
  c.n_heads = 4;
  EncoderStack e = random_encoder_stack(c, 5);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (double w : e.layers[0].ffn.expand.weight.data()) {
    CHECK(std::abs(w) <= 0.04);
    sum += w;
    sq += w * w;
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  // Standard deviation of a N(0, 0.02²) truncated at ±2σ: 0.02·0.8796.
  CHECK(sd == doctest::Approx(0.02 * 0.87962566).epsilon(0.03));
  for (double b : e.layers[1].self_attn.query.bias.data()) CHECK(b == 0.0);
  for (double g : e.layers[1].ffn_norm.gain.data()) CHECK(g == 1.0);
}

TEST_CASE("derived generators are deterministic and stream-separated") {
  Rng a = derive_rng(3, "encoder", 1), b = derive_rng(3, "encoder", 1);
  Rng c = derive_rng(3, "encoder", 2), d = derive_rng(3, "decoder", 1), e = derive_rng(4, "encoder", 1);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(x != e());
}

TEST_CASE("decoder is causal") {
  SharedWeightModel m = assemble_model(tiny(2, 1), AssembleOptions{7});
  TokenBatch src = batch({{1, 5, 9, 10, 2}});
  TokenBatch a = batch({{1, 5, 11, 12, 13, 14}});
  TokenBatch b = a;
  b.ids[4] = 17;
  NoGradGuard ng;
  Tensor enc = encoder_forward(m, src);
  Tensor la = decoder_forward(m, a, enc, src.padding);
  Tensor lb = decoder_forward(m, b, enc, src.padding);
  const std::size_t v = 20;
  CHECK(max_abs_diff(la.data().subspan(0, 4 * v), lb.data().subspan(0, 4 * v)) == 0.0);
  CHECK(max_abs_diff(la.data().subspan(4 * v), lb.data().subspan(4 * v)) > 0.0);
}

TEST_CASE("padded source positions do not influence the decoder") {
  SharedWeightModel m = assemble_model(tiny(2, 1), AssembleOptions{8});
  TokenBatch src = batch({{1, 5, 9, 10, 2}, {1, 5, 2}});
  TokenBatch other = src;
  other.ids[1 * src.cols + 4] = 13;  // a padded slot of row 1
  TokenBatch dec = batch({{1, 5, 11}, {1, 5, 12}});
  NoGradGuard ng;
  Tensor la = decoder_forward(m, dec, encoder_forward(m, src), src.padding);
  Tensor lb = decoder_forward(m, dec, encoder_forward(m, other), other.padding);
  CHECK(max_abs_diff(la.data(), lb.data()) == 0.0);
}

TEST_CASE("feed-forward sub-blocks per forward pass follow the layer types") {
  for (int x : {1, 2, 3}) {
    ModelConfig c = tiny(4, x);
    SharedWeightModel m = assemble_model(c, AssembleOptions{});
    TokenBatch src = batch({{1, 5, 9, 2}});
    TokenBatch dec = batch({{1, 5, 9}});
    NoGradGuard ng;
    reset_feed_forward_calls();
    Tensor enc = encoder_forward(m, src);
    CHECK(feed_forward_calls() == 4);
    reset_feed_forward_calls();
    decoder_forward(m, dec, enc, src.padding);
    CHECK(feed_forward_calls() == 2 * m.layout.custom_count() + m.layout.normal_count());
  }
}

TEST_CASE("seq2seq loss gradients match finite differences on a grafted model") {
  ModelConfig c = tiny(2, 1);
  c.d_model = 4;
  c.d_ff = 6;
  c.vocab_size = 9;
  c.max_seq_len = 6;
  SharedWeightModel m = assemble_model(c, AssembleOptions{11});
  // Larger weights than the 0.02 init so every path carries signal.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& p : unique_parameters(m)) {
    for (double& v : p.tensor.mutable_data()) v += n(rng);
  }
  TokenBatch src = batch({{1, 5, 6, 2}, {1, 6, 2}});
  TokenBatch tgt = batch({{1, 5, 7, 8, 2}, {1, 5, 8, 2}});
  std::vector<Tensor> params;
  for (auto& p : unique_parameters(m)) params.push_back(p.tensor);
  auto r = testing::grad_check([&] { return seq2seq_loss(m, src, tgt); }, params);
  CHECK(r.checked == parameter_count(unique_parameters(m)));
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("shift_target aligns inputs with next-token labels") {
  TokenBatch t = batch({{1, 5, 7, 2}, {1, 5, 2}});
  ShiftedTarget s = shift_target(t);
  CHECK(s.inputs.cols == 3);
  CHECK(s.inputs.row(0) == std::vector<TokenId>{1, 5, 7});
  CHECK(s.labels == std::vector<TokenId>{5, 7, 2, 5, 2, kIgnoreLabel});
}

TEST_CASE("greedy generation frames output with the requested language") {
  SharedWeightModel m = assemble_model(tiny(), AssembleOptions{2});
  TokenBatch src = batch({{1, 5, 9, 2}, {1, 6, 10, 11, 2}});
  auto out = generate_greedy(m, src, 6, 4);
  REQUIRE(out.size() == 2);
  for (const auto& seq : out) {
    CHECK(seq[0] == special::kBos);
    CHECK(seq[1] == 6);
    CHECK(seq.size() <= 6);
    for (std::size_t i = 2; i + 1 < seq.size(); ++i) CHECK(seq[i] != special::kEos);
  }
  // Budget is capped so the sequence fits in max_seq_len.
  auto longest = generate_greedy(m, src, 6, 100);
  for (const auto& seq : longest) CHECK(seq.size() <= 12);
  CHECK_THROWS_AS(generate_greedy(m, src, 6, 0), ConfigError);
}

TEST_CASE("clone_model deep-copies and keeps aliasing") {
  SharedWeightModel m = assemble_model(tiny(), AssembleOptions{3});
  SharedWeightModel c = clone_model(m);
  CHECK(c.output_projection.same_storage(c.encoder.token_embedding));
  CHECK_FALSE(c.encoder.token_embedding.same_storage(m.encoder.token_embedding));
  auto a = unique_parameters(m), b = unique_parameters(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(max_abs_diff(a[i].tensor.data(), b[i].tensor.data()) == 0.0);
  }
  c.encoder.token_embedding.mutable_data()[0] += 1.0;
  CHECK(c.output_projection.at(0) == c.encoder.token_embedding.at(0));
  CHECK(m.encoder.token_embedding.at(0) != c.encoder.token_embedding.at(0));
}

TEST_CASE("configuration and input validation") {
  ModelConfig c = tiny();
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.n_encoder_layers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  SharedWeightModel m = assemble_model(tiny(), AssembleOptions{});
  TokenBatch too_long = batch({std::vector<TokenId>(13, 5)});
  CHECK_THROWS_AS(encoder_forward(m, too_long), ShapeError);
  TokenBatch bad = batch({{1, 25, 2}});
  CHECK_THROWS_AS(encoder_forward(m, bad), VocabError);
  CHECK_THROWS_AS(TokenBatch::from_sequences({}), ShapeError);
}
