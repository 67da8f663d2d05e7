// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "oracles/sampling_values.hpp"
#include "swcm/batch.hpp"
#include "swcm/corpus.hpp"
#include "swcm/error.hpp"
#include "swcm/noise.hpp"
#include "swcm/sampling.hpp"
#include "swcm/vocab.hpp"

using namespace swcm;
namespace fs = std::filesystem;

namespace {

SyntheticCorpus small_corpus(std::uint64_t seed = 3) {
  SyntheticCorpusSpec spec;
  spec.languages = {"zh", "bo", "ug"};
  spec.sizes = {60, 20, 10};
  spec.parallel_pairs = 15;
  spec.alphabet_size = 12;
  spec.lexicon_size = 40;
  spec.seed = seed;
  return gen_synthetic_corpus(spec);
}

Vocab vocab_for(const SyntheticCorpus& c) { return Vocab::build(c.codes(), c.symbols()); }

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("swcm_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<TokenId> body_of(std::size_t n) {
  std::vector<TokenId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<TokenId>(20 + i % 7);
  return ids;
}

}  // namespace

TEST_CASE("vocabulary layout") {
  const Vocab v = Vocab::build({"xx"}, {"a", "b", "\xE4\xB8\xAD"});
  CHECK(v.token(special::kPad) == "<pad>");
  CHECK(v.token(special::kBos) == "<s>");
  CHECK(v.token(special::kEos) == "</s>");
  CHECK(v.token(special::kMask) == "<mask>");
  CHECK(v.token(special::kUnk) == "<unk>");
  REQUIRE(v.languages().size() == 6);
  for (std::size_t i = 0; i < v.languages().size(); ++i) {
    CHECK(v.languages()[i].token == special::kFirstLanguage + static_cast<TokenId>(i));
    CHECK(v.is_language_token(v.languages()[i].token));
  }
  CHECK(v.language("xx").token == 10);
  CHECK(v.id("a") == 11);
  CHECK(v.id("?") == special::kUnk);
  CHECK(v.is_special(special::kMask));
  CHECK_FALSE(v.is_special(v.id("a")));
  CHECK_THROWS_AS(v.language("fr"), ConfigError);
  CHECK_THROWS_AS(v.token(99), VocabError);
  CHECK_THROWS_AS(v.token(-1), VocabError);
  CHECK_THROWS_AS(Vocab::build({}, {"a", "a"}), ConfigError);

  const fs::path dir = temp_dir("vocab");
  v.save((dir / "v.txt").string());
  CHECK(Vocab::load((dir / "v.txt").string()) == v);
  CHECK_THROWS_AS(Vocab::load((dir / "missing.txt").string()), FormatError);
  CHECK_THROWS_AS(Vocab::from_lines({"<pad>", "<s>"}), FormatError);
  CHECK_THROWS_AS(Vocab::from_lines({"<pad>", "<s>", "</s>", "<mask>", "<unk>", "<zh>", "a", "<bo>"}),
                  FormatError);
  CHECK_THROWS_AS(Vocab::from_lines({"<pad>", "<s>", "</s>", "<mask>", "<unk>", "a"}), FormatError);
}

TEST_CASE("tokenize and detokenize") {
  const SyntheticCorpus corpus = small_corpus();
  const Vocab v = vocab_for(corpus);
  CHECK(tokenize("", v).empty());
  for (const auto& m : corpus.monolingual) {
    const auto ids = tokenize(m.text, v);
    for (TokenId id : ids) CHECK(id != special::kUnk);
    CHECK(detokenize(ids, v) == m.text);
  }
  CHECK(split_symbols("a\xE4\xB8\xAD" "b") == std::vector<std::string>{"a", "\xE4\xB8\xAD", "b"});
  CHECK(tokenize("\xE4\xB8\xAD\xE4\xB8\xAD", v, 1).size() == 1);
}

TEST_CASE("framing") {
  const Vocab v = Vocab::build({}, {"a", "b"});
  const LanguageId zh = v.language("zh"), bo = v.language("bo");
  CHECK(frame_sequence({}, zh) == std::vector<TokenId>{special::kBos, zh.token, special::kEos});
  const std::vector<TokenId> ids = {v.id("a"), v.id("b"), v.id("a")};
  const auto a = frame_sequence(ids, zh), b = frame_sequence(ids, bo);
  CHECK(strip_frame(a) == ids);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] != b[i]) == (i == 1));

  const auto cut = frame_sequence(body_of(50), zh, 10);
  CHECK(cut.size() == 10);
  CHECK(cut.back() == special::kEos);
  const auto long_body = body_of(50);
  CHECK(strip_frame(cut) == std::vector<TokenId>(long_body.begin(), long_body.begin() + 7));
  CHECK_THROWS_AS(frame_sequence(ids, LanguageId{"fr", special::kUnk}), ConfigError);
  CHECK_THROWS_AS(frame_sequence(ids, zh, 2), ConfigError);
  CHECK(strip_terminator(std::vector<TokenId>{7, 8, special::kEos, 9}) == std::vector<TokenId>{7, 8});
}

TEST_CASE("denoising corruption") {
  const LanguageId zh{"zh", 9};
  const auto framed = frame_sequence(body_of(40), zh);

  SUBCASE("ratio zero is the identity") {
    const auto n = dae_noise(framed, NoiseConfig{0.0, 3.5, 1});
    CHECK(n.input == framed);
    CHECK(n.target == framed);
    CHECK(n.language == zh.token);
  }
  SUBCASE("full ratio with long spans collapses the body") {
    const auto n = dae_noise(framed, NoiseConfig{1.0, 1000.0, 1});
    CHECK(n.input == std::vector<TokenId>{special::kBos, zh.token, special::kMask, special::kEos});
    CHECK(n.target == framed);
  }
  SUBCASE("deterministic given the seed") {
    const NoiseConfig cfg{0.35, 3.5, 77};
    CHECK(dae_noise(framed, cfg).input == dae_noise(framed, cfg).input);
  }
  SUBCASE("frame, target and mask structure") {
    Rng rng(5);
    for (int t = 0; t < 500; ++t) {
      const auto body = body_of(1 + static_cast<std::size_t>(t % 60));
      const auto f = frame_sequence(body, zh);
      const auto n = dae_noise(f, NoiseConfig{0.35, 3.5, 0}, rng);
      CHECK(n.target == f);
      REQUIRE(n.input.size() >= 4);
      CHECK(n.input[0] == special::kBos);
      CHECK(n.input[1] == zh.token);
      CHECK(n.input.back() == special::kEos);
      bool has_mask = false;
      for (std::size_t i = 2; i + 1 < n.input.size(); ++i) {
        if (n.input[i] == special::kMask) {
          has_mask = true;
          CHECK(n.input[i - 1] != special::kMask);  // each covered run is one <mask>
        }
      }
      CHECK(has_mask);
      // Unmasked tokens appear in order as a subsequence of the body.
      std::size_t j = 0;
      for (std::size_t i = 2; i + 1 < n.input.size(); ++i) {
        if (n.input[i] == special::kMask) continue;
        while (j < body.size() && body[j] != n.input[i]) ++j;
        CHECK(j < body.size());
        ++j;
      }
    }
  }
  SUBCASE("mean masked fraction") {
    // Covered count recovered by aligning input against the body.
    Rng rng(2024);
    const auto body = body_of(100);
    const auto f = frame_sequence(body, zh);
    double total = 0.0;
    const int runs = 10000;
    for (int t = 0; t < runs; ++t) {
      const auto n = dae_noise(f, NoiseConfig{0.35, 3.5, 0}, rng);
      std::size_t kept = 0;
      for (std::size_t i = 2; i + 1 < n.input.size(); ++i) kept += n.input[i] != special::kMask;
      total += static_cast<double>(100 - kept) / 100.0;
    }
    const double mean = total / runs;
    CHECK(mean >= 0.30);
    CHECK(mean <= 0.40);
  }
  CHECK_THROWS_AS(NoiseConfig({1.5, 3.5, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(NoiseConfig({0.3, 0.0, 0}).validate(), ConfigError);
}

TEST_CASE("smoothed sampling weights match the high-precision oracle") {
  for (const auto& c : oracle::kSamplingCases) {
    const SamplingWeights w = sampling_weights(c.q, c.alpha);
    REQUIRE(w.p.size() == c.p.size());
    for (std::size_t i = 0; i < c.p.size(); ++i) CHECK(std::abs(w.p[i] - c.p[i]) <= 1e-12);
    CHECK(std::abs(std::accumulate(w.p.begin(), w.p.end(), 0.0) - 1.0) <= 1e-12);
    CHECK(std::abs(std::accumulate(w.q.begin(), w.q.end(), 0.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("sampling weight examples and properties") {
  const std::vector<double> half = {0.5, 0.5};
  for (double a : {0.0, 0.3, 1.0, 2.0}) {
    const auto w = sampling_weights(half, a);
    CHECK(w.p[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  const std::vector<double> q = {0.2, 0.3, 0.5};
  const auto id = sampling_weights(q, 1.0);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(id.p[i] - q[i]) <= 1e-15);

  const std::vector<double> skew = {0.9, 0.1};
  const auto w = sampling_weights(skew, 0.3);
  CHECK(std::abs(w.p[0] - 0.659) < 5e-4);
  CHECK(std::abs(w.p[1] - 0.341) < 5e-4);

  for (const auto& c : oracle::kSamplingCases) {
    for (double a : {1e-6, 0.05, 0.3, 0.7, 1.0, 1.5}) {
      const auto s = sampling_weights(c.q, a);
      const auto qmax = std::max_element(c.q.begin(), c.q.end()) - c.q.begin();
      CHECK(std::max_element(s.p.begin(), s.p.end()) - s.p.begin() == qmax);
      for (std::size_t i = 0; i < c.q.size(); ++i) {
        for (std::size_t j = 0; j < c.q.size(); ++j) {
          if (c.q[i] > c.q[j]) CHECK(s.p[i] > s.p[j]);
          if (a == 1e-6) CHECK(std::abs(s.p[i] / s.p[j] - 1.0) <= 1e-3);
        }
      }
    }
  }

  const std::vector<double> bad = {0.5, 0.0}, neg = {1.2, -0.2};
  CHECK_THROWS_AS(sampling_weights(bad, 0.3), DomainError);
  CHECK_THROWS_AS(sampling_weights(neg, 0.3), DomainError);
  CHECK_THROWS_AS(sampling_weights(q, -0.1), DomainError);

  const std::vector<std::size_t> counts = {9000, 1000};
  const auto p = proportions(counts);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("language draws") {
  const std::vector<double> one = {1.0};
  const auto single = sampling_weights(one, 0.3);
  Rng r0(1);
  for (int i = 0; i < 100; ++i) CHECK(sample_language(single, r0) == 0);

  const std::vector<double> skew = {0.9, 0.1};
  const auto w = sampling_weights(skew, 0.3);
  Rng rng(99);
  const int n = 100000;
  int first = 0;
  for (int i = 0; i < n; ++i) first += sample_language(w, rng) == 0;
  const double sigma = std::sqrt(n * w.p[0] * (1.0 - w.p[0]));
  CHECK(std::abs(first - n * w.p[0]) <= 3.0 * sigma);

  Rng a(7), b(7);
  for (int i = 0; i < 200; ++i) CHECK(sample_language(w, a) == sample_language(w, b));
}

TEST_CASE("synthetic corpus") {
  const SyntheticCorpus c = small_corpus();
  CHECK(c.monolingual.size() == 90);
  CHECK(c.parallel.size() == 30);
  for (const auto& m : c.monolingual) {
    CHECK(c.to_pivot(m.lang, c.from_pivot(m.lang, c.to_pivot(m.lang, m.text))) ==
          c.to_pivot(m.lang, m.text));
    CHECK(c.from_pivot(m.lang, c.to_pivot(m.lang, m.text)) == m.text);
  }
  for (const auto& p : c.parallel) {
    CHECK(p.tgt_lang == "zh");
    CHECK(c.to_pivot(p.src_lang, p.src) == p.tgt);
    CHECK(c.from_pivot(p.src_lang, p.tgt) == p.src);
  }
  // Alphabets are disjoint.
  std::vector<std::string> syms = c.symbols();
  CHECK(std::adjacent_find(syms.begin(), syms.end()) == syms.end());
  CHECK(syms.size() == 36);

  const SyntheticCorpus again = small_corpus();
  CHECK(again.monolingual == c.monolingual);
  CHECK(again.parallel == c.parallel);
  CHECK_FALSE(small_corpus(4).monolingual == c.monolingual);

  SyntheticCorpusSpec sizes;
  sizes.languages = {"zh", "bo"};
  sizes.sizes = {9000, 1000};
  sizes.lexicon_size = 50;
  const SyntheticCorpus big = gen_synthetic_corpus(sizes);
  std::vector<std::size_t> counts = {0, 0};
  for (const auto& m : big.monolingual) ++counts[m.lang == "zh" ? 0 : 1];
  const auto q = proportions(counts);
  CHECK(q[0] == doctest::Approx(0.9));

  SyntheticCorpusSpec overlap;
  overlap.languages = {"zh", "bo"};
  overlap.sizes = {5, 5};
  overlap.alphabet_size = 3;
  overlap.alphabet_overrides = {{"zh", {"a", "b", "c"}}, {"bo", {"c", "d", "e"}}};
  CHECK_THROWS_AS(gen_synthetic_corpus(overlap), ConfigError);
  SyntheticCorpusSpec empty = overlap;
  empty.alphabet_overrides.clear();
  empty.sizes = {5, 0};
  CHECK_THROWS_AS(gen_synthetic_corpus(empty), ConfigError);
}

TEST_CASE("corpus files") {
  const SyntheticCorpus c = small_corpus();
  const fs::path dir = temp_dir("files");
  write_monolingual((dir / "m.tsv").string(), c.monolingual);
  write_parallel((dir / "p.tsv").string(), c.parallel);
  CHECK(read_monolingual((dir / "m.tsv").string()) == c.monolingual);
  CHECK(read_parallel((dir / "p.tsv").string()) == c.parallel);

  std::ofstream((dir / "bad_m.tsv").string()) << "zh\tab\nno tab here\n";
  CHECK_THROWS_AS(read_monolingual((dir / "bad_m.tsv").string()), FormatError);
  std::ofstream((dir / "bad_p.tsv").string()) << "bo\tzh\tab\n";
  CHECK_THROWS_AS(read_parallel((dir / "bad_p.tsv").string()), FormatError);
  CHECK_THROWS_AS(read_monolingual((dir / "absent.tsv").string()), FormatError);
}

TEST_CASE("batching and framed corpus") {
  const SyntheticCorpus c = small_corpus();
  const Vocab v = vocab_for(c);
  for (const auto& m : c.monolingual) {
    const auto f = encode_text(m.text, m.lang, v, 32);
    CHECK(f[0] == special::kBos);
    CHECK(v.is_language_token(f[1]));
    CHECK(f.size() <= 32);
  }
  const Example fwd = make_pair_example(c.parallel[0], v, 32, Task::Translation);
  const Example rev = make_pair_example(c.parallel[0], v, 32, Task::Translation, true);
  CHECK(fwd.source == rev.target);
  CHECK(fwd.target == rev.source);
  CHECK(fwd.lang == "zh");
  CHECK(rev.lang == c.parallel[0].src_lang);

  std::vector<Example> ex = {fwd, rev, make_pair_example(c.parallel[3], v, 32)};
  const Batch b = make_batch(ex);
  CHECK(b.source.rows == 3);
  std::size_t expect = 0;
  for (const auto& e : ex) expect += e.target.size() - 1;
  CHECK(b.target_tokens == expect);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(b.target.row(r) == ex[r].target);
    for (std::size_t col = 0; col < b.target.cols; ++col) {
      CHECK(b.target.is_pad(r, col) == (col >= ex[r].target.size()));
    }
  }
  CHECK_THROWS_AS(make_batch(std::vector<Example>{}), ShapeError);
}
