// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace swcm {

struct MonolingualExample {
  std::string lang;
  std::string text;
  bool operator==(const MonolingualExample&) const = default;
};

struct ParallelExample {
  std::string src_lang;
  std::string tgt_lang;
  std::string src;
  std::string tgt;
  bool operator==(const ParallelExample&) const = default;
};

struct SyntheticCorpusSpec {
  std::vector<std::string> languages;  // languages[0] is the pivot
  std::vector<std::size_t> sizes;      // monolingual sentences per language
  std::size_t parallel_pairs = 0;      // per non-pivot language, paired with the pivot
  std::size_t alphabet_size = 24;      // symbols per language
  std::size_t lexicon_size = 200;
  std::size_t min_words = 2;
  std::size_t max_words = 5;
  std::size_t min_word_length = 2;
  std::size_t max_word_length = 4;
  std::uint64_t seed = 0;
  // Explicit alphabets by language code; others come from built-in script blocks.
  std::map<std::string, std::vector<std::string>> alphabet_overrides;

  void validate() const;
};

struct SyntheticLanguage {
  std::string code;
  std::vector<std::string> alphabet;
  // pivot symbol index -> this language's symbol index
  std::vector<std::size_t> from_pivot;
};

/// Languages share one latent lexicon; each writes it in its own alphabet
/// through a seeded bijection with the pivot alphabet, so translation ground
/// truth is exact symbol substitution.
struct SyntheticCorpus {
  std::vector<SyntheticLanguage> languages;
  std::vector<MonolingualExample> monolingual;
  std::vector<ParallelExample> parallel;

  const SyntheticLanguage& language(const std::string& code) const;
  std::string to_pivot(const std::string& lang, const std::string& text) const;
  std::string from_pivot(const std::string& lang, const std::string& text) const;
  /// Union of all alphabets, sorted.
  std::vector<std::string> symbols() const;
  std::vector<std::string> codes() const;
};

SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusSpec& spec);

void write_monolingual(const std::string& path, const std::vector<MonolingualExample>& examples);
std::vector<MonolingualExample> read_monolingual(const std::string& path);
void write_parallel(const std::string& path, const std::vector<ParallelExample>& examples);
std::vector<ParallelExample> read_parallel(const std::string& path);

}  // namespace swcm
