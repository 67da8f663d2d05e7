// SPDX-License-Identifier: Apache-2.0
#include "swcm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "swcm/error.hpp"
#include "swcm/model.hpp"
#include "swcm/vocab.hpp"

namespace swcm {

namespace {

std::string utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

struct ScriptBlock {
  char32_t base;
  std::size_t capacity;
};

ScriptBlock script_block(const std::string& code, std::size_t extra_index) {
  if (code == "zh") return {0x4E00, 4096};
  if (code == "bo") return {0x0F40, 40};
  if (code == "kk") return {0x0410, 64};
  if (code == "mn") return {0x1820, 80};
  if (code == "ug") return {0x0621, 40};
  return {static_cast<char32_t>(0xAC00 + 0x400 * extra_index), 0x400};
}

// Index drawn with probability proportional to weights (cumulative table).
std::size_t draw(const std::vector<double>& cumulative, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, cumulative.back())(rng);
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

// Sentence as pivot symbol indices; index 0 separates words.
std::vector<std::size_t> draw_sentence(const std::vector<std::vector<std::size_t>>& lexicon,
                                       const std::vector<double>& zipf,
                                       const SyntheticCorpusSpec& spec, Rng& rng) {
  std::uniform_int_distribution<std::size_t> words(spec.min_words, spec.max_words);
  const std::size_t n = words(rng);
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < n; ++w) {
    if (w) out.push_back(0);
    const auto& word = lexicon[draw(zipf, rng)];
    out.insert(out.end(), word.begin(), word.end());
  }
  return out;
}

std::string render(const SyntheticLanguage& lang, const std::vector<std::size_t>& pivot_indices) {
  std::string out;
  for (std::size_t i : pivot_indices) out += lang.alphabet[lang.from_pivot[i]];
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (languages.empty()) throw ConfigError("synthetic corpus needs at least one language");
  if (sizes.size() != languages.size()) throw ConfigError("one size per language required");
  for (auto s : sizes) {
    if (s < 1) throw ConfigError("corpus sizes must be >= 1");
  }
  std::set<std::string> unique(languages.begin(), languages.end());
  if (unique.size() != languages.size()) throw ConfigError("duplicate language code");
  if (alphabet_size < 2) throw ConfigError("alphabet_size must be >= 2");
  if (lexicon_size < 1) throw ConfigError("lexicon_size must be >= 1");
  if (min_words < 1 || max_words < min_words) throw ConfigError("bad word-count range");
  if (min_word_length < 1 || max_word_length < min_word_length) {
    throw ConfigError("bad word-length range");
  }
}

const SyntheticLanguage& SyntheticCorpus::language(const std::string& code) const {
  for (const auto& l : languages) {
    if (l.code == code) return l;
  }
  throw ConfigError("language '" + code + "' not in synthetic corpus");
}

std::string SyntheticCorpus::to_pivot(const std::string& lang, const std::string& text) const {
  const auto& src = language(lang);
  const auto& pivot = languages.front();
  std::string out;
  for (const auto& sym : split_symbols(text)) {
    auto it = std::find(src.alphabet.begin(), src.alphabet.end(), sym);
    if (it == src.alphabet.end()) throw ConfigError("symbol outside alphabet of " + lang);
    const auto local = static_cast<std::size_t>(it - src.alphabet.begin());
    const auto pivot_index = static_cast<std::size_t>(
        std::find(src.from_pivot.begin(), src.from_pivot.end(), local) - src.from_pivot.begin());
    out += pivot.alphabet[pivot.from_pivot[pivot_index]];
  }
  return out;
}

std::string SyntheticCorpus::from_pivot(const std::string& lang, const std::string& text) const {
  const auto& dst = language(lang);
  const auto& pivot = languages.front();
  std::string out;
  for (const auto& sym : split_symbols(text)) {
    auto it = std::find(pivot.alphabet.begin(), pivot.alphabet.end(), sym);
    if (it == pivot.alphabet.end()) throw ConfigError("symbol outside pivot alphabet");
    const auto local = static_cast<std::size_t>(it - pivot.alphabet.begin());
    const auto pivot_index = static_cast<std::size_t>(
        std::find(pivot.from_pivot.begin(), pivot.from_pivot.end(), local) - pivot.from_pivot.begin());
    out += dst.alphabet[dst.from_pivot[pivot_index]];
  }
  return out;
}

std::vector<std::string> SyntheticCorpus::symbols() const {
  std::vector<std::string> out;
  for (const auto& l : languages) out.insert(out.end(), l.alphabet.begin(), l.alphabet.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> SyntheticCorpus::codes() const {
  std::vector<std::string> out;
  for (const auto& l : languages) out.push_back(l.code);
  return out;
}

SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;

  std::set<std::string> used;
  std::size_t extra_index = 0;
  for (const auto& code : spec.languages) {
    SyntheticLanguage lang;
    lang.code = code;
    if (auto it = spec.alphabet_overrides.find(code); it != spec.alphabet_overrides.end()) {
      lang.alphabet = it->second;
      if (lang.alphabet.size() != spec.alphabet_size) {
        throw ConfigError("alphabet override for " + code + " has wrong size");
      }
    } else {
      const bool builtin = code == "zh" || code == "bo" || code == "kk" || code == "mn" || code == "ug";
      const ScriptBlock block = script_block(code, builtin ? 0 : extra_index++);
      if (spec.alphabet_size > block.capacity) {
        throw ConfigError("alphabet_size exceeds script capacity for " + code);
      }
      for (std::size_t i = 0; i < spec.alphabet_size; ++i) {
        lang.alphabet.push_back(utf8(block.base + static_cast<char32_t>(i)));
      }
    }
    for (const auto& sym : lang.alphabet) {
      if (split_symbols(sym).size() != 1) throw ConfigError("alphabet symbols must be single characters");
      if (!used.insert(sym).second) {
        throw ConfigError("alphabets overlap on symbol '" + sym + "'");
      }
    }
    lang.from_pivot.resize(spec.alphabet_size);
    std::iota(lang.from_pivot.begin(), lang.from_pivot.end(), std::size_t{0});
    if (!corpus.languages.empty()) {
      Rng rng = derive_rng(spec.seed, "bijection:" + code);
      std::shuffle(lang.from_pivot.begin(), lang.from_pivot.end(), rng);
    }
    corpus.languages.push_back(std::move(lang));
  }

  // Shared lexicon over pivot indices 1..alphabet_size-1.
  Rng lex_rng = derive_rng(spec.seed, "lexicon");
  std::uniform_int_distribution<std::size_t> word_len(spec.min_word_length, spec.max_word_length);
  std::uniform_int_distribution<std::size_t> letter(1, spec.alphabet_size - 1);
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::vector<std::size_t>> lexicon;
  std::size_t attempts = 0;
  while (lexicon.size() < spec.lexicon_size) {
    if (++attempts > spec.lexicon_size * 1000) {
      throw ConfigError("cannot draw enough distinct words for the lexicon");
    }
    std::vector<std::size_t> word(word_len(lex_rng));
    for (auto& s : word) s = letter(lex_rng);
    if (seen.insert(word).second) lexicon.push_back(std::move(word));
  }
  std::vector<double> zipf(lexicon.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < zipf.size(); ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), 1.1);
    zipf[r] = acc;
  }

  for (std::size_t li = 0; li < corpus.languages.size(); ++li) {
    const auto& lang = corpus.languages[li];
    Rng rng = derive_rng(spec.seed, "mono:" + lang.code);
    for (std::size_t i = 0; i < spec.sizes[li]; ++i) {
      corpus.monolingual.push_back({lang.code, render(lang, draw_sentence(lexicon, zipf, spec, rng))});
    }
  }
  const auto& pivot = corpus.languages.front();
  for (std::size_t li = 1; li < corpus.languages.size(); ++li) {
    const auto& lang = corpus.languages[li];
    Rng rng = derive_rng(spec.seed, "parallel:" + lang.code);
    for (std::size_t i = 0; i < spec.parallel_pairs; ++i) {
      const auto sentence = draw_sentence(lexicon, zipf, spec, rng);
      corpus.parallel.push_back({lang.code, pivot.code, render(lang, sentence), render(pivot, sentence)});
    }
  }
  return corpus;
}

void write_monolingual(const std::string& path, const std::vector<MonolingualExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& e : examples) out << e.lang << '\t' << e.text << '\n';
}

std::vector<MonolingualExample> read_monolingual(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<MonolingualExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 2 || f[0].empty()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected lang<TAB>text");
    }
    out.push_back({f[0], f[1]});
  }
  return out;
}

void write_parallel(const std::string& path, const std::vector<ParallelExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& e : examples) {
    out << e.src_lang << '\t' << e.tgt_lang << '\t' << e.src << '\t' << e.tgt << '\n';
  }
}

std::vector<ParallelExample> read_parallel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<ParallelExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty()) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected src_lang<TAB>tgt_lang<TAB>src<TAB>tgt");
    }
    out.push_back({f[0], f[1], f[2], f[3]});
  }
  return out;
}

}  // namespace swcm
