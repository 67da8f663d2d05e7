// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swcm/tokens.hpp"

namespace swcm {

struct LanguageId {
  std::string code;  // "bo", "zh", ...
  TokenId token = special::kUnk;

  bool operator==(const LanguageId&) const = default;
};

/// Character-level vocabulary. Ids 0-4 are `<pad> <s> </s> <mask> <unk>`,
/// followed by a contiguous block of language tokens (`<bo> <kk> <mn> <ug>
/// <zh>` plus any extra codes), followed by symbols.
class Vocab {
 public:
  static const std::vector<std::string>& default_languages();

  static Vocab build(const std::vector<std::string>& extra_languages,
                     const std::vector<std::string>& symbols);
  /// One token per line; line index is the id.
  static Vocab from_lines(const std::vector<std::string>& lines);
  static Vocab load(const std::string& path);
  std::vector<std::string> to_lines() const { return tokens_; }
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  /// Id of `symbol`, or `<unk>` when absent.
  TokenId id(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& token(TokenId id) const;

  /// Throws ConfigError for unregistered codes.
  LanguageId language(std::string_view code) const;
  const std::vector<LanguageId>& languages() const { return languages_; }
  std::optional<LanguageId> language_of(TokenId token) const;
  bool is_language_token(TokenId token) const;
  /// Reserved or language token.
  bool is_special(TokenId token) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<LanguageId> languages_;
};

/// Splits UTF-8 text into code-point strings.
std::vector<std::string> split_symbols(std::string_view text);

/// Symbol ids (unknown symbols become `<unk>`), truncated to `max_tokens`.
std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab,
                              std::size_t max_tokens = std::numeric_limits<std::size_t>::max());
std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab);

/// `<s> lang ids... </s>`. The body is truncated so the framed sequence fits
/// in `max_seq_len`; `</s>` is always kept.
std::vector<TokenId> frame_sequence(std::span<const TokenId> ids, const LanguageId& lang,
                                    std::size_t max_seq_len = std::numeric_limits<std::size_t>::max());
/// Body of a framed sequence (drops `<s>`, the language token and a trailing `</s>`).
std::vector<TokenId> strip_frame(std::span<const TokenId> framed);
/// Drops a trailing `</s>` and anything after it.
std::vector<TokenId> strip_terminator(std::span<const TokenId> ids);

}  // namespace swcm
