// SPDX-License-Identifier: Apache-2.0
#include "swcm/vocab.hpp"

#include <algorithm>
#include <fstream>

#include "swcm/error.hpp"

namespace swcm {

namespace {

const std::vector<std::string> kReserved = {"<pad>", "<s>", "</s>", "<mask>", "<unk>"};

bool looks_like_language_token(const std::string& t) {
  return t.size() > 2 && t.front() == '<' && t.back() == '>' &&
         std::find(kReserved.begin(), kReserved.end(), t) == kReserved.end();
}

}  // namespace

const std::vector<std::string>& Vocab::default_languages() {
  static const std::vector<std::string> langs = {"bo", "kk", "mn", "ug", "zh"};
  return langs;
}

Vocab Vocab::build(const std::vector<std::string>& extra_languages,
                   const std::vector<std::string>& symbols) {
  Vocab v;
  v.tokens_ = kReserved;
  std::vector<std::string> codes = default_languages();
  for (const auto& code : extra_languages) {
    if (std::find(codes.begin(), codes.end(), code) == codes.end()) codes.push_back(code);
  }
  for (const auto& code : codes) {
    if (code.empty() || code.find_first_of("<>\t\n ") != std::string::npos) {
      throw ConfigError("invalid language code '" + code + "'");
    }
    v.tokens_.push_back("<" + code + ">");
  }
  for (const auto& s : symbols) {
    if (s.empty() || s.find_first_of("\t\n") != std::string::npos) {
      throw ConfigError("invalid vocabulary symbol");
    }
    if (std::find(v.tokens_.begin(), v.tokens_.end(), s) != v.tokens_.end()) {
      throw ConfigError("duplicate vocabulary symbol '" + s + "'");
    }
    v.tokens_.push_back(s);
  }
  v.index();
  return v;
}

Vocab Vocab::from_lines(const std::vector<std::string>& lines) {
  if (lines.size() < kReserved.size() ||
      !std::equal(kReserved.begin(), kReserved.end(), lines.begin())) {
    throw FormatError("vocabulary must start with the reserved tokens");
  }
  Vocab v;
  v.tokens_ = lines;
  v.index();
  return v;
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return from_lines(lines);
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vocabulary " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

void Vocab::index() {
  ids_.clear();
  languages_.clear();
  bool in_block = true;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (!ids_.emplace(t, static_cast<TokenId>(i)).second) {
      throw FormatError("duplicate vocabulary token '" + t + "'");
    }
    if (i < kReserved.size()) continue;
    if (looks_like_language_token(t)) {
      if (!in_block) throw FormatError("language tokens must form a contiguous block");
      languages_.push_back({t.substr(1, t.size() - 2), static_cast<TokenId>(i)});
    } else {
      in_block = false;
    }
  }
  if (languages_.empty()) throw FormatError("vocabulary has no language tokens");
}

TokenId Vocab::id(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? special::kUnk : it->second;
}

bool Vocab::contains(std::string_view symbol) const { return ids_.count(std::string(symbol)) > 0; }

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

LanguageId Vocab::language(std::string_view code) const {
  for (const auto& l : languages_) {
    if (l.code == code) return l;
  }
  throw ConfigError("unregistered language '" + std::string(code) + "'");
}

std::optional<LanguageId> Vocab::language_of(TokenId token) const {
  for (const auto& l : languages_) {
    if (l.token == token) return l;
  }
  return std::nullopt;
}

bool Vocab::is_language_token(TokenId token) const {
  return !languages_.empty() && token >= languages_.front().token &&
         token <= languages_.back().token;
}

bool Vocab::is_special(TokenId token) const {
  return (token >= 0 && token < special::kFirstLanguage) || is_language_token(token);
}

std::vector<std::string> split_symbols(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab, std::size_t max_tokens) {
  std::vector<TokenId> ids;
  for (const auto& s : split_symbols(text)) {
    if (ids.size() >= max_tokens) break;
    ids.push_back(vocab.id(s));
  }
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) out += vocab.token(id);
  return out;
}

std::vector<TokenId> frame_sequence(std::span<const TokenId> ids, const LanguageId& lang,
                                    std::size_t max_seq_len) {
  if (lang.token < special::kFirstLanguage) {
    throw ConfigError("unregistered language '" + lang.code + "'");
  }
  if (max_seq_len < 3) throw ConfigError("max_seq_len too small to frame a sequence");
  const std::size_t body = std::min(ids.size(), max_seq_len - 3);
  std::vector<TokenId> out;
  out.reserve(body + 3);
  out.push_back(special::kBos);
  out.push_back(lang.token);
  out.insert(out.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(body));
  out.push_back(special::kEos);
  return out;
}

std::vector<TokenId> strip_frame(std::span<const TokenId> framed) {
  std::size_t begin = std::min<std::size_t>(2, framed.size());
  std::size_t end = framed.size();
  if (end > begin && framed[end - 1] == special::kEos) --end;
  return {framed.begin() + static_cast<std::ptrdiff_t>(begin),
          framed.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<TokenId> strip_terminator(std::span<const TokenId> ids) {
  auto it = std::find(ids.begin(), ids.end(), special::kEos);
  return {ids.begin(), it};
}

}  // namespace swcm
