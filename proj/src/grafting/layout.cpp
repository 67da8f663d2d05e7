// SPDX-License-Identifier: Apache-2.0
#include "swcm/layout.hpp"

#include <algorithm>
#include <sstream>

#include "swcm/error.hpp"

namespace swcm {

std::string_view to_string(NormalLayerMode mode) {
  switch (mode) {
    case NormalLayerMode::Insert: return "insert";
    case NormalLayerMode::None: return "none";
    case NormalLayerMode::Duplicate: return "duplicate";
  }
  return "insert";
}

NormalLayerMode parse_normal_layer_mode(std::string_view text) {
  if (text == "insert") return NormalLayerMode::Insert;
  if (text == "none") return NormalLayerMode::None;
  if (text == "duplicate") return NormalLayerMode::Duplicate;
  throw ConfigError("unknown normal_layer_mode '" + std::string(text) + "'");
}

std::size_t DecoderLayout::custom_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& e) { return e.kind == LayerKind::Custom; }));
}

std::size_t DecoderLayout::normal_count() const { return size() - custom_count(); }

std::string DecoderLayout::kinds() const {
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += ' ';
    out += e.kind == LayerKind::Custom ? 'C' : 'N';
  }
  return out;
}

std::string DecoderLayout::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) os << ' ';
    if (entries[i].kind == LayerKind::Normal) {
      os << 'N';
    } else {
      os << 'C' << *entries[i].source_encoder_layer;
    }
  }
  return os.str();
}

DecoderLayout DecoderLayout::parse(std::string_view text) {
  DecoderLayout layout;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) {
    if (tok == "N") {
      layout.entries.push_back({LayerKind::Normal, std::nullopt});
    } else if (tok.size() > 1 && tok[0] == 'C' &&
               std::all_of(tok.begin() + 1, tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      layout.entries.push_back({LayerKind::Custom, std::stoi(tok.substr(1))});
    } else {
      throw FormatError("bad layout entry '" + tok + "'");
    }
  }
  return layout;
}

DecoderLayout build_decoder_layout(int n_encoder_layers, int insert_every_x) {
  return build_decoder_layout(n_encoder_layers, insert_every_x, NormalLayerMode::Insert);
}

DecoderLayout build_decoder_layout(int n, int x, NormalLayerMode mode) {
  if (n < 1) throw ConfigError("n_encoder_layers must be >= 1, got " + std::to_string(n));
  if (x < 1) throw ConfigError("insert_every_x must be >= 1, got " + std::to_string(x));
  DecoderLayout layout;
  for (int i = 0; i < n; ++i) {
    layout.entries.push_back({LayerKind::Custom, i});
    if ((i + 1) % x != 0) continue;
    switch (mode) {
      case NormalLayerMode::Insert:
        layout.entries.push_back({LayerKind::Normal, std::nullopt});
        break;
      case NormalLayerMode::Duplicate:
        layout.entries.push_back({LayerKind::Custom, i});
        break;
      case NormalLayerMode::None:
        break;
    }
  }
  return layout;
}

void validate_layout(const DecoderLayout& layout, int n, int x) {
  if (n < 1 || x < 1) throw GraftError("invalid (n, x) for layout validation");
  const std::size_t expected = static_cast<std::size_t>(n + n / x);
  if (layout.size() != expected) {
    throw GraftError("layout length " + std::to_string(layout.size()) + " != " +
                     std::to_string(expected));
  }
  int next_source = 0;
  int run = 0;
  for (const auto& e : layout.entries) {
    if (e.kind == LayerKind::Custom) {
      if (!e.source_encoder_layer || *e.source_encoder_layer != next_source) {
        throw GraftError("custom entries must reference encoder layers 0..n-1 in order");
      }
      ++next_source;
      ++run;
    } else {
      if (e.source_encoder_layer) throw GraftError("normal entry carries a source layer");
      if (run != x) throw GraftError("normal entry not preceded by a complete group of X customs");
      run = 0;
    }
  }
  if (next_source != n) throw GraftError("custom count differs from encoder depth");
  if (run >= x) throw GraftError("complete custom group not followed by a normal entry");
}

}  // namespace swcm
