// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace swcm {

enum class LayerKind { Custom, Normal };

struct LayoutEntry {
  LayerKind kind = LayerKind::Custom;
  // Encoder layer a Custom entry inherits from; empty for Normal entries.
  std::optional<int> source_encoder_layer;

  bool operator==(const LayoutEntry&) const = default;
};

/// How slots that would hold a NormalDecoderLayer are filled.
///   Insert    - randomly initialized Normal layer after every X Customs.
///   None      - no extra slots; decoder depth equals encoder depth.
///   Duplicate - a Custom layer copying the preceding Custom's source layer.
enum class NormalLayerMode { Insert, None, Duplicate };

std::string_view to_string(NormalLayerMode mode);
NormalLayerMode parse_normal_layer_mode(std::string_view text);

struct DecoderLayout {
  std::vector<LayoutEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t custom_count() const;
  std::size_t normal_count() const;

  // "C C C N C"
  std::string kinds() const;
  // "C0 C1 C2 N C3"; parse() accepts the same form.
  std::string to_string() const;
  static DecoderLayout parse(std::string_view text);

  bool operator==(const DecoderLayout&) const = default;
};

/// Interleaved layout: one Normal entry after every complete group of
/// `insert_every_x` Custom entries, giving n + floor(n / x) entries.
DecoderLayout build_decoder_layout(int n_encoder_layers, int insert_every_x);
DecoderLayout build_decoder_layout(int n_encoder_layers, int insert_every_x,
                                   NormalLayerMode mode);

/// Throws GraftError unless `layout` satisfies every invariant of the
/// interleaved layout for (n, x).
void validate_layout(const DecoderLayout& layout, int n_encoder_layers, int insert_every_x);

}  // namespace swcm
