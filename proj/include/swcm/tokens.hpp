// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace swcm {

using TokenId = std::int32_t;

// Reserved ids shared by every vocabulary.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr TokenId kFirstLanguage = 5;
}  // namespace special

}  // namespace swcm
