#pragma once

#include <cstddef>
#include <cstdint>

namespace dslm {

using TokenId = std::int32_t;

// Every stream shares the same block of special ids at the bottom of its
// vocabulary; regular tokens start at kNumSpecial.
namespace tokens {

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kEdit = 4;
inline constexpr TokenId kMask = 5;
inline constexpr TokenId kNullLyric = 6;
inline constexpr TokenId kUnk = 7;
inline constexpr TokenId kNumSpecial = 8;

inline constexpr std::size_t kLyricSymbols = 16;
inline constexpr std::size_t kNumKeys = 8;
inline constexpr std::size_t kNumRhythms = 4;

inline constexpr std::size_t kLyricsVocab = kNumSpecial + kLyricSymbols;  // 24
inline constexpr std::size_t kVocalVocab = 64;
inline constexpr std::size_t kAccompVocab = 64;
inline constexpr std::size_t kSongVocab = kNumSpecial + 256;  // 264

inline constexpr bool is_special(TokenId id) { return id >= 0 && id < kNumSpecial; }

}  // namespace tokens
}  // namespace dslm
