#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dslm/common/rng.hpp"
#include "dslm/common/tokens.hpp"

namespace dslm::corpus {

// `Default` ties the accompaniment to the vocal phrasing and key; `Control`
// makes it a plain periodic figure that nothing in the vocal track predicts.
enum class Variant { Default, Control };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

// One synthetic paired-track clip. Track tokens carry no specials; lyrics are
// word symbols offset by kNumSpecial.
struct Clip {
  std::uint64_t id = 0;
  int key = 0;     // [0, kNumKeys)
  int rhythm = 0;  // [0, kNumRhythms)
  std::vector<TokenId> lyrics;
  std::vector<TokenId> vocal;
  std::vector<TokenId> accomp;
  std::vector<TokenId> song;

  std::size_t length() const { return vocal.size(); }
  bool operator==(const Clip&) const = default;
};

// The generator's hidden state: everything the rendered tokens derive from.
struct ClipLatent {
  std::vector<int> symbols;    // one per word, [0, kLyricSymbols)
  std::vector<int> syllables;  // vocal tokens per word, [kMinSyllables, kMaxSyllables]
  int key = 0;
  int rhythm = 0;
};

inline constexpr int kMinWords = 4;
inline constexpr int kMaxWords = 12;
inline constexpr int kMinSyllables = 2;
inline constexpr int kMaxSyllables = 4;
inline constexpr std::size_t kDefaultMaxLength = 64;

// Draws a latent and renders it. Words that would push the clip past
// `max_length` tokens are dropped (at least one word is always kept).
Clip gen_clip(Rng& rng, std::size_t max_length = kDefaultMaxLength, Variant variant = Variant::Default);
// Clip `id` of the corpus seeded by `seed`; a pure function of its arguments.
Clip make_clip(std::uint64_t seed, std::uint64_t id, std::size_t max_length = kDefaultMaxLength,
               Variant variant = Variant::Default);
std::vector<Clip> make_corpus(std::uint64_t seed, std::size_t size, std::size_t max_length = kDefaultMaxLength,
                              Variant variant = Variant::Default);

Clip render_clip(const ClipLatent& latent, std::uint64_t id, Variant variant);
// Recovers the latent from rendered tokens (word boundaries are marked in the
// vocal track).
ClipLatent latent_of(const Clip& clip);

TokenId vocal_token(int key, int symbol, int syllable, int syllable_count);
TokenId accomp_token(Variant variant, int key, int rhythm, int beat_in_word, std::size_t time);
bool is_word_final(TokenId vocal);
// Generator inverse: the key a vocal token was drawn from.
int key_of_vocal(TokenId vocal);

// Injective pairing of (v mod 16, a mod 16) onto the regular song ids.
TokenId mix(TokenId vocal, TokenId accomp);
std::pair<int, int> unmix(TokenId song);

// Token ranges [begin, end) of each word in a vocal track.
std::vector<std::pair<std::size_t, std::size_t>> word_spans(const std::vector<TokenId>& vocal);

}  // namespace dslm::corpus
