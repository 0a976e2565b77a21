#include "dslm/corpus/clip.hpp"

#include <string>

#include "dslm/common/error.hpp"

namespace dslm::corpus {
namespace {

constexpr int kTokensPerKey = 7;  // 56 regular vocal ids split evenly over 8 keys
constexpr int kFinalSlot = 6;

}  // namespace

const char* variant_name(Variant v) { return v == Variant::Default ? "default" : "control"; }

Variant parse_variant(const std::string& name) {
  if (name == "default") return Variant::Default;
  if (name == "control") return Variant::Control;
  throw Error("unknown corpus variant '" + name + "' (expected default or control)");
}

TokenId vocal_token(int key, int symbol, int syllable, int syllable_count) {
  const int slot = syllable == syllable_count - 1 ? kFinalSlot : (symbol + syllable) % kFinalSlot;
  return tokens::kNumSpecial + kTokensPerKey * key + slot;
}

TokenId accomp_token(Variant variant, int key, int rhythm, int beat_in_word, std::size_t time) {
  if (variant == Variant::Control) {
    return tokens::kNumSpecial + kTokensPerKey * rhythm + static_cast<int>(time % kTokensPerKey);
  }
  // The figure restarts on every sung word, in the clip's key.
  return tokens::kNumSpecial + kTokensPerKey * key + (rhythm + 2 * beat_in_word) % kTokensPerKey;
}

bool is_word_final(TokenId vocal) { return (vocal - tokens::kNumSpecial) % kTokensPerKey == kFinalSlot; }

int key_of_vocal(TokenId vocal) {
  if (tokens::is_special(vocal) || vocal >= static_cast<TokenId>(tokens::kVocalVocab)) {
    throw Error("key_of_vocal: " + std::to_string(vocal) + " is not a regular vocal token");
  }
  return (vocal - tokens::kNumSpecial) / kTokensPerKey;
}

TokenId mix(TokenId vocal, TokenId accomp) {
  if (vocal < tokens::kNumSpecial || accomp < tokens::kNumSpecial) {
    throw Error("mix: special token input (" + std::to_string(vocal) + ", " + std::to_string(accomp) + ")");
  }
  return tokens::kNumSpecial + 16 * (vocal % 16) + (accomp % 16);
}

std::pair<int, int> unmix(TokenId song) {
  if (song < tokens::kNumSpecial || song >= static_cast<TokenId>(tokens::kSongVocab)) {
    throw Error("unmix: " + std::to_string(song) + " is not a regular song token");
  }
  const int v = song - tokens::kNumSpecial;
  return {v / 16, v % 16};
}

Clip render_clip(const ClipLatent& latent, std::uint64_t id, Variant variant) {
  if (latent.symbols.size() != latent.syllables.size() || latent.symbols.empty()) {
    throw Error("render_clip: malformed latent");
  }
  Clip clip;
  clip.id = id;
  clip.key = latent.key;
  clip.rhythm = latent.rhythm;
  for (std::size_t w = 0; w < latent.symbols.size(); ++w) {
    const int sym = latent.symbols[w];
    const int n = latent.syllables[w];
    clip.lyrics.push_back(tokens::kNumSpecial + sym);
    for (int s = 0; s < n; ++s) {
      const TokenId v = vocal_token(latent.key, sym, s, n);
      const TokenId a = accomp_token(variant, latent.key, latent.rhythm, s, clip.vocal.size());
      clip.vocal.push_back(v);
      clip.accomp.push_back(a);
      clip.song.push_back(mix(v, a));
    }
  }
  return clip;
}

Clip gen_clip(Rng& rng, std::size_t max_length, Variant variant) {
  if (max_length < static_cast<std::size_t>(kMaxSyllables)) {
    throw Error("gen_clip: max length " + std::to_string(max_length) + " cannot hold a word");
  }
  ClipLatent latent;
  const int words = static_cast<int>(rng.uniform_int(kMinWords, kMaxWords));
  latent.key = static_cast<int>(rng.uniform_int(0, tokens::kNumKeys - 1));
  latent.rhythm = static_cast<int>(rng.uniform_int(0, tokens::kNumRhythms - 1));
  std::size_t total = 0;
  for (int w = 0; w < words; ++w) {
    const int sym = static_cast<int>(rng.uniform_int(0, tokens::kLyricSymbols - 1));
    const int syl = static_cast<int>(rng.uniform_int(kMinSyllables, kMaxSyllables));
    if (total + syl > max_length) break;
    latent.symbols.push_back(sym);
    latent.syllables.push_back(syl);
    total += syl;
  }
  return render_clip(latent, 0, variant);
}

Clip make_clip(std::uint64_t seed, std::uint64_t id, std::size_t max_length, Variant variant) {
  Rng rng(seed, id);
  Clip clip = gen_clip(rng, max_length, variant);
  clip.id = id;
  return clip;
}

std::vector<Clip> make_corpus(std::uint64_t seed, std::size_t size, std::size_t max_length, Variant variant) {
  std::vector<Clip> clips;
  clips.reserve(size);
  for (std::size_t i = 0; i < size; ++i) clips.push_back(make_clip(seed, i, max_length, variant));
  return clips;
}

std::vector<std::pair<std::size_t, std::size_t>> word_spans(const std::vector<TokenId>& vocal) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < vocal.size(); ++t) {
    if (is_word_final(vocal[t])) {
      spans.emplace_back(begin, t + 1);
      begin = t + 1;
    }
  }
  if (begin != vocal.size()) throw Error("word_spans: vocal track ends inside a word");
  return spans;
}

ClipLatent latent_of(const Clip& clip) {
  ClipLatent latent;
  latent.key = clip.key;
  latent.rhythm = clip.rhythm;
  const auto spans = word_spans(clip.vocal);
  if (spans.size() != clip.lyrics.size()) {
    throw Error("clip " + std::to_string(clip.id) + ": " + std::to_string(clip.lyrics.size()) + " words but " +
                std::to_string(spans.size()) + " sung words");
  }
  for (std::size_t w = 0; w < spans.size(); ++w) {
    latent.symbols.push_back(clip.lyrics[w] - tokens::kNumSpecial);
    latent.syllables.push_back(static_cast<int>(spans[w].second - spans[w].first));
  }
  return latent;
}

}  // namespace dslm::corpus
