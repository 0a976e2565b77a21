#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dslm/common/key_value.hpp"
#include "dslm/common/tokens.hpp"

namespace dslm::model {

struct ModelConfig {
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 4;
  std::size_t song_layers = 2;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t d_ff = 256;
  std::size_t lyrics_vocab = tokens::kLyricsVocab;
  std::size_t vocal_vocab = tokens::kVocalVocab;
  std::size_t accomp_vocab = tokens::kAccompVocab;
  std::size_t song_vocab = tokens::kSongVocab;
  std::size_t lyrics_context = 64;
  std::size_t decoder_context = 256;

  std::size_t d_k() const { return d_model / heads; }
  std::size_t d_e() const { return d_model; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  // The two-layer, d_model = 16 model used by gradient and mask checks.
  static ModelConfig tiny();

  // Keys under `model.` in flat config files.
  static const std::vector<std::string>& keys();
  void apply(const KeyValueFile& file);
  void store(KeyValueFile& file) const;
};

}  // namespace dslm::model
