#include "dslm/model/config.hpp"

#include "dslm/common/error.hpp"

namespace dslm::model {
namespace {

struct Field {
  const char* key;
  std::size_t ModelConfig::*member;
};

constexpr Field kFields[] = {
    {"model.enc_layers", &ModelConfig::enc_layers},
    {"model.dec_layers", &ModelConfig::dec_layers},
    {"model.song_layers", &ModelConfig::song_layers},
    {"model.d_model", &ModelConfig::d_model},
    {"model.heads", &ModelConfig::heads},
    {"model.d_ff", &ModelConfig::d_ff},
    {"model.lyrics_vocab", &ModelConfig::lyrics_vocab},
    {"model.vocal_vocab", &ModelConfig::vocal_vocab},
    {"model.accomp_vocab", &ModelConfig::accomp_vocab},
    {"model.song_vocab", &ModelConfig::song_vocab},
    {"model.lyrics_context", &ModelConfig::lyrics_context},
    {"model.decoder_context", &ModelConfig::decoder_context},
};

}  // namespace

void ModelConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw Error("model config: d_model " + std::to_string(d_model) + " is not divisible by heads " +
                std::to_string(heads));
  }
  if (d_ff == 0) throw Error("model config: d_ff must be positive");
  if (enc_layers == 0 || dec_layers == 0) throw Error("model config: encoder and decoders need at least one layer");
  const std::pair<const char*, std::size_t> vocabs[] = {
      {"lyrics_vocab", lyrics_vocab}, {"vocal_vocab", vocal_vocab}, {"accomp_vocab", accomp_vocab},
      {"song_vocab", song_vocab}};
  for (const auto& [name, v] : vocabs) {
    if (v <= static_cast<std::size_t>(tokens::kNumSpecial)) {
      throw Error(std::string("model config: ") + name + " " + std::to_string(v) + " leaves no room past the " +
                  std::to_string(tokens::kNumSpecial) + " special tokens");
    }
  }
  if (lyrics_context == 0 || decoder_context < 2) throw Error("model config: context lengths too small");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.enc_layers = 1;
  c.dec_layers = 2;
  c.song_layers = 1;
  c.d_model = 16;
  c.heads = 2;
  c.d_ff = 32;
  c.lyrics_context = 32;
  c.decoder_context = 64;
  return c;
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : kFields) out.emplace_back(f.key);
    return out;
  }();
  return k;
}

void ModelConfig::apply(const KeyValueFile& file) {
  for (const auto& f : kFields) {
    if (!file.contains(f.key)) continue;
    const long long v = parse_int(file.get(f.key), f.key);
    if (v < 0) throw Error(std::string(f.key) + " must be non-negative");
    this->*f.member = static_cast<std::size_t>(v);
  }
}

void ModelConfig::store(KeyValueFile& file) const {
  for (const auto& f : kFields) file.set(f.key, std::to_string(this->*f.member));
}

}  // namespace dslm::model
