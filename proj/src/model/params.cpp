#include "dslm/model/params.hpp"

#include <cmath>

#include "dslm/common/rng.hpp"

namespace dslm::model {
namespace {

using num::Shape;

template <typename Real>
LayerNormParams<Real> layer_norm(std::size_t d) {
  return {Tensor<Real>(Shape{d}, Real(1)), Tensor<Real>(Shape{d})};
}

template <typename Real>
AttentionParams<Real> attention(std::size_t d) {
  return {Tensor<Real>(Shape{d, d}), Tensor<Real>(Shape{d, d}), Tensor<Real>(Shape{d, d}), Tensor<Real>(Shape{d, d})};
}

template <typename Real>
FeedForwardParams<Real> feed_forward(std::size_t d, std::size_t ff) {
  return {Tensor<Real>(Shape{d, ff}), Tensor<Real>(Shape{ff}), Tensor<Real>(Shape{ff, d}), Tensor<Real>(Shape{d})};
}

template <typename Real>
EncoderLayerParams<Real> encoder_layer(const ModelConfig& c) {
  return {layer_norm<Real>(c.d_model), attention<Real>(c.d_model), layer_norm<Real>(c.d_model),
          feed_forward<Real>(c.d_model, c.d_ff)};
}

template <typename Real>
DecoderParams<Real> decoder(const ModelConfig& c, std::size_t vocab) {
  DecoderParams<Real> p;
  p.token_embedding = Tensor<Real>(Shape{vocab, c.d_model});
  p.position_embedding = Tensor<Real>(Shape{c.decoder_context, c.d_model});
  for (std::size_t i = 0; i < c.dec_layers; ++i) {
    const std::size_t d = c.d_model;
    p.blocks.push_back({layer_norm<Real>(d), attention<Real>(d), layer_norm<Real>(d), attention<Real>(d),
                        layer_norm<Real>(d), layer_norm<Real>(d), attention<Real>(d), layer_norm<Real>(d),
                        feed_forward<Real>(d, c.d_ff)});
  }
  p.final_ln = layer_norm<Real>(c.d_model);
  p.head_w = Tensor<Real>(Shape{c.d_model, vocab});
  p.head_b = Tensor<Real>(Shape{vocab});
  return p;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string param_group(const std::string& name) { return name.substr(0, name.find('.')); }

template <typename Real>
DSLMParams<Real> DSLMParams<Real>::shaped(const ModelConfig& c) {
  c.validate();
  DSLMParams p;
  p.encoder.token_embedding = Tensor<Real>(Shape{c.lyrics_vocab, c.d_model});
  p.encoder.position_embedding = Tensor<Real>(Shape{c.lyrics_context, c.d_model});
  for (std::size_t i = 0; i < c.enc_layers; ++i) p.encoder.layers.push_back(encoder_layer<Real>(c));
  p.encoder.final_ln = layer_norm<Real>(c.d_model);
  p.vocal = decoder<Real>(c, c.vocal_vocab);
  p.accomp = decoder<Real>(c, c.accomp_vocab);
  p.song.input_w = Tensor<Real>(Shape{2 * c.d_e(), c.d_model});
  p.song.input_b = Tensor<Real>(Shape{c.d_model});
  for (std::size_t i = 0; i < c.song_layers; ++i) p.song.layers.push_back(encoder_layer<Real>(c));
  p.song.final_ln = layer_norm<Real>(c.d_model);
  p.song.head_w = Tensor<Real>(Shape{c.d_model, c.song_vocab});
  p.song.head_b = Tensor<Real>(Shape{c.song_vocab});
  return p;
}

template <typename Real>
DSLMParams<Real> DSLMParams<Real>::init(const ModelConfig& c, std::uint64_t seed) {
  DSLMParams p = shaped(c);
  Rng rng(seed);
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(c.d_model));
  p.visit([&](const std::string& name, Tensor<Real>& t) {
    if (ends_with(name, "_embedding")) {
      // Scaled up by sqrt(d) at lookup, so the residual stream starts at unit scale.
      for (auto& v : t.values()) v = static_cast<Real>(rng.normal(0.0, emb_std));
    } else if (ends_with(name, "head_w")) {
      for (auto& v : t.values()) v = static_cast<Real>(rng.normal(0.0, 0.02));
    } else if (t.rank() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
      for (auto& v : t.values()) v = static_cast<Real>((2.0 * rng.uniform01() - 1.0) * limit);
    }
  });
  return p;
}

template <typename Real>
DSLMParams<Real> DSLMParams<Real>::zeros_like(const DSLMParams& other) {
  DSLMParams p = other;
  p.set_zero();
  return p;
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> DSLMParams<Real>::named() {
  std::vector<std::pair<std::string, Tensor<Real>*>> out;
  visit([&](const std::string& name, Tensor<Real>& t) { out.emplace_back(name, &t); });
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real>*>> DSLMParams<Real>::named() const {
  std::vector<std::pair<std::string, const Tensor<Real>*>> out;
  visit([&](const std::string& name, const Tensor<Real>& t) { out.emplace_back(name, &t); });
  return out;
}

template <typename Real>
std::size_t DSLMParams<Real>::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Tensor<Real>& t) { n += t.size(); });
  return n;
}

template <typename Real>
void DSLMParams<Real>::set_zero() {
  visit([](const std::string&, Tensor<Real>& t) { t.fill(Real(0)); });
}

template struct DSLMParams<float>;
template struct DSLMParams<double>;

}  // namespace dslm::model
