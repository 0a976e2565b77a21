#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dslm/model/config.hpp"
#include "dslm/numcore/tensor.hpp"

namespace dslm::model {

template <typename Real>
using Tensor = num::Tensor<Real>;

template <typename Real>
struct LayerNormParams {
  Tensor<Real> gain, bias;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".gain", s.gain);
    f(p + ".bias", s.bias);
  }
};

// Projections carry no bias.
template <typename Real>
struct AttentionParams {
  Tensor<Real> wq, wk, wv, wo;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".wq", s.wq);
    f(p + ".wk", s.wk);
    f(p + ".wv", s.wv);
    f(p + ".wo", s.wo);
  }
};

template <typename Real>
struct FeedForwardParams {
  Tensor<Real> w1, b1, w2, b2;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".w1", s.w1);
    f(p + ".b1", s.b1);
    f(p + ".w2", s.w2);
    f(p + ".b2", s.b2);
  }
};

// Plain Transformer layer: used by the lyrics encoder and the song decoder.
template <typename Real>
struct EncoderLayerParams {
  LayerNormParams<Real> ln_attn;
  AttentionParams<Real> attn;
  LayerNormParams<Real> ln_ffn;
  FeedForwardParams<Real> ffn;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    LayerNormParams<Real>::visit(s.ln_attn, p + ".ln_attn", f);
    AttentionParams<Real>::visit(s.attn, p + ".attn", f);
    LayerNormParams<Real>::visit(s.ln_ffn, p + ".ln_ffn", f);
    FeedForwardParams<Real>::visit(s.ffn, p + ".ffn", f);
  }
};

// SA -> lyrics CA -> BCA -> FFN. The other stream's states entering BCA get
// their own norm (ln_bca_memory).
template <typename Real>
struct DecoderBlockParams {
  LayerNormParams<Real> ln_sa;
  AttentionParams<Real> sa;
  LayerNormParams<Real> ln_ca;
  AttentionParams<Real> ca;
  LayerNormParams<Real> ln_bca;
  LayerNormParams<Real> ln_bca_memory;
  AttentionParams<Real> bca;
  LayerNormParams<Real> ln_ffn;
  FeedForwardParams<Real> ffn;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    LayerNormParams<Real>::visit(s.ln_sa, p + ".ln_sa", f);
    AttentionParams<Real>::visit(s.sa, p + ".sa", f);
    LayerNormParams<Real>::visit(s.ln_ca, p + ".ln_ca", f);
    AttentionParams<Real>::visit(s.ca, p + ".ca", f);
    LayerNormParams<Real>::visit(s.ln_bca, p + ".ln_bca", f);
    LayerNormParams<Real>::visit(s.ln_bca_memory, p + ".ln_bca_memory", f);
    AttentionParams<Real>::visit(s.bca, p + ".bca", f);
    LayerNormParams<Real>::visit(s.ln_ffn, p + ".ln_ffn", f);
    FeedForwardParams<Real>::visit(s.ffn, p + ".ffn", f);
  }
};

template <typename Real>
struct EncoderParams {
  Tensor<Real> token_embedding, position_embedding;
  std::vector<EncoderLayerParams<Real>> layers;
  LayerNormParams<Real> final_ln;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".token_embedding", s.token_embedding);
    f(p + ".position_embedding", s.position_embedding);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      EncoderLayerParams<Real>::visit(s.layers[i], p + ".layer" + std::to_string(i), f);
    }
    LayerNormParams<Real>::visit(s.final_ln, p + ".final_ln", f);
  }
};

template <typename Real>
struct DecoderParams {
  Tensor<Real> token_embedding, position_embedding;
  std::vector<DecoderBlockParams<Real>> blocks;
  LayerNormParams<Real> final_ln;
  Tensor<Real> head_w, head_b;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".token_embedding", s.token_embedding);
    f(p + ".position_embedding", s.position_embedding);
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      DecoderBlockParams<Real>::visit(s.blocks[i], p + ".block" + std::to_string(i), f);
    }
    LayerNormParams<Real>::visit(s.final_ln, p + ".final_ln", f);
    f(p + ".head_w", s.head_w);
    f(p + ".head_b", s.head_b);
  }
};

template <typename Real>
struct SongDecoderParams {
  Tensor<Real> input_w, input_b;
  std::vector<EncoderLayerParams<Real>> layers;
  LayerNormParams<Real> final_ln;
  Tensor<Real> head_w, head_b;

  template <class Self, class F>
  static void visit(Self& s, const std::string& p, F& f) {
    f(p + ".input_w", s.input_w);
    f(p + ".input_b", s.input_b);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      EncoderLayerParams<Real>::visit(s.layers[i], p + ".layer" + std::to_string(i), f);
    }
    LayerNormParams<Real>::visit(s.final_ln, p + ".final_ln", f);
    f(p + ".head_w", s.head_w);
    f(p + ".head_b", s.head_b);
  }
};

inline const char* const kParamGroups[] = {"encoder", "vocal", "accomp", "song"};

// Group of a parameter name: the part before the first dot.
std::string param_group(const std::string& name);

template <typename Real>
struct DSLMParams {
  EncoderParams<Real> encoder;
  DecoderParams<Real> vocal;
  DecoderParams<Real> accomp;
  SongDecoderParams<Real> song;

  // Every tensor shaped for `config`; LayerNorm gains 1, everything else 0.
  static DSLMParams shaped(const ModelConfig& config);
  // Random initialization drawn from `seed` through the portable Rng.
  static DSLMParams init(const ModelConfig& config, std::uint64_t seed);
  // Same shapes, all zeros (gradient accumulators).
  static DSLMParams zeros_like(const DSLMParams& other);

  template <class F>
  void visit(F&& f) {
    visit_all(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_all(*this, f);
  }

  std::vector<std::pair<std::string, Tensor<Real>*>> named();
  std::vector<std::pair<std::string, const Tensor<Real>*>> named() const;
  std::size_t parameter_count() const;
  void set_zero();

 private:
  template <class Self, class F>
  static void visit_all(Self& s, F& f) {
    EncoderParams<Real>::visit(s.encoder, "encoder", f);
    DecoderParams<Real>::visit(s.vocal, "vocal", f);
    DecoderParams<Real>::visit(s.accomp, "accomp", f);
    SongDecoderParams<Real>::visit(s.song, "song", f);
  }
};

}  // namespace dslm::model
