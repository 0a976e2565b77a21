#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dslm/corpus/assemble.hpp"
#include "dslm/maskengine/masks.hpp"
#include "dslm/model/config.hpp"
#include "dslm/model/params.hpp"
#include "dslm/numcore/graph.hpp"

namespace dslm::model {

template <typename Real>
using Var = num::Var<Real>;
template <typename Real>
using Graph = num::Graph<Real>;

// Binds parameter tensors into a graph, routing each one's gradient into the
// matching tensor of a parallel DSLMParams. A default binder binds without
// gradient sinks (inference).
template <typename Real>
class ParamBinder {
 public:
  ParamBinder() = default;
  ParamBinder(const DSLMParams<Real>& params, DSLMParams<Real>& grads);

  Var<Real> operator()(Graph<Real>& g, const Tensor<Real>& p) const;

 private:
  std::unordered_map<const Tensor<Real>*, Tensor<Real>*> sinks_;
};

struct DecodeInputs {
  std::span<const TokenId> lyrics;
  std::span<const TokenId> vocal;
  std::span<const TokenId> accomp;
  mask::MaskConfig config;

  static DecodeInputs from(const corpus::TrainingExample& example);
};

template <typename Real>
struct DecoderOutputs {
  std::optional<Var<Real>> logits_v, logits_a;
  std::optional<Var<Real>> e_v, e_a;  // final-layer states after the final norm
  std::vector<Var<Real>> states_v, states_a;  // layer inputs H^0 .. H^L
};

template <typename Real>
struct ForwardOutputs {
  DecoderOutputs<Real> decoders;
  std::optional<Var<Real>> logits_s;
};

template <typename Real>
class DSLM {
 public:
  DSLM(ModelConfig config, DSLMParams<Real> params);

  const ModelConfig& config() const noexcept { return config_; }
  const DSLMParams<Real>& params() const noexcept { return params_; }
  DSLMParams<Real>& params() noexcept { return params_; }

  // Dropped or empty lyrics are encoded as the single NULL_LYRIC token.
  Var<Real> encode_lyrics(Graph<Real>& g, std::span<const TokenId> lyrics, const ParamBinder<Real>& bind = {}) const;

  // Token plus position embedding for `ids` placed at positions first, first+1, ...
  Var<Real> embed(Graph<Real>& g, const DecoderParams<Real>& p, std::span<const TokenId> ids, std::size_t first,
                  const ParamBinder<Real>& bind) const;

  // Multi-head attention from already normalized inputs. `mask` (additive,
  // [queries x keys]) may be null for full attention.
  Var<Real> attention(Graph<Real>& g, const AttentionParams<Real>& p, Var<Real> queries, Var<Real> keys,
                      const Tensor<Real>* mask, const ParamBinder<Real>& bind) const;

  Var<Real> feed_forward(Graph<Real>& g, const FeedForwardParams<Real>& p, Var<Real> x,
                         const ParamBinder<Real>& bind) const;

  Var<Real> encoder_layer(Graph<Real>& g, const EncoderLayerParams<Real>& p, Var<Real> x,
                          const ParamBinder<Real>& bind) const;

  // One decoder block for the query rows `x`. `self_states` are the rows the
  // SA sublayer attends (x's stream at the previous layer), `other_states` the
  // other stream's previous-layer rows for BCA, or nullopt when BCA is
  // bypassed.
  Var<Real> decoder_block(Graph<Real>& g, const DecoderBlockParams<Real>& p, Var<Real> x, Var<Real> self_states,
                          const Tensor<Real>& sa_mask, Var<Real> lyrics, std::optional<Var<Real>> other_states,
                          const Tensor<Real>* bca_mask, const ParamBinder<Real>& bind) const;

  // Both streams through block `layer`, each reading the other's input states.
  std::pair<Var<Real>, Var<Real>> dslm_block_forward(Graph<Real>& g, std::size_t layer, Var<Real> h_v, Var<Real> h_a,
                                                     Var<Real> lyrics, const mask::MaskConfig& config,
                                                     const ParamBinder<Real>& bind = {}) const;

  Var<Real> output_norm(Graph<Real>& g, const DecoderParams<Real>& p, Var<Real> h, const ParamBinder<Real>& bind) const;
  Var<Real> output_head(Graph<Real>& g, const DecoderParams<Real>& p, Var<Real> e, const ParamBinder<Real>& bind) const;

  DecoderOutputs<Real> decoders_forward(Graph<Real>& g, const DecodeInputs& in,
                                        const ParamBinder<Real>& bind = {}) const;

  Var<Real> song_decoder_forward(Graph<Real>& g, Var<Real> e_v, Var<Real> e_a,
                                 const ParamBinder<Real>& bind = {}) const;

  // Teacher-forced pass over an assembled example. Rejects examples whose mask
  // bundle is not the one their task routes to.
  ForwardOutputs<Real> forward(Graph<Real>& g, const corpus::TrainingExample& example,
                               const ParamBinder<Real>& bind = {}) const;

  const DecoderParams<Real>& decoder_params(mask::Stream s) const {
    return s == mask::Stream::Vocal ? params_.vocal : params_.accomp;
  }

 private:
  ModelConfig config_;
  DSLMParams<Real> params_;
};

// Throws unless `example.config` is the routed configuration of its task (the
// song-from-lyrics no-BCA variant is the one permitted exception).
void check_example_routing(const corpus::TrainingExample& example);

}  // namespace dslm::model
