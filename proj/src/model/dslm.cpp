#include "dslm/model/dslm.hpp"

#include <cmath>

#include "dslm/common/error.hpp"
#include "dslm/numcore/ops.hpp"

namespace dslm::model {

using num::Shape;

template <typename Real>
ParamBinder<Real>::ParamBinder(const DSLMParams<Real>& params, DSLMParams<Real>& grads) {
  const auto p = params.named();
  const auto q = grads.named();
  if (p.size() != q.size()) throw Error("gradient buffers do not match the parameters");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].second->shape() != q[i].second->shape()) {
      throw Error("gradient buffer for " + p[i].first + " has the wrong shape");
    }
    sinks_.emplace(p[i].second, q[i].second);
  }
}

template <typename Real>
Var<Real> ParamBinder<Real>::operator()(Graph<Real>& g, const Tensor<Real>& p) const {
  const auto it = sinks_.find(&p);
  return g.parameter(p, it == sinks_.end() ? nullptr : it->second);
}

DecodeInputs DecodeInputs::from(const corpus::TrainingExample& example) {
  return {example.lyrics, example.vocal.inputs, example.accomp.inputs, example.config};
}

void check_example_routing(const corpus::TrainingExample& example) {
  mask::MaskConfig routed = mask::route_task(example.task);
  if (example.train_task == corpus::TrainTask::SongFromLyrics && example.task == mask::TaskId::LyricsToSong &&
      example.config.bca == mask::BCAKind::None) {
    routed.bca = mask::BCAKind::None;
  }
  if (!(example.config == routed)) {
    throw Error("example mask bundle '" + example.config.describe() + "' does not match task " +
                std::string(mask::task_name(example.task)) + " ('" + routed.describe() + "')");
  }
}

template <typename Real>
DSLM<Real>::DSLM(ModelConfig config, DSLMParams<Real> params) : config_(config), params_(std::move(params)) {
  config_.validate();
  const auto reference = DSLMParams<Real>::shaped(config_);
  const auto expected = reference.named();
  const auto actual = params_.named();
  if (expected.size() != actual.size()) throw Error("parameter set does not match the model config");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != actual[i].first || expected[i].second->shape() != actual[i].second->shape()) {
      throw Error("parameter " + actual[i].first + " has shape " + num::shape_string(actual[i].second->shape()) +
                  ", config expects " + num::shape_string(expected[i].second->shape()));
    }
  }
}

template <typename Real>
Var<Real> DSLM<Real>::encode_lyrics(Graph<Real>& g, std::span<const TokenId> lyrics,
                                    const ParamBinder<Real>& bind) const {
  static const TokenId kNull[] = {tokens::kNullLyric};
  if (lyrics.empty()) lyrics = kNull;
  if (lyrics.size() > config_.lyrics_context) {
    throw Error("lyrics of " + std::to_string(lyrics.size()) + " tokens exceed the context of " +
                std::to_string(config_.lyrics_context));
  }
  const auto& p = params_.encoder;
  std::vector<TokenId> positions(lyrics.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<TokenId>(i);
  const Real s = static_cast<Real>(std::sqrt(static_cast<double>(config_.d_model)));
  Var<Real> x = num::add(num::scale(num::embedding(bind(g, p.token_embedding), lyrics), s),
                         num::scale(num::embedding(bind(g, p.position_embedding), std::span<const TokenId>(positions)), s));
  for (const auto& layer : p.layers) x = encoder_layer(g, layer, x, bind);
  return num::layer_norm(x, bind(g, p.final_ln.gain), bind(g, p.final_ln.bias));
}

template <typename Real>
Var<Real> DSLM<Real>::embed(Graph<Real>& g, const DecoderParams<Real>& p, std::span<const TokenId> ids,
                            std::size_t first, const ParamBinder<Real>& bind) const {
  if (first + ids.size() > config_.decoder_context) {
    throw Error("decoder input of " + std::to_string(first + ids.size()) + " positions exceeds the context of " +
                std::to_string(config_.decoder_context));
  }
  std::vector<TokenId> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<TokenId>(first + i);
  const Real s = static_cast<Real>(std::sqrt(static_cast<double>(config_.d_model)));
  return num::add(num::scale(num::embedding(bind(g, p.token_embedding), ids), s),
                  num::scale(num::embedding(bind(g, p.position_embedding), std::span<const TokenId>(positions)), s));
}

template <typename Real>
Var<Real> DSLM<Real>::attention(Graph<Real>& g, const AttentionParams<Real>& p, Var<Real> queries, Var<Real> keys,
                                const Tensor<Real>* mask, const ParamBinder<Real>& bind) const {
  const std::size_t h = config_.heads;
  Var<Real> q = num::split_heads(num::matmul(queries, bind(g, p.wq)), h);
  Var<Real> k = num::split_heads(num::matmul(keys, bind(g, p.wk)), h);
  Var<Real> v = num::split_heads(num::matmul(keys, bind(g, p.wv)), h);
  const Real inv = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(config_.d_k())));
  Var<Real> scores = num::scale(num::matmul_nt(q, k), inv);
  Var<Real> weights = mask ? num::softmax_masked(scores, *mask) : num::softmax(scores);
  return num::matmul(num::merge_heads(num::matmul(weights, v)), bind(g, p.wo));
}

template <typename Real>
Var<Real> DSLM<Real>::feed_forward(Graph<Real>& g, const FeedForwardParams<Real>& p, Var<Real> x,
                                   const ParamBinder<Real>& bind) const {
  Var<Real> hidden = num::gelu(num::add_bias(num::matmul(x, bind(g, p.w1)), bind(g, p.b1)));
  return num::add_bias(num::matmul(hidden, bind(g, p.w2)), bind(g, p.b2));
}

template <typename Real>
Var<Real> DSLM<Real>::encoder_layer(Graph<Real>& g, const EncoderLayerParams<Real>& p, Var<Real> x,
                                    const ParamBinder<Real>& bind) const {
  Var<Real> n = num::layer_norm(x, bind(g, p.ln_attn.gain), bind(g, p.ln_attn.bias));
  x = num::add(x, attention(g, p.attn, n, n, nullptr, bind));
  n = num::layer_norm(x, bind(g, p.ln_ffn.gain), bind(g, p.ln_ffn.bias));
  return num::add(x, feed_forward(g, p.ffn, n, bind));
}

template <typename Real>
Var<Real> DSLM<Real>::decoder_block(Graph<Real>& g, const DecoderBlockParams<Real>& p, Var<Real> x,
                                    Var<Real> self_states, const Tensor<Real>& sa_mask, Var<Real> lyrics,
                                    std::optional<Var<Real>> other_states, const Tensor<Real>* bca_mask,
                                    const ParamBinder<Real>& bind) const {
  const Var<Real> gain = bind(g, p.ln_sa.gain);
  const Var<Real> bias = bind(g, p.ln_sa.bias);
  const Var<Real> q = num::layer_norm(x, gain, bias);
  const Var<Real> kv = self_states.id == x.id ? q : num::layer_norm(self_states, gain, bias);
  Var<Real> h = num::add(x, attention(g, p.sa, q, kv, &sa_mask, bind));

  Var<Real> n = num::layer_norm(h, bind(g, p.ln_ca.gain), bind(g, p.ln_ca.bias));
  h = num::add(h, attention(g, p.ca, n, lyrics, nullptr, bind));

  if (other_states) {
    n = num::layer_norm(h, bind(g, p.ln_bca.gain), bind(g, p.ln_bca.bias));
    Var<Real> memory = num::layer_norm(*other_states, bind(g, p.ln_bca_memory.gain), bind(g, p.ln_bca_memory.bias));
    h = num::add(h, attention(g, p.bca, n, memory, bca_mask, bind));
  }

  n = num::layer_norm(h, bind(g, p.ln_ffn.gain), bind(g, p.ln_ffn.bias));
  return num::add(h, feed_forward(g, p.ffn, n, bind));
}

template <typename Real>
std::pair<Var<Real>, Var<Real>> DSLM<Real>::dslm_block_forward(Graph<Real>& g, std::size_t layer, Var<Real> h_v,
                                                               Var<Real> h_a, Var<Real> lyrics,
                                                               const mask::MaskConfig& config,
                                                               const ParamBinder<Real>& bind) const {
  const std::size_t t = h_v.value().rows();
  if (h_a.value().rows() != t) {
    throw Error("stream lengths differ: vocal " + std::to_string(t) + ", accompaniment " +
                std::to_string(h_a.value().rows()));
  }
  if (layer >= config_.dec_layers) throw Error("decoder layer " + std::to_string(layer) + " out of range");
  const auto sa_v = mask::build_sa_mask(config.vocal_sa == mask::SAKind::Disabled ? mask::SAKind::Causal
                                                                                   : config.vocal_sa, t)
                        .additive<Real>();
  const auto sa_a = mask::build_sa_mask(config.accomp_sa == mask::SAKind::Disabled ? mask::SAKind::Causal
                                                                                   : config.accomp_sa, t)
                        .additive<Real>();
  const auto bca = mask::build_bca_masks(config.bca, t);
  const auto m_v = bca.vocal_from_accomp.additive<Real>();
  const auto m_a = bca.accomp_from_vocal.additive<Real>();
  Var<Real> out_v = decoder_block(g, params_.vocal.blocks[layer], h_v, h_v, sa_v, lyrics,
                                  bca.vocal_bypass ? std::nullopt : std::optional<Var<Real>>(h_a), &m_v, bind);
  Var<Real> out_a = decoder_block(g, params_.accomp.blocks[layer], h_a, h_a, sa_a, lyrics,
                                  bca.accomp_bypass ? std::nullopt : std::optional<Var<Real>>(h_v), &m_a, bind);
  return {out_v, out_a};
}

template <typename Real>
Var<Real> DSLM<Real>::output_norm(Graph<Real>& g, const DecoderParams<Real>& p, Var<Real> h,
                                  const ParamBinder<Real>& bind) const {
  return num::layer_norm(h, bind(g, p.final_ln.gain), bind(g, p.final_ln.bias));
}

template <typename Real>
Var<Real> DSLM<Real>::output_head(Graph<Real>& g, const DecoderParams<Real>& p, Var<Real> e,
                                  const ParamBinder<Real>& bind) const {
  return num::add_bias(num::matmul(e, bind(g, p.head_w)), bind(g, p.head_b));
}

template <typename Real>
DecoderOutputs<Real> DSLM<Real>::decoders_forward(Graph<Real>& g, const DecodeInputs& in,
                                                  const ParamBinder<Real>& bind) const {
  const mask::MaskConfig& c = in.config;
  c.validate();
  if (!c.vocal_enabled && !c.accomp_enabled) throw Error("both decoders are disabled");
  if (c.vocal_enabled && c.accomp_enabled && in.vocal.size() != in.accomp.size()) {
    throw Error("stream lengths differ: vocal " + std::to_string(in.vocal.size()) + ", accompaniment " +
                std::to_string(in.accomp.size()));
  }
  const std::size_t t = c.vocal_enabled ? in.vocal.size() : in.accomp.size();
  if (t == 0) throw Error("empty decoder input");

  const Var<Real> lyrics = encode_lyrics(g, in.lyrics, bind);
  const auto bca = mask::build_bca_masks(c.bca, t);
  const auto m_v = bca.vocal_from_accomp.additive<Real>();
  const auto m_a = bca.accomp_from_vocal.additive<Real>();
  Tensor<Real> sa_v, sa_a;

  DecoderOutputs<Real> out;
  if (c.vocal_enabled) {
    sa_v = mask::build_sa_mask(c.vocal_sa, t).additive<Real>();
    out.states_v.push_back(embed(g, params_.vocal, in.vocal, 0, bind));
  }
  if (c.accomp_enabled) {
    sa_a = mask::build_sa_mask(c.accomp_sa, t).additive<Real>();
    out.states_a.push_back(embed(g, params_.accomp, in.accomp, 0, bind));
  }
  for (std::size_t l = 0; l < config_.dec_layers; ++l) {
    std::optional<Var<Real>> next_v, next_a;
    if (c.vocal_enabled) {
      const Var<Real> h = out.states_v.back();
      std::optional<Var<Real>> other;
      if (!bca.vocal_bypass && c.accomp_enabled) other = out.states_a.back();
      next_v = decoder_block(g, params_.vocal.blocks[l], h, h, sa_v, lyrics, other, &m_v, bind);
    }
    if (c.accomp_enabled) {
      const Var<Real> h = out.states_a.back();
      std::optional<Var<Real>> other;
      if (!bca.accomp_bypass && c.vocal_enabled) other = out.states_v.back();
      next_a = decoder_block(g, params_.accomp.blocks[l], h, h, sa_a, lyrics, other, &m_a, bind);
    }
    if (next_v) out.states_v.push_back(*next_v);
    if (next_a) out.states_a.push_back(*next_a);
  }
  if (c.vocal_enabled) {
    out.e_v = output_norm(g, params_.vocal, out.states_v.back(), bind);
    out.logits_v = output_head(g, params_.vocal, *out.e_v, bind);
  }
  if (c.accomp_enabled) {
    out.e_a = output_norm(g, params_.accomp, out.states_a.back(), bind);
    out.logits_a = output_head(g, params_.accomp, *out.e_a, bind);
  }
  return out;
}

template <typename Real>
Var<Real> DSLM<Real>::song_decoder_forward(Graph<Real>& g, Var<Real> e_v, Var<Real> e_a,
                                           const ParamBinder<Real>& bind) const {
  if (e_v.value().rows() != e_a.value().rows()) {
    throw Error("song decoder inputs differ in length: " + std::to_string(e_v.value().rows()) + " vs " +
                std::to_string(e_a.value().rows()));
  }
  const auto& p = params_.song;
  Var<Real> x = num::add_bias(num::matmul(num::concat_cols(e_v, e_a), bind(g, p.input_w)), bind(g, p.input_b));
  for (const auto& layer : p.layers) x = encoder_layer(g, layer, x, bind);
  x = num::layer_norm(x, bind(g, p.final_ln.gain), bind(g, p.final_ln.bias));
  return num::add_bias(num::matmul(x, bind(g, p.head_w)), bind(g, p.head_b));
}

template <typename Real>
ForwardOutputs<Real> DSLM<Real>::forward(Graph<Real>& g, const corpus::TrainingExample& example,
                                         const ParamBinder<Real>& bind) const {
  check_example_routing(example);
  ForwardOutputs<Real> out;
  out.decoders = decoders_forward(g, DecodeInputs::from(example), bind);
  if (example.config.song_head_enabled) {
    out.logits_s = song_decoder_forward(g, *out.decoders.e_v, *out.decoders.e_a, bind);
  }
  return out;
}

template class ParamBinder<float>;
template class ParamBinder<double>;
template class DSLM<float>;
template class DSLM<double>;

}  // namespace dslm::model
