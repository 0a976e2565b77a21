#include "dslm/train/losses.hpp"

#include "dslm/common/error.hpp"
#include "dslm/numcore/ops.hpp"

namespace dslm::train {
namespace {

template <typename Real>
num::Var<Real> stream_loss(num::Graph<Real>& g, const std::optional<num::Var<Real>>& logits, bool enabled,
                           const std::vector<TokenId>& targets, const std::vector<double>& weights,
                           const char* stream) {
  if (!enabled) return g.constant(num::Tensor<Real>::scalar(Real(0)));
  if (!logits) throw Error(std::string("no logits for the enabled ") + stream + " stream");
  if (logits->value().rows() != targets.size() || weights.size() != targets.size()) {
    throw Error(std::string(stream) + " logits cover " + std::to_string(logits->value().rows()) +
                " positions, targets " + std::to_string(targets.size()));
  }
  return num::cross_entropy(*logits, std::span<const TokenId>(targets), std::span<const double>(weights));
}

}  // namespace

template <typename Real>
Losses<Real> compute_losses(num::Graph<Real>& g, const model::ForwardOutputs<Real>& out,
                            const corpus::TrainingExample& ex) {
  Losses<Real> l;
  l.vocal = stream_loss(g, out.decoders.logits_v, ex.config.vocal_enabled, ex.vocal.targets, ex.vocal.loss_mask,
                        "vocal");
  l.accomp = stream_loss(g, out.decoders.logits_a, ex.config.accomp_enabled, ex.accomp.targets,
                         ex.accomp.loss_mask, "accompaniment");
  l.song = stream_loss(g, out.logits_s, ex.config.song_head_enabled, ex.song_targets, ex.song_mask, "song");
  l.total = num::add(num::add(l.vocal, l.accomp), l.song);
  return l;
}

template Losses<float> compute_losses<float>(num::Graph<float>&, const model::ForwardOutputs<float>&,
                                             const corpus::TrainingExample&);
template Losses<double> compute_losses<double>(num::Graph<double>&, const model::ForwardOutputs<double>&,
                                               const corpus::TrainingExample&);

}  // namespace dslm::train
