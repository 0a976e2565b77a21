#pragma once

#include "dslm/corpus/assemble.hpp"
#include "dslm/model/dslm.hpp"

namespace dslm::train {

template <typename Real>
struct Losses {
  num::Var<Real> vocal, accomp, song, total;

  double vocal_value() const { return static_cast<double>(vocal.value().item()); }
  double accomp_value() const { return static_cast<double>(accomp.value().item()); }
  double song_value() const { return static_cast<double>(song.value().item()); }
  double total_value() const { return static_cast<double>(total.value().item()); }
};

// Masked mean cross-entropy per stream; disabled streams contribute a constant
// 0. total = vocal + accomp + song.
template <typename Real>
Losses<Real> compute_losses(num::Graph<Real>& g, const model::ForwardOutputs<Real>& out,
                            const corpus::TrainingExample& example);

}  // namespace dslm::train
