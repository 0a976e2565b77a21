#include "dslm/train/optim.hpp"

#include <cmath>

#include "dslm/common/error.hpp"
#include "dslm/model/params.hpp"

namespace dslm::train {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error("adam: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error("adam: epsilon must be positive");
}

double noam_lr(std::size_t step, std::size_t d_model, std::size_t warmup) {
  if (step == 0) throw Error("noam_lr: steps count from 1");
  if (warmup == 0) throw Error("noam_lr: warmup must be at least 1");
  if (d_model == 0) throw Error("noam_lr: d_model must be positive");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(d_model), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

template <typename Real>
void adam_step(const NamedParams<Real>& params, const NamedParams<Real>& grads, AdamState<Real>& state, double lr,
               const AdamConfig& config) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam: parameter, gradient and moment lists differ in size");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].second->shape() != params[i].second->shape()) {
      throw Error("adam: gradient of " + params[i].first + " has the wrong shape");
    }
    if (!grads[i].second->all_finite()) {
      throw Error("non-finite gradient in parameter group '" + model::param_group(params[i].first) + "' (" +
                  params[i].first + ")");
    }
  }
  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].second;
    const auto& g = *grads[i].second;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gj;
      const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gj * gj;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + config.epsilon);
      p[j] = static_cast<Real>(static_cast<double>(p[j]) - update);
    }
  }
}

template <typename Real>
double clip_grad_norm(const NamedParams<Real>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (Real x : g->values()) sq += static_cast<double>(x) * static_cast<double>(x);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& [name, g] : grads) {
      for (Real& x : g->values()) x = static_cast<Real>(static_cast<double>(x) * f);
    }
  }
  return norm;
}

template void adam_step<float>(const NamedParams<float>&, const NamedParams<float>&, AdamState<float>&, double,
                               const AdamConfig&);
template void adam_step<double>(const NamedParams<double>&, const NamedParams<double>&, AdamState<double>&, double,
                                const AdamConfig&);
template double clip_grad_norm<float>(const NamedParams<float>&, double);
template double clip_grad_norm<double>(const NamedParams<double>&, double);

}  // namespace dslm::train
