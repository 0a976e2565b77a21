#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dslm/numcore/tensor.hpp"

namespace dslm::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;

  void validate() const;
  bool operator==(const AdamConfig&) const = default;
};

// d^-0.5 * min(step^-0.5, step * warmup^-1.5); step counts from 1.
double noam_lr(std::size_t step, std::size_t d_model, std::size_t warmup);

template <typename Real>
struct AdamState {
  std::vector<num::Tensor<Real>> m, v;
  std::size_t step = 0;

  template <class Params>
  static AdamState like(const Params& params) {
    AdamState s;
    for (const auto& [name, t] : params) {
      s.m.emplace_back(t->shape());
      s.v.emplace_back(t->shape());
    }
    return s;
  }
};

template <typename Real>
using NamedParams = std::vector<std::pair<std::string, num::Tensor<Real>*>>;

// Bias-corrected Adam. Every gradient is checked first; a non-finite entry
// rejects the whole step, naming the parameter.
template <typename Real>
void adam_step(const NamedParams<Real>& params, const NamedParams<Real>& grads, AdamState<Real>& state, double lr,
               const AdamConfig& config);

// Scales gradients so their global L2 norm is at most `max_norm`; returns the
// norm before scaling.
template <typename Real>
double clip_grad_norm(const NamedParams<Real>& grads, double max_norm);

}  // namespace dslm::train
