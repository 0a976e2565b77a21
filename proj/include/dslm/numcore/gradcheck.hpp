#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dslm/numcore/tensor.hpp"

namespace dslm::num {

inline constexpr double kGradcheckEps = 1e-5;

// One tensor under test. `grad` must hold the analytic gradient after
// loss_fn(true) returns. An empty `coords` list checks every element.
struct GradcheckParam {
  std::string name;
  Tensor<double>* value = nullptr;
  const Tensor<double>* grad = nullptr;
  std::vector<std::size_t> coords;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
};

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

// Central differences against the analytic gradient. loss_fn(true) must
// (re)compute the loss and write fresh gradients into each param's `grad`;
// loss_fn(false) only evaluates the loss. Perturbed values are restored
// exactly. A non-finite loss is rejected.
GradcheckReport gradcheck(const std::function<double(bool)>& loss_fn, std::span<GradcheckParam> params,
                          double eps = kGradcheckEps);

}  // namespace dslm::num
