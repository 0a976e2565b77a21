#include "dslm/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dslm/common/error.hpp"

namespace dslm::num {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

double checked(double loss) {
  if (!std::isfinite(loss)) throw Error("gradcheck: loss is not finite");
  return loss;
}

}  // namespace

GradcheckReport gradcheck(const std::function<double(bool)>& loss_fn, std::span<GradcheckParam> params,
                          double eps) {
  if (!(eps > 0)) throw Error("gradcheck: eps must be positive");
  checked(loss_fn(true));
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    if (!p.value || !p.grad || p.value->shape() != p.grad->shape()) {
      throw Error("gradcheck: parameter '" + p.name + "' has no matching gradient");
    }
    analytic.push_back(*p.grad);
  }

  GradcheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    std::vector<std::size_t> coords = p.coords;
    if (coords.empty()) {
      coords.resize(p.value->size());
      for (std::size_t c = 0; c < coords.size(); ++c) coords[c] = c;
    }
    GradcheckEntry entry{p.name, 0.0, 0};
    for (std::size_t c : coords) {
      if (c >= p.value->size()) throw Error("gradcheck: coordinate out of range for '" + p.name + "'");
      double& x = (*p.value)[c];
      const double saved = x;
      x = saved + eps;
      const double up = checked(loss_fn(false));
      x = saved - eps;
      const double down = checked(loss_fn(false));
      x = saved;
      const double numeric = (up - down) / (2 * eps);
      entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[i][c], numeric));
      ++entry.coords_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dslm::num
