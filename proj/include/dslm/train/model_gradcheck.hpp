#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dslm/corpus/clip.hpp"
#include "dslm/model/config.hpp"

namespace dslm::train {

struct ModelGradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t batch_size = 2;
  std::size_t coords_per_tensor = 2;
  double eps = 1e-5;
  // Test fixture: perturbs the analytic gradient so the check must fail.
  bool corrupt_backward = false;
};

struct LayoutGradcheck {
  std::string layout;  // training task, or editing/<row>
  std::map<std::string, double> group_max_rel;  // encoder, vocal, accomp, song
  std::size_t coords_checked = 0;
  double max_rel = 0.0;
};

// Whole-model central-difference check of the summed three-stream loss, once
// per training-task layout, on a random 64-bit model drawn from `seed`.
std::vector<LayoutGradcheck> model_gradcheck(const model::ModelConfig& config, const std::vector<corpus::Clip>& clips,
                                             const ModelGradcheckOptions& options);

}  // namespace dslm::train
