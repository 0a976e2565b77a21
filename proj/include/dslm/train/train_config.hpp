#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "dslm/common/key_value.hpp"
#include "dslm/corpus/assemble.hpp"
#include "dslm/model/config.hpp"
#include "dslm/model/sampler.hpp"
#include "dslm/train/optim.hpp"

namespace dslm::train {

enum class Precision { Float64, Float32 };

const char* precision_name(Precision p);
Precision parse_precision(const std::string& name);
// DSLM_PRECISION if set (f32 | f64), otherwise 64-bit.
Precision default_precision();

struct TrainConfig {
  model::ModelConfig model;
  // Song-from-lyrics, pre-determined track, editing. The pre-determined share
  // is split evenly between its accompaniment and vocal variants.
  std::array<double, 3> mixture = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::size_t batch_size = 8;
  std::size_t steps = 2000;
  std::size_t warmup = 400;
  double lr_scale = 1.0;
  double clip_norm = 0.0;  // 0 disables clipping
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 500;
  Precision precision = Precision::Float64;
  corpus::AssemblyOptions assembly;
  model::SamplerConfig sampler;

  void validate() const;

  // Unknown keys are errors; absent keys keep their defaults.
  static TrainConfig from_file(const KeyValueFile& file);
  static TrainConfig load(const std::string& path);
  KeyValueFile to_file() const;
};

}  // namespace dslm::train
