#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dslm/common/error.hpp"
#include "dslm/common/rng.hpp"
#include "dslm/corpus/assemble.hpp"
#include "dslm/model/checkpoint.hpp"
#include "dslm/model/dslm.hpp"
#include "dslm/train/optim.hpp"
#include "dslm/train/train_config.hpp"

namespace dslm::train {

struct StepMetrics {
  std::size_t step = 0;
  corpus::TrainTask task = corpus::TrainTask::SongFromLyrics;
  double vocal = 0.0;
  double accomp = 0.0;
  double song = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

// One JSON object per line: step, task, L_v, L_a, L_s, L_total, lr, wall.
std::string to_json_line(const StepMetrics& m);

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Draws a training task from the three-way mixture.
corpus::TrainTask sample_task(const std::array<double, 3>& mixture, Rng& rng);

template <typename Real>
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::vector<corpus::Clip> clips);
  // Restores parameters, optimizer moments, RNG state and step counter.
  Trainer(const TrainConfig& config, std::vector<corpus::Clip> clips, const model::Checkpoint& ckpt);

  // Samples a task, assembles a homogeneous batch, and takes one Adam step on
  // the batch-mean loss. Throws DivergenceError (parameters untouched) when
  // the loss or a gradient is not finite.
  StepMetrics step();

  model::Checkpoint checkpoint() const;
  void save(const std::filesystem::path& path) const;

  const model::DSLM<Real>& model() const { return model_; }
  std::size_t steps_done() const { return steps_; }
  const AdamState<Real>& adam_state() const { return adam_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  std::vector<corpus::Clip> clips_;
  model::DSLM<Real> model_;
  model::DSLMParams<Real> grads_;
  AdamState<Real> adam_;
  Rng rng_;
  std::size_t steps_ = 0;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  std::ostream* progress = nullptr;
  std::size_t progress_every = 100;
};

struct RunResult {
  std::size_t steps_done = 0;
  std::vector<StepMetrics> metrics;  // steps run by this call
  std::filesystem::path log_path;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path final_checkpoint;
};

// Trains to config.steps, appending one log record per step to
// out_dir/metrics.jsonl and writing checkpoints at the configured cadence and
// at the end. On divergence the latest checkpoint on disk is left as is and
// DivergenceError propagates.
template <typename Real>
RunResult train_loop(const TrainConfig& config, const std::vector<corpus::Clip>& clips, const RunOptions& options);

}  // namespace dslm::train
