#include "dslm/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "dslm/numcore/ops.hpp"
#include "dslm/train/losses.hpp"

namespace dslm::train {

std::string to_json_line(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["task"] = corpus::train_task_name(m.task);
  j["L_v"] = m.vocal;
  j["L_a"] = m.accomp;
  j["L_s"] = m.song;
  j["L_total"] = m.total;
  j["lr"] = m.lr;
  j["wall"] = m.wall_seconds;
  return j.dump();
}

corpus::TrainTask sample_task(const std::array<double, 3>& mixture, Rng& rng) {
  double total = 0.0;
  for (double w : mixture) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("task mixture weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("task mixture weights are all zero");
  const double weights[4] = {mixture[0], mixture[1] / 2, mixture[1] / 2, mixture[2]};
  static constexpr corpus::TrainTask kTasks[4] = {corpus::TrainTask::SongFromLyrics,
                                                  corpus::TrainTask::PredeterminedAccomp,
                                                  corpus::TrainTask::PredeterminedVocal, corpus::TrainTask::Editing};
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += weights[i];
    if (u < acc) return kTasks[i];
  }
  for (int i = 3; i >= 0; --i) {
    if (weights[i] > 0.0) return kTasks[i];
  }
  return kTasks[0];
}

template <typename Real>
Trainer<Real>::Trainer(const TrainConfig& config, std::vector<corpus::Clip> clips)
    : config_(config),
      clips_(std::move(clips)),
      model_(config.model, model::DSLMParams<Real>::init(config.model, config.seed)),
      grads_(model::DSLMParams<Real>::zeros_like(model_.params())),
      adam_(AdamState<Real>::like(model_.params().named())),
      rng_(config.seed, 1) {
  config_.validate();
  if (clips_.empty()) throw Error("training corpus is empty");
}

template <typename Real>
Trainer<Real>::Trainer(const TrainConfig& config, std::vector<corpus::Clip> clips, const model::Checkpoint& ckpt)
    : config_(config),
      clips_(std::move(clips)),
      model_(model::model_of<Real>(ckpt)),
      grads_(model::DSLMParams<Real>::zeros_like(model_.params())),
      adam_(AdamState<Real>::like(model_.params().named())),
      rng_(0) {
  config_.validate();
  if (clips_.empty()) throw Error("training corpus is empty");
  if (!(model_.config() == config_.model)) throw Error("checkpoint model config differs from the run config");
  steps_ = static_cast<std::size_t>(parse_int(ckpt.get_meta("train.step"), "train.step"));
  adam_.step = static_cast<std::size_t>(parse_int(ckpt.get_meta("adam.step"), "adam.step"));
  rng_.load_state(ckpt.get_meta("train.rng"));
  std::size_t i = 0;
  for (const auto& [name, t] : model_.params().named()) {
    adam_.m[i] = ckpt.tensor("adam.m." + name).template cast<Real>();
    adam_.v[i] = ckpt.tensor("adam.v." + name).template cast<Real>();
    ++i;
  }
}

template <typename Real>
StepMetrics Trainer<Real>::step() {
  const auto start = std::chrono::steady_clock::now();
  StepMetrics m;
  m.step = steps_ + 1;
  m.task = sample_task(config_.mixture, rng_);
  grads_.set_zero();
  const model::ParamBinder<Real> bind(model_.params(), grads_);
  const Real inv_batch = static_cast<Real>(1.0 / static_cast<double>(config_.batch_size));
  for (std::size_t b = 0; b < config_.batch_size; ++b) {
    const auto& clip = clips_[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(clips_.size()) - 1))];
    const auto ex = corpus::assemble_training_example(clip, m.task, rng_, config_.assembly);
    num::Graph<Real> g;
    const auto out = model_.forward(g, ex, bind);
    const auto losses = compute_losses(g, out, ex);
    const double total = losses.total_value();
    if (!std::isfinite(total)) {
      throw DivergenceError("loss became non-finite at step " + std::to_string(m.step) + " (clip " +
                            std::to_string(clip.id) + ")");
    }
    m.vocal += losses.vocal_value() / static_cast<double>(config_.batch_size);
    m.accomp += losses.accomp_value() / static_cast<double>(config_.batch_size);
    m.song += losses.song_value() / static_cast<double>(config_.batch_size);
    m.total += total / static_cast<double>(config_.batch_size);
    g.backward(num::scale(losses.total, inv_batch));
  }
  const auto params = model_.params().named();
  const auto grads = grads_.named();
  if (config_.clip_norm > 0.0) clip_grad_norm(grads, config_.clip_norm);
  m.lr = noam_lr(m.step, config_.model.d_model, config_.warmup) * config_.lr_scale;
  try {
    adam_step(params, grads, adam_, m.lr, config_.adam);
  } catch (const Error& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(m.step));
  }
  steps_ = m.step;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

template <typename Real>
model::Checkpoint Trainer<Real>::checkpoint() const {
  model::Checkpoint ckpt;
  const KeyValueFile cfg = config_.to_file();
  for (const auto& key : cfg.keys()) ckpt.meta[key] = cfg.get(key);
  model::store_model(ckpt, model_);
  ckpt.meta["train.step"] = std::to_string(steps_);
  ckpt.meta["adam.step"] = std::to_string(adam_.step);
  ckpt.meta["train.rng"] = rng_.save_state();
  std::size_t i = 0;
  for (const auto& [name, t] : model_.params().named()) {
    ckpt.tensors.emplace_back("adam.m." + name, adam_.m[i].template cast<double>());
    ckpt.tensors.emplace_back("adam.v." + name, adam_.v[i].template cast<double>());
    ++i;
  }
  return ckpt;
}

template <typename Real>
void Trainer<Real>::save(const std::filesystem::path& path) const {
  model::write_checkpoint(path, checkpoint());
}

template <typename Real>
RunResult train_loop(const TrainConfig& config, const std::vector<corpus::Clip>& clips, const RunOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(options.out_dir);
  RunResult result;
  result.log_path = options.out_dir / "metrics.jsonl";

  std::optional<Trainer<Real>> trainer;
  if (options.resume_from) {
    trainer.emplace(config, clips, model::read_checkpoint(*options.resume_from));
  } else {
    trainer.emplace(config, clips);
  }
  // A resumed run drops log records past its checkpoint so step ids stay
  // strictly increasing.
  std::vector<std::string> kept;
  if (options.resume_from) {
    std::ifstream old(result.log_path);
    std::string line;
    while (std::getline(old, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j.at("step").get<std::size_t>() <= trainer->steps_done()) kept.push_back(line);
    }
  }
  std::ofstream log(result.log_path, std::ios::trunc);
  if (!log) throw Error("cannot write " + result.log_path.string());
  for (const auto& line : kept) log << line << '\n';

  const auto ckpt_path = [&](std::size_t step) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%06zu.ckpt", step);
    return options.out_dir / name;
  };
  while (trainer->steps_done() < config.steps) {
    const StepMetrics m = trainer->step();
    log << to_json_line(m) << '\n';
    log.flush();
    result.metrics.push_back(m);
    if (options.progress && (m.step % options.progress_every == 0 || m.step == config.steps)) {
      *options.progress << "step " << m.step << " task " << corpus::train_task_name(m.task) << " loss " << m.total
                        << " lr " << m.lr << '\n';
    }
    if (config.checkpoint_every > 0 && m.step % config.checkpoint_every == 0) {
      trainer->save(ckpt_path(m.step));
      result.checkpoints.push_back(ckpt_path(m.step));
    }
  }
  result.final_checkpoint = options.out_dir / "final.ckpt";
  trainer->save(result.final_checkpoint);
  result.steps_done = trainer->steps_done();
  return result;
}

template class Trainer<float>;
template class Trainer<double>;
template RunResult train_loop<float>(const TrainConfig&, const std::vector<corpus::Clip>&, const RunOptions&);
template RunResult train_loop<double>(const TrainConfig&, const std::vector<corpus::Clip>&, const RunOptions&);

}  // namespace dslm::train
