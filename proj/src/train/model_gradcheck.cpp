#include "dslm/train/model_gradcheck.hpp"

#include <algorithm>

#include "dslm/common/error.hpp"
#include "dslm/corpus/assemble.hpp"
#include "dslm/model/dslm.hpp"
#include "dslm/numcore/gradcheck.hpp"
#include "dslm/numcore/ops.hpp"
#include "dslm/train/losses.hpp"

namespace dslm::train {

std::vector<LayoutGradcheck> model_gradcheck(const model::ModelConfig& config, const std::vector<corpus::Clip>& clips,
                                             const ModelGradcheckOptions& options) {
  using corpus::TrainTask;
  using mask::TaskId;
  if (clips.empty()) throw Error("gradcheck needs at least one clip");
  struct Layout {
    const char* name;
    TrainTask task;
    std::optional<TaskId> row;
  };
  const Layout layouts[] = {
      {"song-from-lyrics", TrainTask::SongFromLyrics, std::nullopt},
      {"predetermined-accompaniment", TrainTask::PredeterminedAccomp, std::nullopt},
      {"predetermined-vocals", TrainTask::PredeterminedVocal, std::nullopt},
      {"editing/song-editing", TrainTask::Editing, TaskId::SongEditing},
      {"editing/vocals-editing-in-song", TrainTask::Editing, TaskId::VocalsEditingInSong},
      {"editing/vocals-editing", TrainTask::Editing, TaskId::VocalsEditing},
  };

  model::DSLM<double> net(config, model::DSLMParams<double>::init(config, options.seed));
  auto grads = model::DSLMParams<double>::zeros_like(net.params());
  Rng rng(options.seed, 7);

  std::vector<LayoutGradcheck> out;
  for (const Layout& layout : layouts) {
    corpus::AssemblyOptions opt;
    opt.force_edit_task = layout.row;
    std::vector<corpus::TrainingExample> batch;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      const auto& clip = clips[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1))];
      batch.push_back(corpus::assemble_training_example(clip, layout.task, rng, opt));
    }

    const auto loss_fn = [&](bool compute_grad) {
      grads.set_zero();
      const model::ParamBinder<double> bind =
          compute_grad ? model::ParamBinder<double>(net.params(), grads) : model::ParamBinder<double>();
      double total = 0.0;
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (const auto& ex : batch) {
        num::Graph<double> g(compute_grad);
        const auto losses = compute_losses(g, net.forward(g, ex, bind), ex);
        total += losses.total_value() * inv;
        if (compute_grad) g.backward(num::scale(losses.total, inv));
      }
      if (compute_grad && options.corrupt_backward) {
        grads.visit([](const std::string&, num::Tensor<double>& t) {
          for (double& v : t.values()) v = v * 1.5 + 1e-3;
        });
      }
      return total;
    };

    std::vector<num::GradcheckParam> params;
    const auto p = net.params().named();
    const auto q = grads.named();
    Rng pick(options.seed, 11);
    for (std::size_t i = 0; i < p.size(); ++i) {
      num::GradcheckParam gp;
      gp.name = p[i].first;
      gp.value = p[i].second;
      gp.grad = q[i].second;
      const std::size_t n = p[i].second->size();
      for (std::size_t c = 0; c < std::min(options.coords_per_tensor, n); ++c) {
        gp.coords.push_back(static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
      }
      params.push_back(std::move(gp));
    }
    const auto report = num::gradcheck(loss_fn, params, options.eps);

    LayoutGradcheck lg;
    lg.layout = layout.name;
    for (const char* group : model::kParamGroups) lg.group_max_rel[group] = 0.0;
    for (const auto& e : report.entries) {
      double& slot = lg.group_max_rel[model::param_group(e.name)];
      slot = std::max(slot, e.max_rel_error);
      lg.coords_checked += e.coords_checked;
    }
    lg.max_rel = report.max_rel_error;
    out.push_back(std::move(lg));
  }
  return out;
}

}  // namespace dslm::train
