#include "dslm/train/evaluate.hpp"

#include <algorithm>

#include "dslm/common/error.hpp"
#include "dslm/corpus/assemble.hpp"
#include "dslm/model/generate.hpp"
#include "dslm/train/losses.hpp"
#include "dslm/train/trainer.hpp"

namespace dslm::train {
namespace {

using corpus::TrainTask;
using mask::TaskId;

struct Layout {
  const char* name;
  TrainTask task;
  std::optional<TaskId> edit_row;
};

constexpr Layout kLayouts[] = {
    {"song-from-lyrics", TrainTask::SongFromLyrics, std::nullopt},
    {"predetermined-accompaniment", TrainTask::PredeterminedAccomp, std::nullopt},
    {"predetermined-vocals", TrainTask::PredeterminedVocal, std::nullopt},
    {"editing/song-editing", TrainTask::Editing, TaskId::SongEditing},
    {"editing/vocals-editing-in-song", TrainTask::Editing, TaskId::VocalsEditingInSong},
    {"editing/vocals-editing", TrainTask::Editing, TaskId::VocalsEditing},
};

double ratio(std::size_t hits, std::size_t total) {
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

void score(const std::vector<TokenId>& got, const std::vector<TokenId>& want, std::size_t& hits, std::size_t& total) {
  const std::size_t common = std::min(got.size(), want.size());
  for (std::size_t i = 0; i < common; ++i) hits += got[i] == want[i] ? 1 : 0;
  total += std::max(got.size(), want.size());
}

}  // namespace

template <typename Real>
std::vector<TaskLoss> teacher_forced_losses(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips,
                                            std::optional<mask::BCAKind> bca) {
  std::vector<TaskLoss> out;
  for (const Layout& layout : kLayouts) {
    corpus::AssemblyOptions opt = corpus::AssemblyOptions::evaluation();
    opt.force_edit_task = layout.edit_row;
    if (layout.task == TrainTask::SongFromLyrics && bca) opt.force_bca = bca;
    TaskLoss t;
    t.name = layout.name;
    Rng rng(0);
    for (const auto& clip : clips) {
      const auto ex = corpus::assemble_training_example(clip, layout.task, rng, opt);
      t.task = ex.task;
      num::Graph<Real> g(false);
      const auto losses = compute_losses(g, model.forward(g, ex), ex);
      t.vocal += losses.vocal_value();
      t.accomp += losses.accomp_value();
      t.song += losses.song_value();
      ++t.examples;
    }
    if (t.examples > 0) {
      t.vocal /= static_cast<double>(t.examples);
      t.accomp /= static_cast<double>(t.examples);
      t.song /= static_cast<double>(t.examples);
    }
    out.push_back(t);
  }
  return out;
}

template <typename Real>
double accompaniment_ce(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips, mask::BCAKind bca) {
  if (clips.empty()) throw Error("accompaniment_ce: no clips");
  corpus::AssemblyOptions opt = corpus::AssemblyOptions::evaluation();
  opt.force_bca = bca;
  Rng rng(0);
  double weighted = 0.0;
  double tokens = 0.0;
  for (const auto& clip : clips) {
    const auto ex = corpus::assemble_training_example(clip, TrainTask::SongFromLyrics, rng, opt);
    num::Graph<Real> g(false);
    const auto losses = compute_losses(g, model.forward(g, ex), ex);
    double n = 0.0;
    for (double w : ex.accomp.loss_mask) n += w;
    weighted += losses.accomp_value() * n;
    tokens += n;
  }
  return weighted / tokens;
}

double ExactMatch::rate() const {
  return ratio(vocal_hits + accomp_hits + song_hits, vocal_total + accomp_total + song_total);
}
double ExactMatch::vocal_rate() const { return ratio(vocal_hits, vocal_total); }
double ExactMatch::accomp_rate() const { return ratio(accomp_hits, accomp_total); }
double ExactMatch::song_rate() const { return ratio(song_hits, song_total); }

template <typename Real>
ExactMatch greedy_exact_match(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips,
                              std::optional<mask::BCAKind> bca) {
  ExactMatch em;
  model::SamplerConfig greedy;
  greedy.k = 1;
  greedy.temperature = 1.0;
  model::GenerateOptions opt;
  opt.bca = bca;
  for (const auto& clip : clips) {
    model::GenerationConditions c;
    c.lyrics = clip.lyrics;
    const auto r = model::generate(model, TaskId::LyricsToSong, c, greedy, opt);
    score(*r.vocal, clip.vocal, em.vocal_hits, em.vocal_total);
    score(*r.accomp, clip.accomp, em.accomp_hits, em.accomp_total);
    score(r.song.value_or(std::vector<TokenId>{}), clip.song, em.song_hits, em.song_total);
  }
  return em;
}

template <typename Real>
double song_head_accuracy(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips) {
  const corpus::AssemblyOptions opt = corpus::AssemblyOptions::evaluation();
  Rng rng(0);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& clip : clips) {
    const auto ex = corpus::assemble_training_example(clip, TrainTask::SongFromLyrics, rng, opt);
    num::Graph<Real> g(false);
    const auto out = model.forward(g, ex);
    const auto& logits = out.logits_s->value();
    for (std::size_t t = 0; t < ex.song_mask.size(); ++t) {
      if (ex.song_mask[t] == 0.0) continue;
      // The oracle: mix of the ground-truth tokens this position pairs.
      const TokenId want = corpus::mix(ex.vocal.inputs[t], ex.accomp.inputs[t]);
      hits += model::argmax(logits.row(t)) == want ? 1 : 0;
      ++total;
    }
  }
  return ratio(hits, total);
}

template <typename Real>
AblationReport ablation_bca(const TrainConfig& config, const std::vector<corpus::Clip>& clips) {
  AblationReport report;
  for (const auto kind : {mask::BCAKind::BR, mask::BCAKind::None}) {
    TrainConfig c = config;
    c.assembly.force_bca = kind;
    Trainer<Real> trainer(c, clips);
    while (trainer.steps_done() < c.steps) trainer.step();
    const double ce = accompaniment_ce(trainer.model(), clips, kind);
    (kind == mask::BCAKind::BR ? report.ce_br : report.ce_none) = ce;
  }
  return report;
}

#define DSLM_INSTANTIATE_EVAL(Real)                                                                               \
  template std::vector<TaskLoss> teacher_forced_losses<Real>(const model::DSLM<Real>&,                            \
                                                             const std::vector<corpus::Clip>&,                    \
                                                             std::optional<mask::BCAKind>);                       \
  template double accompaniment_ce<Real>(const model::DSLM<Real>&, const std::vector<corpus::Clip>&,              \
                                         mask::BCAKind);                                                          \
  template ExactMatch greedy_exact_match<Real>(const model::DSLM<Real>&, const std::vector<corpus::Clip>&,        \
                                               std::optional<mask::BCAKind>);                                     \
  template double song_head_accuracy<Real>(const model::DSLM<Real>&, const std::vector<corpus::Clip>&);           \
  template AblationReport ablation_bca<Real>(const TrainConfig&, const std::vector<corpus::Clip>&);

DSLM_INSTANTIATE_EVAL(float)
DSLM_INSTANTIATE_EVAL(double)

}  // namespace dslm::train
