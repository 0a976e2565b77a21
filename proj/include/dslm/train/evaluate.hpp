#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dslm/corpus/clip.hpp"
#include "dslm/maskengine/masks.hpp"
#include "dslm/model/dslm.hpp"
#include "dslm/train/train_config.hpp"

namespace dslm::train {

struct TaskLoss {
  std::string name;  // training task, or the editing row it uses
  mask::TaskId task = mask::TaskId::LyricsToSong;
  double vocal = 0.0, accomp = 0.0, song = 0.0;
  std::size_t examples = 0;
};

// Teacher-forced per-stream CE for every training task layout (and each
// editing row), averaged over clips. Assembly uses no dropout, no prompts, no
// token masking, and BR for song-from-lyrics unless `bca` overrides it.
template <typename Real>
std::vector<TaskLoss> teacher_forced_losses(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips,
                                            std::optional<mask::BCAKind> bca = std::nullopt);

// Mean accompaniment CE per token for song-from-lyrics examples under `bca`.
template <typename Real>
double accompaniment_ce(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips, mask::BCAKind bca);

struct ExactMatch {
  std::size_t vocal_hits = 0, vocal_total = 0;
  std::size_t accomp_hits = 0, accomp_total = 0;
  std::size_t song_hits = 0, song_total = 0;

  double rate() const;
  double vocal_rate() const;
  double accomp_rate() const;
  double song_rate() const;
};

// Greedy (k = 1) lyrics-to-song generation from each clip's lyrics, compared
// token by token with the clip. A stream of the wrong length counts every
// missing or extra token as a miss.
template <typename Real>
ExactMatch greedy_exact_match(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips,
                              std::optional<mask::BCAKind> bca = std::nullopt);

// Teacher-forced song-head argmax accuracy against the mix of the true vocal
// and accompaniment tokens.
template <typename Real>
double song_head_accuracy(const model::DSLM<Real>& model, const std::vector<corpus::Clip>& clips);

struct AblationReport {
  double ce_br = 0.0;
  double ce_none = 0.0;
  double gap() const { return ce_none - ce_br; }
};

// Trains two models that differ only in the song-from-lyrics cross-stream mask
// (BR vs None) and compares their accompaniment CE on the training clips.
template <typename Real>
AblationReport ablation_bca(const TrainConfig& config, const std::vector<corpus::Clip>& clips);

}  // namespace dslm::train
