#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dslm/common/rng.hpp"
#include "dslm/corpus/clip.hpp"
#include "dslm/maskengine/masks.hpp"

namespace dslm::corpus {

enum class TrainTask { SongFromLyrics, PredeterminedAccomp, PredeterminedVocal, Editing };

const char* train_task_name(TrainTask task);
TrainTask parse_train_task(const std::string& name);

struct AssemblyOptions {
  double br_probability = 0.8;  // song-from-lyrics: BR, otherwise no cross-stream attention
  double lyrics_dropout = 0.2;
  double token_mask_rate = 0.2;  // fraction of a pre-determined track hidden behind MASK
  double max_prompt_fraction = 0.25;
  double edit_min_fraction = 0.1;
  double edit_max_fraction = 0.4;
  // Chance that an example carries prompts at all; their lengths are then
  // uniform in [0, max_prompt_fraction * length].
  double prompt_probability = 0.5;
  // Pins the song-from-lyrics cross-stream mask (ablation runs).
  std::optional<mask::BCAKind> force_bca;
  // Pins which editing row an Editing example uses.
  std::optional<mask::TaskId> force_edit_task;

  // Deterministic variant for teacher-forced evaluation.
  static AssemblyOptions evaluation();
};

// One decoder stream laid out as [prefix][separator][BOS][tokens]. Targets are
// PAD before BOS and the tokens followed by EOS from BOS on.
struct StreamExample {
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<double> loss_mask;
  std::vector<bool> masked;  // input replaced by MASK
};

struct TrainingExample {
  TrainTask train_task = TrainTask::SongFromLyrics;
  mask::TaskId task = mask::TaskId::LyricsToSong;
  mask::MaskConfig config;
  std::uint64_t clip_id = 0;

  std::vector<TokenId> lyrics;
  bool lyrics_dropped = false;

  StreamExample vocal;
  StreamExample accomp;
  // Song targets sit at the positions of the input tokens they mix.
  std::vector<TokenId> song_targets;
  std::vector<double> song_mask;

  std::size_t prefix_length = 0;
  TokenId separator = tokens::kPad;  // kPad when there is no separator
  std::size_t target_begin = 0;      // BOS position
  std::size_t target_length = 0;
  std::size_t vocal_prompt = 0;
  std::size_t accomp_prompt = 0;
  std::size_t edit_span = 0;

  std::size_t length() const { return vocal.inputs.size(); }
};

// Builds one stream. `prefix` fills the positions before the separator;
// `separator` of kPad means none. `loss` chooses whether the target region is
// scored.
StreamExample layout_stream(const std::vector<TokenId>& prefix, TokenId separator, const std::vector<TokenId>& tokens,
                            bool loss);
// Left-pads `tokens` with PAD to `width`.
std::vector<TokenId> pad_left(const std::vector<TokenId>& tokens, std::size_t width);

TrainingExample assemble_training_example(const Clip& clip, TrainTask task, Rng& rng,
                                          const AssemblyOptions& options = {});

}  // namespace dslm::corpus
