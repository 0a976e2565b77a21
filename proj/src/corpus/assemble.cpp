#include "dslm/corpus/assemble.hpp"

#include <algorithm>
#include <cmath>

#include "dslm/common/error.hpp"

namespace dslm::corpus {
namespace {

using mask::TaskId;

std::size_t draw_prompt(std::size_t n, const AssemblyOptions& opt, bool with_prompts, Rng& rng) {
  if (!with_prompts) return 0;
  const auto hi = static_cast<std::int64_t>(std::floor(opt.max_prompt_fraction * static_cast<double>(n)));
  return static_cast<std::size_t>(rng.uniform_int(0, hi));
}

// Hides a random subset of a fixed stream's target tokens.
void mask_tokens(StreamExample& s, std::size_t target_begin, std::size_t n, double rate, Rng& rng) {
  const auto picks = mask::sample_token_mask(n, rate, rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (!picks[i]) continue;
    s.inputs[target_begin + 1 + i] = tokens::kMask;
    s.masked[target_begin + 1 + i] = true;
  }
}

StreamExample silent_stream(std::size_t length) {
  StreamExample s;
  s.inputs.assign(length, tokens::kPad);
  s.targets.assign(length, tokens::kPad);
  s.loss_mask.assign(length, 0.0);
  s.masked.assign(length, false);
  return s;
}

std::vector<TokenId> tail(const std::vector<TokenId>& v, std::size_t count) {
  return {v.end() - static_cast<std::ptrdiff_t>(count), v.end()};
}
std::vector<TokenId> head(const std::vector<TokenId>& v, std::size_t count) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count)};
}

}  // namespace

const char* train_task_name(TrainTask task) {
  switch (task) {
    case TrainTask::SongFromLyrics: return "song-from-lyrics";
    case TrainTask::PredeterminedAccomp: return "predetermined-accompaniment";
    case TrainTask::PredeterminedVocal: return "predetermined-vocals";
    case TrainTask::Editing: return "editing";
  }
  return "?";
}

TrainTask parse_train_task(const std::string& name) {
  for (auto t : {TrainTask::SongFromLyrics, TrainTask::PredeterminedAccomp, TrainTask::PredeterminedVocal,
                 TrainTask::Editing}) {
    if (name == train_task_name(t)) return t;
  }
  throw Error("unknown training task '" + name + "'");
}

AssemblyOptions AssemblyOptions::evaluation() {
  AssemblyOptions o;
  o.br_probability = 1.0;
  o.lyrics_dropout = 0.0;
  o.token_mask_rate = 0.0;
  o.prompt_probability = 0.0;
  return o;
}

std::vector<TokenId> pad_left(const std::vector<TokenId>& tokens, std::size_t width) {
  if (tokens.size() > width) throw Error("pad_left: sequence longer than its slot");
  std::vector<TokenId> out(width - tokens.size(), tokens::kPad);
  out.insert(out.end(), tokens.begin(), tokens.end());
  return out;
}

StreamExample layout_stream(const std::vector<TokenId>& prefix, TokenId separator, const std::vector<TokenId>& toks,
                            bool loss) {
  StreamExample s;
  s.inputs = prefix;
  if (separator != tokens::kPad) s.inputs.push_back(separator);
  const std::size_t bos = s.inputs.size();
  s.inputs.push_back(tokens::kBos);
  s.inputs.insert(s.inputs.end(), toks.begin(), toks.end());
  s.targets.assign(s.inputs.size(), tokens::kPad);
  for (std::size_t i = 0; i < toks.size(); ++i) s.targets[bos + i] = toks[i];
  s.targets[bos + toks.size()] = tokens::kEos;
  s.loss_mask.assign(s.inputs.size(), 0.0);
  if (loss) {
    for (std::size_t t = bos; t < s.inputs.size(); ++t) s.loss_mask[t] = 1.0;
  }
  s.masked.assign(s.inputs.size(), false);
  return s;
}

TrainingExample assemble_training_example(const Clip& clip, TrainTask task, Rng& rng, const AssemblyOptions& opt) {
  const std::size_t n = clip.length();
  if (n == 0 || clip.lyrics.empty()) throw Error("clip " + std::to_string(clip.id) + " is empty");
  if (clip.accomp.size() != n || clip.song.size() != n) {
    throw Error("clip " + std::to_string(clip.id) + ": track lengths differ");
  }

  TrainingExample ex;
  ex.train_task = task;
  ex.clip_id = clip.id;
  ex.target_length = n;
  ex.lyrics_dropped = rng.bernoulli(opt.lyrics_dropout);
  ex.lyrics = ex.lyrics_dropped ? std::vector<TokenId>{tokens::kNullLyric} : clip.lyrics;

  const bool with_prompts = task != TrainTask::Editing && rng.bernoulli(opt.prompt_probability);

  switch (task) {
    case TrainTask::SongFromLyrics: {
      ex.task = TaskId::LyricsToSong;
      ex.config = mask::route_task(ex.task);
      if (opt.force_bca) {
        ex.config.bca = *opt.force_bca;
      } else if (!rng.bernoulli(opt.br_probability)) {
        ex.config.bca = mask::BCAKind::None;
      }
      ex.vocal_prompt = draw_prompt(n, opt, with_prompts, rng);
      ex.accomp_prompt = draw_prompt(n, opt, with_prompts, rng);
      ex.prefix_length = std::max(ex.vocal_prompt, ex.accomp_prompt);
      ex.separator = ex.prefix_length > 0 ? tokens::kSep : tokens::kPad;
      ex.vocal = layout_stream(pad_left(head(clip.vocal, ex.vocal_prompt), ex.prefix_length), ex.separator,
                               clip.vocal, true);
      ex.accomp = layout_stream(pad_left(head(clip.accomp, ex.accomp_prompt), ex.prefix_length), ex.separator,
                                clip.accomp, true);
      break;
    }
    case TrainTask::PredeterminedAccomp:
    case TrainTask::PredeterminedVocal: {
      const bool fixed_accomp = task == TrainTask::PredeterminedAccomp;
      ex.task = fixed_accomp ? TaskId::AccompanimentToSong : TaskId::VocalsToSong;
      ex.config = mask::route_task(ex.task);
      std::size_t& prompt = fixed_accomp ? ex.vocal_prompt : ex.accomp_prompt;
      prompt = draw_prompt(n, opt, with_prompts, rng);
      ex.prefix_length = prompt;
      ex.separator = prompt > 0 ? tokens::kSep : tokens::kPad;
      const auto& free_track = fixed_accomp ? clip.vocal : clip.accomp;
      const auto& fixed_track = fixed_accomp ? clip.accomp : clip.vocal;
      StreamExample generated = layout_stream(head(free_track, prompt), ex.separator, free_track, true);
      StreamExample fixed = layout_stream(pad_left({}, prompt), ex.separator, fixed_track, true);
      mask_tokens(fixed, prompt + (prompt > 0 ? 1 : 0), n, opt.token_mask_rate, rng);
      ex.vocal = fixed_accomp ? std::move(generated) : std::move(fixed);
      ex.accomp = fixed_accomp ? std::move(fixed) : std::move(generated);
      break;
    }
    case TrainTask::Editing: {
      static constexpr TaskId kEditTasks[] = {TaskId::SongEditing, TaskId::VocalsEditingInSong,
                                              TaskId::VocalsEditing};
      ex.task = opt.force_edit_task ? *opt.force_edit_task : kEditTasks[rng.uniform_int(0, 2)];
      if (ex.task != TaskId::SongEditing && ex.task != TaskId::VocalsEditingInSong &&
          ex.task != TaskId::VocalsEditing) {
        throw Error(std::string("task ") + std::string(mask::task_name(ex.task)) + " is not an editing task");
      }
      ex.config = mask::route_task(ex.task);
      const auto lo = static_cast<std::int64_t>(std::max<double>(1.0, std::ceil(opt.edit_min_fraction * n)));
      const auto hi =
          std::max<std::int64_t>(lo, static_cast<std::int64_t>(std::floor(opt.edit_max_fraction * n)));
      ex.edit_span = static_cast<std::size_t>(rng.uniform_int(lo, hi));
      ex.edit_span = std::min(ex.edit_span, n);
      ex.prefix_length = ex.edit_span;
      ex.separator = tokens::kEdit;
      ex.vocal = layout_stream(tail(clip.vocal, ex.edit_span), tokens::kEdit, clip.vocal, true);
      if (ex.task == TaskId::SongEditing) {
        ex.accomp = layout_stream(tail(clip.accomp, ex.edit_span), tokens::kEdit, clip.accomp, true);
      } else if (ex.task == TaskId::VocalsEditingInSong) {
        ex.accomp = layout_stream(pad_left({}, ex.edit_span), tokens::kEdit, clip.accomp, true);
        mask_tokens(ex.accomp, ex.edit_span + 1, n, opt.token_mask_rate, rng);
      } else {
        ex.accomp = silent_stream(ex.vocal.inputs.size());
      }
      break;
    }
  }

  ex.target_begin = ex.prefix_length + (ex.separator != tokens::kPad ? 1 : 0);
  const std::size_t length = ex.vocal.inputs.size();
  ex.song_targets.assign(length, tokens::kPad);
  ex.song_mask.assign(length, 0.0);
  for (std::size_t i = 0; i < n; ++i) ex.song_targets[ex.target_begin + 1 + i] = clip.song[i];
  if (ex.config.song_head_enabled) {
    for (std::size_t i = 0; i < n; ++i) ex.song_mask[ex.target_begin + 1 + i] = 1.0;
  }
  return ex;
}

}  // namespace dslm::corpus
