#include "dslm/maskengine/masks.hpp"

#include <algorithm>

#include "dslm/common/error.hpp"

namespace dslm::mask {
namespace {

struct TaskRow {
  TaskId task;
  std::string_view name;
  MaskConfig config;
};

// Rows of the task routing table: SA is listed as (vocal decoder,
// accompaniment decoder).
constexpr TaskRow kRoutes[] = {
    {TaskId::LyricsToSong, "lyrics-to-song", {SAKind::Causal, SAKind::Causal, BCAKind::BR, true, true, true}},
    {TaskId::LyricsToVocals, "lyrics-to-vocals", {SAKind::Causal, SAKind::Causal, BCAKind::BR, true, true, false}},
    {TaskId::AccompanimentToSong,
     "accompaniment-to-song",
     {SAKind::Causal, SAKind::NonCausal, BCAKind::A2V, true, true, true}},
    {TaskId::VocalsToSong, "vocals-to-song", {SAKind::NonCausal, SAKind::Causal, BCAKind::V2A, true, true, true}},
    {TaskId::MusicContinuation,
     "music-continuation",
     {SAKind::Disabled, SAKind::Causal, BCAKind::None, false, true, false}},
    {TaskId::SongEditing, "song-editing", {SAKind::Causal, SAKind::Causal, BCAKind::BR, true, true, true}},
    {TaskId::VocalsEditing, "vocals-editing", {SAKind::Causal, SAKind::Disabled, BCAKind::None, true, false, false}},
    {TaskId::VocalsEditingInSong,
     "vocals-editing-in-song",
     {SAKind::Causal, SAKind::NonCausal, BCAKind::A2V, true, true, true}},
};

const TaskRow& row_for(TaskId task) {
  for (const auto& r : kRoutes) {
    if (r.task == task) return r;
  }
  throw Error("unknown task id " + std::to_string(static_cast<int>(task)));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view task_name(TaskId task) { return row_for(task).name; }

TaskId parse_task(std::string_view name) {
  for (const auto& r : kRoutes) {
    if (r.name == name) return r.task;
  }
  std::string valid;
  for (const auto& r : kRoutes) {
    if (!valid.empty()) valid += ", ";
    valid += r.name;
  }
  throw UsageError("unknown task '" + std::string(name) + "'; valid tasks: " + valid);
}

std::string_view sa_name(SAKind kind) {
  switch (kind) {
    case SAKind::Causal: return "Causal";
    case SAKind::NonCausal: return "Non-causal";
    case SAKind::Disabled: return "None";
  }
  return "?";
}

std::string_view bca_name(BCAKind kind) {
  switch (kind) {
    case BCAKind::BR: return "BR";
    case BCAKind::A2V: return "A2V";
    case BCAKind::V2A: return "V2A";
    case BCAKind::None: return "None";
  }
  return "?";
}

SAKind parse_sa(std::string_view name) {
  const auto n = lower(name);
  if (n == "causal") return SAKind::Causal;
  if (n == "non-causal" || n == "noncausal") return SAKind::NonCausal;
  if (n == "none" || n == "disabled") return SAKind::Disabled;
  throw UsageError("unknown SA mask '" + std::string(name) + "'; valid: causal, non-causal, none");
}

BCAKind parse_bca(std::string_view name) {
  const auto n = lower(name);
  if (n == "br") return BCAKind::BR;
  if (n == "a2v") return BCAKind::A2V;
  if (n == "v2a") return BCAKind::V2A;
  if (n == "none") return BCAKind::None;
  throw UsageError("unknown BCA mask '" + std::string(name) + "'; valid: br, a2v, v2a, none");
}

MaskMatrix::MaskMatrix(std::size_t rows, std::size_t cols, bool fill)
    : rows_(rows), cols_(cols), cells_(rows * cols, fill ? 1 : 0) {}

bool MaskMatrix::none_allowed() const {
  return std::none_of(cells_.begin(), cells_.end(), [](std::uint8_t c) { return c != 0; });
}

std::string MaskMatrix::to_grid() const {
  std::string out;
  out.reserve(rows_ * (2 * cols_ + 1));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out += allowed(i, j) ? "0" : "\u00b7";
    out += '\n';
  }
  return out;
}

void MaskConfig::validate() const {
  if ((vocal_sa == SAKind::Disabled) != !vocal_enabled) {
    throw Error("mask config: vocal SA is None exactly when the vocal decoder is disabled");
  }
  if ((accomp_sa == SAKind::Disabled) != !accomp_enabled) {
    throw Error("mask config: accompaniment SA is None exactly when the accompaniment decoder is disabled");
  }
  if ((!vocal_enabled || !accomp_enabled) && bca != BCAKind::None) {
    throw Error("mask config: a disabled decoder requires BCA None");
  }
  if (song_head_enabled && !(vocal_enabled && accomp_enabled)) {
    throw Error("mask config: the song head needs both decoders");
  }
  if (!vocal_enabled && !accomp_enabled) throw Error("mask config: no decoder enabled");
}

std::string MaskConfig::describe() const {
  return "SA: " + std::string(sa_name(vocal_sa)) + ", " + std::string(sa_name(accomp_sa)) +
         "; BCA: " + std::string(bca_name(bca));
}

MaskMatrix build_sa_mask(SAKind kind, std::size_t length) {
  if (length == 0) throw Error("build_sa_mask: length must be at least 1");
  switch (kind) {
    case SAKind::Causal: {
      MaskMatrix m(length, length, false);
      for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
      }
      return m;
    }
    case SAKind::NonCausal:
      return MaskMatrix(length, length, true);
    case SAKind::Disabled:
      break;
  }
  throw Error("build_sa_mask: SA kind None has no mask; the decoder must be skipped");
}

BCAMasks build_bca_masks(BCAKind kind, std::size_t length) {
  if (length == 0) throw Error("build_bca_masks: length must be at least 1");
  BCAMasks out;
  switch (kind) {
    case BCAKind::BR: {
      MaskMatrix step(length, length, false);
      for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = 0; j <= i; ++j) step.set(i, j, true);
      }
      out.vocal_from_accomp = step;
      out.accomp_from_vocal = step;
      break;
    }
    case BCAKind::A2V:
      out.vocal_from_accomp = MaskMatrix(length, length, true);
      out.accomp_from_vocal = MaskMatrix(length, length, false);
      break;
    case BCAKind::V2A:
      out.vocal_from_accomp = MaskMatrix(length, length, false);
      out.accomp_from_vocal = MaskMatrix(length, length, true);
      break;
    case BCAKind::None:
      out.vocal_from_accomp = MaskMatrix(length, length, false);
      out.accomp_from_vocal = MaskMatrix(length, length, false);
      break;
  }
  out.vocal_bypass = out.vocal_from_accomp.none_allowed();
  out.accomp_bypass = out.accomp_from_vocal.none_allowed();
  return out;
}

MaskConfig route_task(TaskId task) { return row_for(task).config; }

std::string format_route_table() {
  std::string out = "task\tSA mask (vocal, accompaniment)\tBCA mask\tvocal decoder\taccompaniment decoder\tsong head\n";
  for (const auto& r : kRoutes) {
    const MaskConfig& c = r.config;
    out += std::string(r.name) + "\t" + std::string(sa_name(c.vocal_sa)) + ", " + std::string(sa_name(c.accomp_sa)) +
           "\t" + std::string(bca_name(c.bca)) + "\t" + (c.vocal_enabled ? "on" : "off") + "\t" +
           (c.accomp_enabled ? "on" : "off") + "\t" + (c.song_head_enabled ? "on" : "off") + "\n";
  }
  return out;
}

std::vector<bool> sample_token_mask(std::size_t length, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("sample_token_mask: rate must lie in [0, 1]");
  std::vector<bool> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = rng.bernoulli(rate);
  return out;
}

}  // namespace dslm::mask
