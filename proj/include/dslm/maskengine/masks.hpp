#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dslm/common/rng.hpp"
#include "dslm/numcore/tensor.hpp"

namespace dslm::mask {

enum class SAKind { Causal, NonCausal, Disabled };
enum class BCAKind { BR, A2V, V2A, None };

enum class TaskId {
  LyricsToSong,
  LyricsToVocals,
  AccompanimentToSong,
  VocalsToSong,
  MusicContinuation,
  SongEditing,
  VocalsEditing,
  VocalsEditingInSong,
};

inline constexpr std::array<TaskId, 8> kAllTasks = {
    TaskId::LyricsToSong,      TaskId::LyricsToVocals, TaskId::AccompanimentToSong, TaskId::VocalsToSong,
    TaskId::MusicContinuation, TaskId::SongEditing,    TaskId::VocalsEditing,       TaskId::VocalsEditingInSong,
};

std::string_view task_name(TaskId task);  // e.g. "lyrics-to-song"
TaskId parse_task(std::string_view name);  // throws listing the valid names
std::string_view sa_name(SAKind kind);     // "Causal", "Non-causal", "None"
std::string_view bca_name(BCAKind kind);   // "BR", "A2V", "V2A", "None"
SAKind parse_sa(std::string_view name);    // causal | non-causal | none
BCAKind parse_bca(std::string_view name);  // br | a2v | v2a | none

// Query i may attend key j iff allowed(i, j).
class MaskMatrix {
 public:
  MaskMatrix() = default;
  MaskMatrix(std::size_t rows, std::size_t cols, bool fill);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool allowed(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool allow) { cells_[i * cols_ + j] = allow ? 1 : 0; }
  bool none_allowed() const;

  // One line per query row, '0' = attend, '·' = blocked.
  std::string to_grid() const;

  // Additive form: 0 where allowed, -inf where blocked. Rows [row_begin,
  // row_end) and the first `key_count` columns.
  template <typename Real>
  num::Tensor<Real> additive(std::size_t row_begin, std::size_t row_end, std::size_t key_count) const {
    num::Tensor<Real> out(num::Shape{row_end - row_begin, key_count});
    for (std::size_t i = row_begin; i < row_end; ++i) {
      for (std::size_t j = 0; j < key_count; ++j) {
        out.at(i - row_begin, j) = allowed(i, j) ? Real(0) : -std::numeric_limits<Real>::infinity();
      }
    }
    return out;
  }
  template <typename Real>
  num::Tensor<Real> additive() const {
    return additive<Real>(0, rows_, cols_);
  }

  bool operator==(const MaskMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct MaskConfig {
  SAKind vocal_sa = SAKind::Causal;
  SAKind accomp_sa = SAKind::Causal;
  BCAKind bca = BCAKind::BR;
  bool vocal_enabled = true;
  bool accomp_enabled = true;
  bool song_head_enabled = true;

  bool operator==(const MaskConfig&) const = default;
  // Throws when a Disabled SA slot or a None-less disabled decoder makes the
  // bundle inconsistent.
  void validate() const;
  std::string describe() const;  // "SA: Causal, Causal; BCA: BR"
};

MaskMatrix build_sa_mask(SAKind kind, std::size_t length);

struct BCAMasks {
  MaskMatrix vocal_from_accomp;  // vocal queries, accompaniment keys
  MaskMatrix accomp_from_vocal;  // accompaniment queries, vocal keys
  bool vocal_bypass = false;     // vocal BCA sublayer is skipped
  bool accomp_bypass = false;
};

BCAMasks build_bca_masks(BCAKind kind, std::size_t length);

MaskConfig route_task(TaskId task);

// Table of every task's routed configuration, one line per task.
std::string format_route_table();

// Each position independently true with probability `rate`.
std::vector<bool> sample_token_mask(std::size_t length, double rate, Rng& rng);

enum class Stream { Vocal, Accomp };

// Which (stream, position) pairs can influence which after `layers` stacked
// DSLM blocks under `config`. Decoders that are disabled are isolated.
class Reachability {
 public:
  Reachability(std::size_t length, std::vector<std::uint8_t> reach) : length_(length), reach_(std::move(reach)) {}
  std::size_t length() const noexcept { return length_; }
  bool reachable(Stream from, std::size_t from_pos, Stream to, std::size_t to_pos) const;

 private:
  std::size_t length_;
  std::vector<std::uint8_t> reach_;  // [dst][src] over 2 * length nodes
};

Reachability flow_reachability(const MaskConfig& config, std::size_t length, std::size_t layers);

}  // namespace dslm::mask
