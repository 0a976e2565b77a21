#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "dslm/common/rng.hpp"
#include "dslm/corpus/clip.hpp"

namespace dslm::corpus {

enum class EditType { Insertion, Deletion, Substitution };

const char* edit_type_name(EditType type);

inline constexpr std::size_t kMaxEditWords = 15;

// A lyric edit applied to a clip and re-rendered through the generator. Token
// positions before `head_tokens` are identical in both clips, and so are the
// `tail_tokens` positions at the end of each.
struct EditExample {
  Clip original;
  Clip edited;
  EditType type = EditType::Substitution;
  std::size_t word_start = 0;
  std::size_t words_removed = 0;
  std::size_t words_inserted = 0;
  std::size_t head_tokens = 0;
  std::size_t tail_tokens = 0;

  std::size_t original_region_end() const { return original.length() - tail_tokens; }
  std::size_t edited_region_end() const { return edited.length() - tail_tokens; }
};

// `words` is clamped so the result keeps at least one word; `start` must leave
// room for the span. New words draw their symbols and syllable counts from
// `rng`; substituted words always change symbol.
EditExample apply_edit(const Clip& clip, EditType type, std::size_t start, std::size_t words, Rng& rng);

// Uniform type, span length in [1, 15] clamped to the lyric length, uniform
// start.
EditExample make_edit_example(const Clip& clip, Rng& rng);

struct WordSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};

// Replaces the clip's lyrics by `edited_lyrics` and re-renders, reusing the
// syllable counts of words outside the edited span. Without `span` the span is
// the region where the two lyric sequences differ; with it, the words outside
// the span must be unchanged. Spans over kMaxEditWords words are rejected.
EditExample edit_lyrics(const Clip& clip, const std::vector<TokenId>& edited_lyrics, Rng& rng,
                        std::optional<WordSpan> span = std::nullopt);

}  // namespace dslm::corpus
