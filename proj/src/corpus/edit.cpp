#include "dslm/corpus/edit.hpp"

#include <algorithm>

#include "dslm/common/error.hpp"

namespace dslm::corpus {
namespace {

Variant variant_of(const Clip& clip) {
  // The control figure never depends on the key, so a clip that renders
  // identically under Default is a Default clip.
  const ClipLatent latent = latent_of(clip);
  return render_clip(latent, clip.id, Variant::Default) == clip ? Variant::Default : Variant::Control;
}

std::size_t tokens_in(const ClipLatent& latent, std::size_t begin, std::size_t end) {
  std::size_t n = 0;
  for (std::size_t w = begin; w < end; ++w) n += static_cast<std::size_t>(latent.syllables[w]);
  return n;
}

int draw_syllables(Rng& rng) { return static_cast<int>(rng.uniform_int(kMinSyllables, kMaxSyllables)); }

}  // namespace

const char* edit_type_name(EditType type) {
  switch (type) {
    case EditType::Insertion: return "insertion";
    case EditType::Deletion: return "deletion";
    case EditType::Substitution: return "substitution";
  }
  return "?";
}

EditExample apply_edit(const Clip& clip, EditType type, std::size_t start, std::size_t words, Rng& rng) {
  const Variant variant = variant_of(clip);
  const ClipLatent before = latent_of(clip);
  const std::size_t n = before.symbols.size();
  if (words == 0) throw Error("apply_edit: empty edit span");
  if (type == EditType::Deletion) {
    if (n < 2) throw Error("apply_edit: cannot delete from a one-word clip");
    words = std::min(words, n - 1);
  } else {
    words = std::min(words, n);
  }
  const std::size_t limit = type == EditType::Insertion ? n : n - words;
  if (start > limit) {
    throw Error("apply_edit: span start " + std::to_string(start) + " out of range (max " + std::to_string(limit) +
                ")");
  }

  EditExample ex;
  ex.original = clip;
  ex.type = type;
  ex.word_start = start;
  ex.words_removed = type == EditType::Insertion ? 0 : words;
  ex.words_inserted = type == EditType::Deletion ? 0 : words;

  ClipLatent after;
  after.key = before.key;
  after.rhythm = before.rhythm;
  for (std::size_t w = 0; w < start; ++w) {
    after.symbols.push_back(before.symbols[w]);
    after.syllables.push_back(before.syllables[w]);
  }
  for (std::size_t i = 0; i < ex.words_inserted; ++i) {
    int sym = static_cast<int>(rng.uniform_int(0, tokens::kLyricSymbols - 1));
    if (type == EditType::Substitution) {
      // Shift past the old symbol so the word really changes.
      const int old = before.symbols[start + i];
      sym = static_cast<int>(rng.uniform_int(0, tokens::kLyricSymbols - 2));
      if (sym >= old) ++sym;
    }
    after.symbols.push_back(sym);
    after.syllables.push_back(draw_syllables(rng));
  }
  for (std::size_t w = start + ex.words_removed; w < n; ++w) {
    after.symbols.push_back(before.symbols[w]);
    after.syllables.push_back(before.syllables[w]);
  }

  ex.edited = render_clip(after, clip.id, variant);
  ex.head_tokens = tokens_in(before, 0, start);
  ex.tail_tokens = tokens_in(before, start + ex.words_removed, n);
  return ex;
}

EditExample make_edit_example(const Clip& clip, Rng& rng) {
  const std::size_t n = clip.lyrics.size();
  auto type = static_cast<EditType>(rng.uniform_int(0, 2));
  if (type == EditType::Deletion && n < 2) type = EditType::Substitution;
  std::size_t words = static_cast<std::size_t>(rng.uniform_int(1, kMaxEditWords));
  words = std::min(words, type == EditType::Deletion ? n - 1 : n);
  const std::size_t limit = type == EditType::Insertion ? n : n - words;
  const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(limit)));
  return apply_edit(clip, type, start, words, rng);
}

EditExample edit_lyrics(const Clip& clip, const std::vector<TokenId>& edited_lyrics, Rng& rng,
                        std::optional<WordSpan> span) {
  if (edited_lyrics.empty()) throw Error("edited lyrics are empty");
  for (TokenId t : edited_lyrics) {
    if (t < tokens::kNumSpecial || t >= static_cast<TokenId>(tokens::kLyricsVocab)) {
      throw Error("edited lyrics contain token " + std::to_string(t) + ", which is not a lyric word");
    }
  }
  const Variant variant = variant_of(clip);
  const ClipLatent before = latent_of(clip);
  const std::size_t n = before.symbols.size();
  const std::size_t m = edited_lyrics.size();

  std::size_t head = 0;
  std::size_t tail = 0;
  if (span) {
    if (span->length > kMaxEditWords) {
      throw Error("edit span of " + std::to_string(span->length) + " words exceeds the limit of " +
                  std::to_string(kMaxEditWords));
    }
    if (span->start + span->length > n) {
      throw Error("edit span " + std::to_string(span->start) + ":" + std::to_string(span->length) +
                  " lies outside the " + std::to_string(n) + "-word lyrics");
    }
    head = span->start;
    tail = n - span->start - span->length;
    if (head + tail > m) throw Error("edited lyrics are shorter than the words kept around the span");
    for (std::size_t w = 0; w < head; ++w) {
      if (clip.lyrics[w] != edited_lyrics[w]) throw Error("edited lyrics change word " + std::to_string(w) +
                                                          ", which is before the span");
    }
    for (std::size_t w = 0; w < tail; ++w) {
      if (clip.lyrics[n - 1 - w] != edited_lyrics[m - 1 - w]) {
        throw Error("edited lyrics change word " + std::to_string(n - 1 - w) + ", which is after the span");
      }
    }
  } else {
    while (head < n && head < m && clip.lyrics[head] == edited_lyrics[head]) ++head;
    while (tail < n - head && tail < m - head && clip.lyrics[n - 1 - tail] == edited_lyrics[m - 1 - tail]) ++tail;
  }

  EditExample ex;
  ex.original = clip;
  ex.word_start = head;
  ex.words_removed = n - head - tail;
  ex.words_inserted = m - head - tail;
  ex.type = ex.words_removed == 0   ? EditType::Insertion
            : ex.words_inserted == 0 ? EditType::Deletion
                                     : EditType::Substitution;
  if (ex.words_removed > kMaxEditWords || ex.words_inserted > kMaxEditWords) {
    throw Error("edit span covers more than " + std::to_string(kMaxEditWords) + " words");
  }

  ClipLatent after;
  after.key = before.key;
  after.rhythm = before.rhythm;
  for (std::size_t w = 0; w < m; ++w) {
    after.symbols.push_back(edited_lyrics[w] - tokens::kNumSpecial);
    if (w < head) {
      after.syllables.push_back(before.syllables[w]);
    } else if (w >= m - tail) {
      after.syllables.push_back(before.syllables[n - (m - w)]);
    } else {
      after.syllables.push_back(draw_syllables(rng));
    }
  }
  ex.edited = render_clip(after, clip.id, variant);
  ex.head_tokens = tokens_in(before, 0, head);
  ex.tail_tokens = tokens_in(before, n - tail, n);
  return ex;
}

}  // namespace dslm::corpus
