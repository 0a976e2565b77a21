#include "dslm/corpus/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "dslm/common/error.hpp"
#include "dslm/common/key_value.hpp"

namespace dslm::corpus {
namespace {

constexpr const char* kMagic = "#dslm-corpus";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    parts.push_back(s.substr(begin, pos == std::string::npos ? std::string::npos : pos - begin));
    if (pos == std::string::npos) break;
    begin = pos + 1;
  }
  return parts;
}

std::string header_line(const CorpusFile& corpus) {
  std::ostringstream h;
  h << kMagic << " v1 variant=" << variant_name(corpus.variant) << " lyrics_vocab=" << tokens::kLyricsVocab
    << " vocal_vocab=" << tokens::kVocalVocab << " accomp_vocab=" << tokens::kAccompVocab
    << " song_vocab=" << tokens::kSongVocab << " clips=" << corpus.clips.size();
  return h.str();
}

void check_range(const std::vector<TokenId>& seq, std::size_t vocab, const char* field, std::size_t line) {
  for (TokenId t : seq) {
    if (t < tokens::kNumSpecial || t >= static_cast<TokenId>(vocab)) {
      throw Error("corpus line " + std::to_string(line) + ": " + field + " token " + std::to_string(t) +
                  " out of range");
    }
  }
}

}  // namespace

std::string format_clip(const Clip& clip) {
  std::ostringstream o;
  o << "id=" << clip.id << "\tkey=" << clip.key << "\trhythm=" << clip.rhythm << "\tlyrics=" << join_ints(clip.lyrics)
    << "\tvocal=" << join_ints(clip.vocal) << "\taccomp=" << join_ints(clip.accomp)
    << "\tsong=" << join_ints(clip.song);
  return o.str();
}

Clip parse_clip(const std::string& text, std::size_t line) {
  static const char* const kFields[] = {"id", "key", "rhythm", "lyrics", "vocal", "accomp", "song"};
  const auto where = [line] { return "corpus line " + std::to_string(line) + ": "; };
  const auto parts = split(text, '\t');
  if (parts.size() != std::size(kFields)) {
    throw Error(where() + "expected " + std::to_string(std::size(kFields)) + " fields, found " +
                std::to_string(parts.size()));
  }
  std::vector<std::string> values;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string prefix = std::string(kFields[i]) + "=";
    if (parts[i].rfind(prefix, 0) != 0) throw Error(where() + "expected field '" + kFields[i] + "'");
    values.push_back(parts[i].substr(prefix.size()));
  }
  Clip clip;
  try {
    clip.id = static_cast<std::uint64_t>(parse_int(values[0], "id"));
    clip.key = static_cast<int>(parse_int(values[1], "key"));
    clip.rhythm = static_cast<int>(parse_int(values[2], "rhythm"));
    clip.lyrics = parse_int_list(values[3], "lyrics");
    clip.vocal = parse_int_list(values[4], "vocal");
    clip.accomp = parse_int_list(values[5], "accomp");
    clip.song = parse_int_list(values[6], "song");
  } catch (const Error& e) {
    throw Error(where() + e.what());
  }
  if (clip.key < 0 || clip.key >= static_cast<int>(tokens::kNumKeys)) throw Error(where() + "key out of range");
  if (clip.rhythm < 0 || clip.rhythm >= static_cast<int>(tokens::kNumRhythms)) {
    throw Error(where() + "rhythm out of range");
  }
  if (clip.lyrics.empty() || clip.vocal.empty()) throw Error(where() + "empty clip");
  if (clip.vocal.size() != clip.accomp.size() || clip.vocal.size() != clip.song.size()) {
    throw Error(where() + "track lengths differ");
  }
  check_range(clip.lyrics, tokens::kLyricsVocab, "lyrics", line);
  check_range(clip.vocal, tokens::kVocalVocab, "vocal", line);
  check_range(clip.accomp, tokens::kAccompVocab, "accomp", line);
  check_range(clip.song, tokens::kSongVocab, "song", line);
  for (std::size_t t = 0; t < clip.song.size(); ++t) {
    if (clip.song[t] != mix(clip.vocal[t], clip.accomp[t])) {
      throw Error(where() + "song token " + std::to_string(t) + " does not mix its vocal and accompaniment tokens");
    }
  }
  return clip;
}

void write_corpus(std::ostream& out, const CorpusFile& corpus) {
  out << header_line(corpus) << '\n';
  for (const Clip& clip : corpus.clips) out << format_clip(clip) << '\n';
}

void write_corpus(const std::filesystem::path& path, const CorpusFile& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
  if (!out) throw Error("failed writing corpus file " + path.string());
}

CorpusFile read_corpus(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto words = split(line, ' ');
  if (words.size() < 2 || words[0] != kMagic || words[1] != "v1") {
    throw Error("corpus line 1: not a dslm corpus file (bad header)");
  }
  CorpusFile corpus;
  long long expected = -1;
  for (std::size_t i = 2; i < words.size(); ++i) {
    const auto eq = words[i].find('=');
    if (eq == std::string::npos) throw Error("corpus line 1: malformed header field '" + words[i] + "'");
    const std::string key = words[i].substr(0, eq);
    const std::string value = words[i].substr(eq + 1);
    const auto expect_vocab = [&](std::size_t v) {
      if (parse_int(value, key) != static_cast<long long>(v)) {
        throw Error("corpus line 1: " + key + "=" + value + " does not match this build (" + std::to_string(v) + ")");
      }
    };
    if (key == "variant") corpus.variant = parse_variant(value);
    else if (key == "lyrics_vocab") expect_vocab(tokens::kLyricsVocab);
    else if (key == "vocal_vocab") expect_vocab(tokens::kVocalVocab);
    else if (key == "accomp_vocab") expect_vocab(tokens::kAccompVocab);
    else if (key == "song_vocab") expect_vocab(tokens::kSongVocab);
    else if (key == "clips") expected = parse_int(value, key);
    else throw Error("corpus line 1: unknown header field '" + key + "'");
  }
  if (expected < 0) throw Error("corpus line 1: header lacks the clip count");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw Error("corpus line " + std::to_string(lineno) + ": empty record");
    corpus.clips.push_back(parse_clip(line, lineno));
  }
  if (static_cast<long long>(corpus.clips.size()) != expected) {
    throw Error("corpus line " + std::to_string(lineno + 1) + ": file truncated, header promises " +
                std::to_string(expected) + " clips but " + std::to_string(corpus.clips.size()) + " were read");
  }
  return corpus;
}

CorpusFile read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return read_corpus(in);
}

}  // namespace dslm::corpus
