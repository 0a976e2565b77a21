#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dslm/corpus/clip.hpp"

namespace dslm::corpus {

struct CorpusFile {
  Variant variant = Variant::Default;
  std::vector<Clip> clips;
};

// Text format: a header line naming the vocabularies and record count, then
// one tab-separated record per clip.
void write_corpus(std::ostream& out, const CorpusFile& corpus);
void write_corpus(const std::filesystem::path& path, const CorpusFile& corpus);
// Rejects malformed input with the offending line number.
CorpusFile read_corpus(std::istream& in);
CorpusFile read_corpus(const std::filesystem::path& path);

std::string format_clip(const Clip& clip);
// `line` is only used in error messages.
Clip parse_clip(const std::string& text, std::size_t line);

}  // namespace dslm::corpus
