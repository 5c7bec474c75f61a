#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxcite {

// One ablatable unit of the context. `text` is contextText[charStart, charEnd)
// and `trailingSeparator` is everything up to the next source (or the end).
struct SourceSpan {
  std::size_t index = 0;
  std::size_t charStart = 0;
  std::size_t charEnd = 0;
  std::string text;
  std::string trailingSeparator;
};

// A titled group of sources, e.g. the sentences of one retrieved document.
// The header line is emitted whenever any member survives ablation.
struct SourceGroup {
  std::string header;
  std::vector<std::size_t> memberIndices;
};

enum class Granularity { kSentence, kWord, kCustom };

std::string_view GranularityName(Granularity g);
Granularity ParseGranularity(std::string_view name);

// The context split into d ordered sources.
//
// Round trip: leadingSeparator + sum(text + trailingSeparator) == contextText.
// For grouped partitions the header lines live inside the separators so the
// round trip still holds.
struct SourcePartition {
  std::string contextText;
  std::string leadingSeparator;
  std::vector<SourceSpan> sources;
  Granularity granularity = Granularity::kSentence;
  std::vector<SourceGroup> groups;

  std::size_t size() const noexcept { return sources.size(); }

  // Group index for each source, or nullopt when ungrouped.
  std::vector<std::optional<std::size_t>> GroupOfSource() const;

  // Rebuilds contextText from the spans; equals contextText when valid.
  std::string Rejoin() const;

  // Throws Error(kInvalidArgument) when an invariant is broken.
  void Validate() const;
};

// A selected statement r_i..r_{j-1} of the response, snapped to tokens.
struct StatementSpan {
  std::string responseText;
  std::size_t tokenStart = 0;
  std::size_t tokenEnd = 0;
  std::size_t charStart = 0;
  std::size_t charEnd = 0;

  std::string_view Text() const {
    return std::string_view(responseText).substr(charStart, charEnd - charStart);
  }
};

struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;
};

// Rule-based sentence splitter. Boundaries are a terminator (. ! ?), optional
// closing quotes or brackets, whitespace, then an uppercase letter or digit.
// Known abbreviations never end a sentence; blank lines always do.
std::vector<SourceSpan> SegmentSentences(std::string_view text);

// Splits on maximal whitespace runs.
std::vector<SourceSpan> SegmentWords(std::string_view text);

SourcePartition PartitionText(std::string_view text, Granularity granularity);

struct Document {
  std::string header;
  std::string body;
};

// Builds a grouped partition: one group per document, its sentences as
// members. The rendered context is "header\nbody" blocks separated by a
// blank line.
SourcePartition PartitionDocuments(const std::vector<Document>& docs);

// Character spans of each token, given token strings that concatenate to the
// response. Throws kTokenizationMismatch if they do not.
std::vector<CharRange> TokenCharSpans(std::string_view response,
                                      const std::vector<std::string>& tokens);

// Smallest token-aligned span covering `selection`, snapping outward.
StatementSpan SelectStatement(std::string_view response,
                              const std::vector<CharRange>& tokenization,
                              CharRange selection);

}  // namespace ctxcite
