#include "ctxcite/segmentation.hpp"

#include <algorithm>
#include <array>

#include "ctxcite/error.hpp"

namespace ctxcite {
namespace {

constexpr std::array<std::string_view, 13> kAbbreviations = {
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Jr.", "Sr.",
    "e.g.", "i.e.", "U.S.", "No.", "St.", "vs."};

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsTerminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool IsUpperOrDigit(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Length of a closing quote/bracket ending at `end` (exclusive), or 0.
std::size_t ClosingSuffixLength(std::string_view text, std::size_t end) {
  if (end == 0) return 0;
  const char c = text[end - 1];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+201D and U+2019 in UTF-8.
  if (end >= 3 && text[end - 3] == '\xE2' && text[end - 2] == '\x80' &&
      (text[end - 1] == '\x9D' || text[end - 1] == '\x99')) {
    return 3;
  }
  return 0;
}

bool IsAbbreviation(std::string_view word) {
  while (!word.empty() && (word.front() == '(' || word.front() == '"' ||
                           word.front() == '\'')) {
    word.remove_prefix(1);
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
         kAbbreviations.end();
}

std::size_t SkipSpace(std::string_view text, std::size_t pos) {
  while (pos < text.size() && IsSpace(text[pos])) ++pos;
  return pos;
}

void RequireNonBlank(std::string_view text) {
  if (SkipSpace(text, 0) == text.size()) {
    throw Error(ErrorCode::kEmptyText, "text is empty or whitespace-only");
  }
}

// Whether the whitespace run [runStart, runEnd) ends a sentence that began
// at `sentenceStart`.
bool IsSentenceBoundary(std::string_view text, std::size_t sentenceStart,
                        std::size_t runStart, std::size_t runEnd) {
  if (std::count(text.begin() + runStart, text.begin() + runEnd, '\n') >= 2) {
    return true;
  }
  if (runEnd >= text.size() || !IsUpperOrDigit(text[runEnd])) return false;

  std::size_t end = runStart;
  while (std::size_t len = ClosingSuffixLength(text, end)) {
    if (end - len <= sentenceStart) return false;
    end -= len;
  }
  if (end <= sentenceStart || !IsTerminator(text[end - 1])) return false;

  std::size_t wordStart = end;
  while (wordStart > sentenceStart && !IsSpace(text[wordStart - 1])) {
    --wordStart;
  }
  return !IsAbbreviation(text.substr(wordStart, end - wordStart));
}

SourceSpan MakeSpan(std::string_view text, std::size_t index,
                    std::size_t start, std::size_t end, std::size_t sepEnd) {
  SourceSpan span;
  span.index = index;
  span.charStart = start;
  span.charEnd = end;
  span.text = std::string(text.substr(start, end - start));
  span.trailingSeparator = std::string(text.substr(end, sepEnd - end));
  return span;
}

}  // namespace

std::string_view GranularityName(Granularity g) {
  switch (g) {
    case Granularity::kSentence: return "sentence";
    case Granularity::kWord: return "word";
    case Granularity::kCustom: return "custom";
  }
  return "custom";
}

Granularity ParseGranularity(std::string_view name) {
  if (name == "sentence") return Granularity::kSentence;
  if (name == "word") return Granularity::kWord;
  if (name == "custom") return Granularity::kCustom;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown granularity '" + std::string(name) + "'");
}

std::vector<SourceSpan> SegmentSentences(std::string_view text) {
  RequireNonBlank(text);
  std::vector<SourceSpan> spans;
  std::size_t sentenceStart = SkipSpace(text, 0);
  std::size_t pos = sentenceStart;
  while (pos < text.size()) {
    if (!IsSpace(text[pos])) {
      ++pos;
      continue;
    }
    const std::size_t runStart = pos;
    const std::size_t runEnd = SkipSpace(text, pos);
    if (runEnd == text.size()) {
      spans.push_back(
          MakeSpan(text, spans.size(), sentenceStart, runStart, runEnd));
      return spans;
    }
    if (IsSentenceBoundary(text, sentenceStart, runStart, runEnd)) {
      spans.push_back(
          MakeSpan(text, spans.size(), sentenceStart, runStart, runEnd));
      sentenceStart = runEnd;
    }
    pos = runEnd;
  }
  spans.push_back(
      MakeSpan(text, spans.size(), sentenceStart, text.size(), text.size()));
  return spans;
}

std::vector<SourceSpan> SegmentWords(std::string_view text) {
  RequireNonBlank(text);
  std::vector<SourceSpan> spans;
  std::size_t pos = SkipSpace(text, 0);
  while (pos < text.size()) {
    std::size_t end = pos;
    while (end < text.size() && !IsSpace(text[end])) ++end;
    const std::size_t sepEnd = SkipSpace(text, end);
    spans.push_back(MakeSpan(text, spans.size(), pos, end, sepEnd));
    pos = sepEnd;
  }
  return spans;
}

SourcePartition PartitionText(std::string_view text, Granularity granularity) {
  SourcePartition partition;
  partition.contextText = std::string(text);
  partition.granularity = granularity;
  switch (granularity) {
    case Granularity::kSentence:
      partition.sources = SegmentSentences(text);
      break;
    case Granularity::kWord:
      partition.sources = SegmentWords(text);
      break;
    case Granularity::kCustom:
      throw Error(ErrorCode::kInvalidArgument,
                  "custom partitions are built explicitly, not from text");
  }
  partition.leadingSeparator =
      std::string(text.substr(0, partition.sources.front().charStart));
  return partition;
}

SourcePartition PartitionDocuments(const std::vector<Document>& docs) {
  if (docs.empty()) throw Error(ErrorCode::kEmptyText, "no documents");
  SourcePartition partition;
  partition.granularity = Granularity::kSentence;
  std::string& context = partition.contextText;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    const std::size_t bodyOffset = SkipSpace(doc.body, 0);
    if (bodyOffset == doc.body.size()) {
      throw Error(ErrorCode::kEmptyText,
                  "document '" + doc.header + "' has an empty body");
    }
    const std::string_view body = std::string_view(doc.body).substr(bodyOffset);
    std::string lead = (d == 0 ? "" : "\n\n") + doc.header + "\n";
    if (d == 0) {
      partition.leadingSeparator = lead;
    } else {
      partition.sources.back().trailingSeparator += lead;
    }
    context += lead;
    const std::size_t base = context.size();
    context += body;

    SourceGroup group;
    group.header = doc.header;
    for (SourceSpan span : SegmentSentences(body)) {
      span.index = partition.sources.size();
      span.charStart += base;
      span.charEnd += base;
      group.memberIndices.push_back(span.index);
      partition.sources.push_back(std::move(span));
    }
    partition.groups.push_back(std::move(group));
  }
  return partition;
}

std::vector<std::optional<std::size_t>> SourcePartition::GroupOfSource() const {
  std::vector<std::optional<std::size_t>> out(sources.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t member : groups[g].memberIndices) out.at(member) = g;
  }
  return out;
}

std::string SourcePartition::Rejoin() const {
  std::string out = leadingSeparator;
  for (const SourceSpan& s : sources) {
    out += s.text;
    out += s.trailingSeparator;
  }
  return out;
}

void SourcePartition::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "invalid partition: " + what);
  };
  if (sources.empty()) fail("no sources");
  std::size_t cursor = leadingSeparator.size();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const SourceSpan& s = sources[i];
    if (s.index != i) fail("index out of order");
    if (s.charStart != cursor || s.charStart >= s.charEnd) fail("bad span");
    if (s.charEnd > contextText.size() ||
        contextText.compare(s.charStart, s.charEnd - s.charStart, s.text) != 0) {
      fail("span text does not match context");
    }
    cursor = s.charEnd + s.trailingSeparator.size();
  }
  if (Rejoin() != contextText) fail("round trip does not reproduce context");
  std::vector<bool> seen(sources.size(), false);
  for (const SourceGroup& g : groups) {
    if (g.memberIndices.empty()) fail("empty group");
    for (std::size_t m : g.memberIndices) {
      if (m >= sources.size() || seen[m]) fail("overlapping group members");
      seen[m] = true;
    }
  }
}

std::vector<CharRange> TokenCharSpans(std::string_view response,
                                      const std::vector<std::string>& tokens) {
  std::vector<CharRange> spans;
  spans.reserve(tokens.size());
  std::size_t cursor = 0;
  for (const std::string& token : tokens) {
    if (response.compare(cursor, token.size(), token) != 0) {
      throw Error(ErrorCode::kTokenizationMismatch,
                  "tokens do not reproduce the response at offset " +
                      std::to_string(cursor));
    }
    spans.push_back({cursor, cursor + token.size()});
    cursor += token.size();
  }
  if (cursor != response.size()) {
    throw Error(ErrorCode::kTokenizationMismatch,
                "tokens cover " + std::to_string(cursor) + " of " +
                    std::to_string(response.size()) + " response bytes");
  }
  return spans;
}

StatementSpan SelectStatement(std::string_view response,
                              const std::vector<CharRange>& tokenization,
                              CharRange selection) {
  if (selection.start > selection.end || selection.end > response.size()) {
    throw Error(ErrorCode::kOutOfBounds,
                "selection [" + std::to_string(selection.start) + ", " +
                    std::to_string(selection.end) + ") exceeds response of " +
                    std::to_string(response.size()) + " bytes");
  }
  if (selection.start == selection.end) {
    throw Error(ErrorCode::kInvalidArgument, "statement selection is empty");
  }
  if (tokenization.empty() || tokenization.back().end != response.size()) {
    throw Error(ErrorCode::kTokenizationMismatch,
                "tokenization does not cover the response");
  }
  const std::size_t count = tokenization.size();
  std::size_t first = 0;
  while (first < count && tokenization[first].end <= selection.start) ++first;
  if (first == count) first = count - 1;
  std::size_t last = first + 1;
  while (last < count && tokenization[last].start < selection.end) ++last;

  StatementSpan out;
  out.responseText = std::string(response);
  out.tokenStart = first;
  out.tokenEnd = last;
  out.charStart = tokenization[first].start;
  out.charEnd = tokenization[last - 1].end;
  return out;
}

}  // namespace ctxcite
