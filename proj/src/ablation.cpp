#include "ctxcite/ablation.hpp"

#include <algorithm>

#include "ctxcite/error.hpp"
#include "ctxcite/rng.hpp"

namespace ctxcite {
namespace {

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kQuerySlot = "{query}";

std::size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void CheckDimension(const SourcePartition& partition, const AblationVector& v) {
  if (v.size() != partition.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ablation vector has " + std::to_string(v.size()) +
                    " entries but the partition has " +
                    std::to_string(partition.size()) + " sources");
  }
}

}  // namespace

AblationVector::AblationVector(std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t AblationVector::Count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::string AblationVector::ToString() const {
  std::string out;
  out.reserve(bits_.size());
  for (auto b : bits_) out.push_back(b ? '1' : '0');
  return out;
}

AblationVector SampleAblationRow(std::size_t d, std::uint64_t seed,
                                 std::string_view samplerId, std::size_t row) {
  const CounterRng rng(StreamKey(seed, samplerId));
  const std::size_t words = (d + 63) / 64;
  std::vector<std::uint8_t> bits(d);
  for (std::size_t w = 0; w < words; ++w) {
    const std::uint64_t word = rng.At(row * words + w);
    for (std::size_t b = 0; b < 64 && w * 64 + b < d; ++b) {
      bits[w * 64 + b] = static_cast<std::uint8_t>((word >> b) & 1U);
    }
  }
  return AblationVector(std::move(bits));
}

AblationSample SampleAblations(std::size_t d, std::size_t n, std::uint64_t seed,
                               std::string_view samplerId) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "d must be >= 1");
  AblationSample sample;
  sample.seed = seed;
  sample.samplerId = std::string(samplerId);
  sample.vectors.reserve(n);
  for (std::size_t row = 0; row < n; ++row) {
    sample.vectors.push_back(SampleAblationRow(d, seed, samplerId, row));
  }
  return sample;
}

std::string Ablate(const SourcePartition& partition, const AblationVector& v) {
  CheckDimension(partition, v);
  if (v.AllOnes()) return partition.contextText;

  const auto groupOf = partition.GroupOfSource();
  std::vector<bool> headerDone(partition.groups.size(), false);
  std::string out;
  auto append = [&out](std::string_view piece) {
    if (!out.empty()) out.push_back(' ');
    out += piece;
  };
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (!v[i]) continue;
    if (const auto g = groupOf[i]; g && !headerDone[*g]) {
      headerDone[*g] = true;
      append(partition.groups[*g].header);
    }
    append(partition.sources[i].text);
  }
  return out;
}

SourcePartition SubPartition(const SourcePartition& partition,
                             const AblationVector& v) {
  CheckDimension(partition, v);
  if (v.AllOnes()) return partition;
  if (v.Count() == 0) {
    throw Error(ErrorCode::kEmptySelection, "ablation keeps no sources");
  }

  const auto groupOf = partition.GroupOfSource();
  std::vector<std::optional<std::size_t>> newGroup(partition.groups.size());
  SourcePartition out;
  out.granularity = partition.granularity;
  std::string pending;  // separator text owed before the next source
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (!v[i]) continue;
    if (const auto g = groupOf[i]; g) {
      if (!newGroup[*g]) {
        newGroup[*g] = out.groups.size();
        out.groups.push_back({partition.groups[*g].header, {}});
        pending += (out.contextText.empty() && pending.empty() ? "" : " ");
        pending += partition.groups[*g].header;
      }
      out.groups[*newGroup[*g]].memberIndices.push_back(out.sources.size());
    }
    if (!out.contextText.empty() || !pending.empty()) pending += ' ';
    if (out.sources.empty()) {
      out.leadingSeparator = pending;
    } else {
      out.sources.back().trailingSeparator = pending;
    }
    out.contextText += pending;
    pending.clear();

    SourceSpan span = partition.sources[i];
    span.index = out.sources.size();
    span.charStart = out.contextText.size();
    span.charEnd = span.charStart + span.text.size();
    span.trailingSeparator.clear();
    out.contextText += span.text;
    out.sources.push_back(std::move(span));
  }
  return out;
}

void ValidateTemplate(std::string_view templ) {
  const std::size_t contexts = CountOccurrences(templ, kContextSlot);
  const std::size_t queries = CountOccurrences(templ, kQuerySlot);
  if (contexts != 1 || queries != 1) {
    throw Error(ErrorCode::kBadTemplate,
                "template must contain {context} and {query} exactly once "
                "(found " +
                    std::to_string(contexts) + " and " +
                    std::to_string(queries) + ")");
  }
}

std::string RenderPrompt(std::string_view templ, std::string_view context,
                         std::string_view query) {
  ValidateTemplate(templ);
  const std::size_t c = templ.find(kContextSlot);
  const std::size_t q = templ.find(kQuerySlot);
  // Substitute by position so placeholder-like text in the inputs is inert.
  std::string out;
  out.reserve(templ.size() + context.size() + query.size());
  if (c < q) {
    out += templ.substr(0, c);
    out += context;
    out += templ.substr(c + kContextSlot.size(), q - c - kContextSlot.size());
    out += query;
    out += templ.substr(q + kQuerySlot.size());
  } else {
    out += templ.substr(0, q);
    out += query;
    out += templ.substr(q + kQuerySlot.size(), c - q - kQuerySlot.size());
    out += context;
    out += templ.substr(c + kContextSlot.size());
  }
  return out;
}

}  // namespace ctxcite
