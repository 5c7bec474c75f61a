#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctxcite/segmentation.hpp"

namespace ctxcite {

// Inclusion mask over the d sources: 1 keeps a source, 0 removes it.
class AblationVector {
 public:
  AblationVector() = default;
  explicit AblationVector(std::size_t d, bool value = true)
      : bits_(d, value ? 1 : 0) {}
  explicit AblationVector(std::vector<std::uint8_t> bits);

  static AblationVector Ones(std::size_t d) { return AblationVector(d, true); }
  static AblationVector Zeros(std::size_t d) { return AblationVector(d, false); }

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void Set(std::size_t i, bool value) { bits_.at(i) = value ? 1 : 0; }

  std::size_t Count() const noexcept;
  bool AllOnes() const noexcept { return Count() == bits_.size(); }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::string ToString() const;

  friend bool operator==(const AblationVector&, const AblationVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Stream label used for fit-time samples. Evaluation and held-out samples use
// their own labels so the streams never coincide for the same seed.
inline constexpr std::string_view kFitSampler = "uniform-bernoulli/fit";
inline constexpr std::string_view kEvalSampler = "uniform-bernoulli/eval";
inline constexpr std::string_view kHoldoutSampler = "uniform-bernoulli/holdout";

struct AblationSample {
  std::vector<AblationVector> vectors;
  std::uint64_t seed = 0;
  std::string samplerId;
};

// Row `row` of a sample: each bit an independent fair coin drawn from the
// SplitMix64 counter stream keyed by (seed, samplerId).
AblationVector SampleAblationRow(std::size_t d, std::uint64_t seed,
                                 std::string_view samplerId, std::size_t row);

AblationSample SampleAblations(std::size_t d, std::size_t n, std::uint64_t seed,
                               std::string_view samplerId = kFitSampler);

// Included sources in order, joined by one space, with each group's header
// emitted before its first surviving member. The all-ones vector returns the
// original context unchanged.
std::string Ablate(const SourcePartition& partition, const AblationVector& v);

// Partition of the ablated context. Its contextText equals Ablate(partition, v)
// and it keeps the surviving sources, groups and headers.
SourcePartition SubPartition(const SourcePartition& partition,
                             const AblationVector& v);

// Literal substitution of {context} and {query}; each must appear exactly once.
std::string RenderPrompt(std::string_view templ, std::string_view context,
                         std::string_view query);

void ValidateTemplate(std::string_view templ);

inline constexpr std::string_view kDefaultTemplate =
    "Context: {context}\n\nQuery: {query}";
inline constexpr std::string_view kSummarizeQuery =
    "Please summarize the article in up to three sentences.";

}  // namespace ctxcite
