#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctxcite/provider.hpp"
#include "ctxcite/segmentation.hpp"
#include "ctxcite/surrogate.hpp"

namespace ctxcite {

// Prompt asking the model to turn a question and a short answer into a
// self-contained statement. {query} carries the question, {context} the answer.
inline constexpr std::string_view kMergePromptTemplate =
    "Please merge the following question and answer into a single statement. "
    "For example, if the question is \"What is the capital of France?\" and "
    "the answer is \"Paris\", you should say: \"The capital of France is "
    "Paris.\nQuestion: {query}\nAnswer: {context}";

// Yes/no prompt over the pruned context. {query} carries the statement.
inline constexpr std::string_view kVerifyPromptTemplate =
    "Context: {context}\n\nCan we conclude that \"{query}\"? Please respond "
    "with just yes or no.";

// Merge used by synthetic providers, which cannot rewrite text.
std::string TemplateMerge(std::string_view question, std::string_view answer);

// Sources kept when focusing on the top-k: the top-k themselves, widened to
// whole groups (documents) when the partition is grouped.
AblationVector TopKSelection(const SourcePartition& partition,
                             std::span<const double> scores, std::size_t k);

struct VerificationResult {
  double score = 0.0;  // probability of "yes" against "no"
  std::vector<std::size_t> usedSourceIndices;
  std::string mergedStatement;
  std::string prunedContext;
};

struct VerifyOptions {
  int mergeMaxTokens = 64;
};

VerificationResult VerifyStatement(const Provider& provider,
                                   const SourcePartition& partition,
                                   std::span<const double> scores, std::size_t k,
                                   const std::string& question,
                                   const std::string& answer,
                                   const VerifyOptions& options = {});

struct PruneOptions {
  std::string templ = std::string(kDefaultTemplate);
  std::size_t k = 1;
  AttributeOptions attribute;
  int maxTokens = 256;
  std::optional<std::uint64_t> generationSeed;
};

struct PruneResult {
  ScoredContinuation originalResponse;
  AttributionResult attribution;
  ScoredContinuation newResponse;
  SourcePartition prunedPartition;
};

// Generate with the full context, attribute that response, then regenerate
// from the top-k sources only.
PruneResult PruneAndRegenerate(const Provider& provider,
                               const SourcePartition& partition,
                               const std::string& query,
                               const PruneOptions& options);

struct PoisonFlagReport {
  std::size_t k = 0;
  std::vector<std::size_t> flagged;  // rank order
  std::vector<double> scores;        // score of each flagged source
};

PoisonFlagReport DetectPoison(std::span<const double> scores, std::size_t k);

std::string ToJson(const VerificationResult& result);
std::string ToJson(const PoisonFlagReport& report);

}  // namespace ctxcite
