#include "ctxcite/applications.hpp"

#include <cctype>
#include <cmath>
#include <json.hpp>

#include "ctxcite/error.hpp"

namespace ctxcite {
namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string TemplateMerge(std::string_view question, std::string_view answer) {
  std::string out = "The answer to ";
  out += question;
  out += " is ";
  while (!answer.empty() &&
         (answer.back() == '.' || std::isspace(static_cast<unsigned char>(answer.back())))) {
    answer.remove_suffix(1);
  }
  out += answer;
  out += ".";
  return out;
}

AblationVector TopKSelection(const SourcePartition& partition,
                             std::span<const double> scores, std::size_t k) {
  if (scores.size() != partition.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and sources differ in length");
  }
  if (k == 0) throw Error(ErrorCode::kEmptySelection, "k must be ≥ 1");
  AblationVector keep = AblationVector::Zeros(partition.size());
  const auto groupOf = partition.GroupOfSource();
  for (std::size_t j : TopK(scores, k)) {
    if (const auto g = groupOf[j]; g) {
      for (std::size_t member : partition.groups[*g].memberIndices) keep.Set(member, true);
    } else {
      keep.Set(j, true);
    }
  }
  return keep;
}

VerificationResult VerifyStatement(const Provider& provider,
                                   const SourcePartition& partition,
                                   std::span<const double> scores, std::size_t k,
                                   const std::string& question,
                                   const std::string& answer,
                                   const VerifyOptions& options) {
  if (k == 0) throw Error(ErrorCode::kEmptySelection, "k must be ≥ 1");
  VerificationResult result;
  if (provider.IsSynthetic()) {
    result.mergedStatement = TemplateMerge(question, answer);
  } else {
    const Prompt merge{answer, question, std::string(kMergePromptTemplate)};
    result.mergedStatement =
        Trim(provider.Generate(merge, options.mergeMaxTokens, std::nullopt).Text());
  }

  const AblationVector keep = TopKSelection(partition, scores, k);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) result.usedSourceIndices.push_back(i);
  }
  result.prunedContext = Ablate(partition, keep);

  const Prompt ask{result.prunedContext, result.mergedStatement,
                   std::string(kVerifyPromptTemplate)};
  const std::vector<std::string> yes = {"yes"};
  const std::vector<std::string> no = {"no"};
  const double logYes = provider.ScoreForced(ask, {}, yes).totalLogProb;
  const double logNo = provider.ScoreForced(ask, {}, no).totalLogProb;
  // exp(a) / (exp(a) + exp(b)) == sigmoid(a - b)
  result.score = 1.0 / (1.0 + std::exp(logNo - logYes));
  return result;
}

PruneResult PruneAndRegenerate(const Provider& provider,
                               const SourcePartition& partition,
                               const std::string& query,
                               const PruneOptions& options) {
  if (options.k == 0) throw Error(ErrorCode::kEmptySelection, "k must be ≥ 1");
  PruneResult out;
  const Prompt full{partition.contextText, query, options.templ};
  out.originalResponse =
      provider.Generate(full, options.maxTokens, options.generationSeed);

  const AttributionTask task = MakeWholeResponseTask(
      provider, partition, options.templ, query, out.originalResponse.tokens);
  out.attribution = Attribute(task, options.attribute);

  const AblationVector keep =
      TopKSelection(partition, out.attribution.weights, options.k);
  out.prunedPartition = SubPartition(partition, keep);
  const Prompt pruned{out.prunedPartition.contextText, query, options.templ};
  out.newResponse =
      provider.Generate(pruned, options.maxTokens, options.generationSeed);
  return out;
}

PoisonFlagReport DetectPoison(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kEmptySelection, "k must be ≥ 1");
  PoisonFlagReport report;
  report.k = k;
  report.flagged = TopK(scores, k);
  for (std::size_t j : report.flagged) report.scores.push_back(scores[j]);
  return report;
}

std::string ToJson(const VerificationResult& result) {
  nlohmann::ordered_json j;
  j["score"] = result.score;
  j["usedSourceIndices"] = result.usedSourceIndices;
  j["mergedStatement"] = result.mergedStatement;
  j["prunedContext"] = result.prunedContext;
  return j.dump();
}

std::string ToJson(const PoisonFlagReport& report) {
  nlohmann::ordered_json j;
  j["k"] = report.k;
  nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < report.flagged.size(); ++r) {
    flagged.push_back({{"rank", r + 1},
                       {"index", report.flagged[r]},
                       {"score", report.scores[r]}});
  }
  j["flagged"] = flagged;
  return j.dump();
}

}  // namespace ctxcite
