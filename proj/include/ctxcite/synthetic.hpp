#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ctxcite/provider.hpp"

namespace ctxcite {

// Base for deterministic test providers. The rendered prompt is reduced to an
// ablation vector by checking which source texts occur in it verbatim, so
// oracles exercise the real string pipeline end to end. Source texts should
// not be substrings of one another.
class SyntheticOracle : public Provider {
 public:
  SyntheticOracle(std::vector<std::string> sourceTexts, std::string id);

  std::string Id() const override { return id_; }
  bool IsSynthetic() const override { return true; }

  ScoredContinuation Generate(const Prompt& prompt, int maxTokens,
                              std::optional<std::uint64_t> seed) const override;
  ScoredContinuation ScoreForced(
      const Prompt& prompt, std::span<const std::string> prefix,
      std::span<const std::string> continuation) const override;

  // Whitespace-prefixed words; trailing whitespace forms a final token.
  std::vector<std::string> Tokenize(std::string_view text) const override;

  AblationVector InclusionOf(std::string_view renderedPrompt) const;
  std::size_t dimension() const noexcept { return sources_.size(); }
  const std::vector<std::string>& sourceTexts() const noexcept {
    return sources_;
  }

 protected:
  // log p of `continuation` given the sources in `v`.
  virtual double ContinuationLogProb(const AblationVector& v,
                                     std::string_view renderedPrompt,
                                     std::string_view continuation) const = 0;
  virtual std::string Respond(const AblationVector& v,
                              std::string_view renderedPrompt) const = 0;

 private:
  std::vector<std::string> sources_;
  std::string id_;
};

// Logit-probability exactly linear in the inclusion vector:
// logit p(R | v) = intercept + weights . v
class PlantedLinearOracle : public SyntheticOracle {
 public:
  PlantedLinearOracle(std::vector<std::string> sourceTexts,
                      std::vector<double> weights, double intercept,
                      std::string response = kCannedResponse);

  // k non-zero weights with magnitude in [lo, hi] and random sign. The
  // intercept is -sum(w)/2 so logits stay centred near zero.
  static PlantedLinearOracle Random(std::vector<std::string> sourceTexts,
                                    std::size_t k, std::uint64_t seed,
                                    double lo = 2.0, double hi = 5.0);

  double Logit(const AblationVector& v) const;
  const std::vector<double>& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }
  const std::string& response() const noexcept { return response_; }

  static constexpr const char* kCannedResponse =
      "The marked facts determine this planted answer.";

 protected:
  double ContinuationLogProb(const AblationVector& v, std::string_view,
                             std::string_view) const override;
  std::string Respond(const AblationVector&, std::string_view) const override {
    return response_;
  }

 private:
  std::vector<double> weights_;
  double intercept_;
  std::string response_;
};

struct PairTerm {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

// Linear oracle plus pairwise interactions:
// logit p = intercept + w . v + sum w_ab v_a v_b
class InteractionOracle : public SyntheticOracle {
 public:
  InteractionOracle(std::vector<std::string> sourceTexts,
                    std::vector<double> weights, std::vector<PairTerm> pairs,
                    double intercept);

  // k main effects as in PlantedLinearOracle::Random plus `pairCount`
  // interactions of magnitude in [pairLo, pairHi] between random sources.
  static InteractionOracle Random(std::vector<std::string> sourceTexts,
                                  std::size_t k, std::size_t pairCount,
                                  std::uint64_t seed, double pairLo = 0.5,
                                  double pairHi = 1.5);

  double Logit(const AblationVector& v) const;
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<PairTerm>& pairs() const noexcept { return pairs_; }
  double intercept() const noexcept { return intercept_; }

 protected:
  double ContinuationLogProb(const AblationVector& v, std::string_view,
                             std::string_view) const override;
  std::string Respond(const AblationVector&, std::string_view) const override {
    return PlantedLinearOracle::kCannedResponse;
  }

 private:
  std::vector<double> weights_;
  std::vector<PairTerm> pairs_;
  double intercept_;
};

// One poisoned source flips the response. The flipped response's logit has a
// large weight on the poison, small dense weights elsewhere, and a
// deterministic pseudo-noise term per ablation pattern.
class PoisonOracle : public SyntheticOracle {
 public:
  static PoisonOracle Random(std::vector<std::string> sourceTexts,
                             std::size_t poisonIndex, std::uint64_t seed);

  double FlipLogit(const AblationVector& v) const;
  std::size_t poisonIndex() const noexcept { return poison_; }

  static constexpr const char* kCleanResponse =
      "The article describes the events in the context.";
  static constexpr const char* kFlippedResponse =
      "I cannot help with summarizing this article.";

 protected:
  double ContinuationLogProb(const AblationVector& v, std::string_view,
                             std::string_view continuation) const override;
  std::string Respond(const AblationVector& v, std::string_view) const override;

 private:
  PoisonOracle(std::vector<std::string> sourceTexts, std::size_t poisonIndex,
               std::vector<double> weights, double intercept,
               std::uint64_t noiseKey);

  std::size_t poison_;
  std::vector<double> weights_;
  double intercept_;
  std::uint64_t noiseKey_;
};

// Question answering with distractors. One relevant source supports the
// target answer; the remaining sources are distractors that push the model
// towards a wrong answer and suppress the target. The relevant source also
// primes the wrong answer, since both concern the same entity. Answers follow
// a softmax over {target, wrong, abstain}; generation is greedy.
class DistractorQaOracle : public SyntheticOracle {
 public:
  static DistractorQaOracle Random(std::vector<std::string> sourceTexts,
                                   std::size_t relevantIndex,
                                   std::uint64_t seed);

  std::pair<double, double> AnswerLogits(const AblationVector& v) const;
  std::size_t relevantIndex() const noexcept { return relevant_; }

  static constexpr const char* kTargetAnswer = "The treaty was signed in Paris.";
  static constexpr const char* kWrongAnswer = "The treaty was signed in Lyon.";
  static constexpr const char* kAbstain = "The context does not say.";

 protected:
  double ContinuationLogProb(const AblationVector& v, std::string_view,
                             std::string_view continuation) const override;
  std::string Respond(const AblationVector& v, std::string_view) const override;

 private:
  DistractorQaOracle(std::vector<std::string> sourceTexts,
                     std::size_t relevantIndex, std::vector<double> suppress,
                     std::vector<double> prime, double targetWeight,
                     double wrongWeight);

  std::size_t relevant_;
  std::vector<double> suppress_;
  std::vector<double> prime_;
  double targetWeight_;
  double wrongWeight_;
};

// Test double driven by a callback; `respond` supplies generations.
class FunctionOracle : public SyntheticOracle {
 public:
  using LogProbFn = std::function<double(
      const AblationVector&, std::string_view prompt, std::string_view continuation)>;
  using RespondFn =
      std::function<std::string(const AblationVector&, std::string_view prompt)>;

  FunctionOracle(std::vector<std::string> sourceTexts, LogProbFn logProb,
                 RespondFn respond, std::string id = "function");

 protected:
  double ContinuationLogProb(const AblationVector& v, std::string_view prompt,
                             std::string_view continuation) const override {
    return logProb_(v, prompt, continuation);
  }
  std::string Respond(const AblationVector& v,
                      std::string_view prompt) const override {
    return respond_(v, prompt);
  }

 private:
  LogProbFn logProb_;
  RespondFn respond_;
};

// Distinct, mutually non-overlapping sentences usable as synthetic sources.
std::vector<std::string> SyntheticSourceTexts(std::size_t d);

// Context made of SyntheticSourceTexts(d) separated by single spaces.
std::string SyntheticContext(std::size_t d);

}  // namespace ctxcite
