#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxcite/ablation.hpp"

namespace ctxcite {

struct Prompt {
  std::string contextText;
  std::string queryText;
  std::string templ = std::string(kDefaultTemplate);

  std::string Render() const {
    return RenderPrompt(templ, contextText, queryText);
  }
};

// Tokens with their natural-log probabilities.
struct ScoredContinuation {
  std::vector<std::string> tokens;
  std::vector<double> tokenLogProbs;
  double totalLogProb = 0.0;

  std::string Text() const;
};

// The language model as seen by the engine: it can sample a response and
// score a forced continuation by teacher forcing. Implementations must be
// safe to call concurrently.
class Provider {
 public:
  virtual ~Provider() = default;

  // Stable identifier; part of every cache key.
  virtual std::string Id() const = 0;

  // Synthetic providers have no generative ability beyond canned answers.
  virtual bool IsSynthetic() const { return false; }

  // Greedy decoding when `seed` is empty.
  virtual ScoredContinuation Generate(const Prompt& prompt, int maxTokens,
                                      std::optional<std::uint64_t> seed) const = 0;

  // log p(continuation | prompt, prefix), one entry per continuation token.
  virtual ScoredContinuation ScoreForced(
      const Prompt& prompt, std::span<const std::string> prefix,
      std::span<const std::string> continuation) const = 0;

  // Splits text into the model's tokens; concatenating them gives `text`.
  virtual std::vector<std::string> Tokenize(std::string_view text) const = 0;
};

// Spreads `total` evenly across `count` tokens.
ScoredContinuation MakeUniformScore(std::vector<std::string> tokens,
                                    double total);

// log(sigmoid(z)) without overflow.
double LogSigmoid(double z) noexcept;

}  // namespace ctxcite
