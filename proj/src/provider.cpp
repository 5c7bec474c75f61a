#include "ctxcite/provider.hpp"

#include <cmath>

namespace ctxcite {

std::string ScoredContinuation::Text() const {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

ScoredContinuation MakeUniformScore(std::vector<std::string> tokens,
                                    double total) {
  ScoredContinuation out;
  const double each = tokens.empty() ? 0.0 : total / static_cast<double>(tokens.size());
  out.tokenLogProbs.assign(tokens.size(), each);
  out.tokens = std::move(tokens);
  out.totalLogProb = total;
  return out;
}

double LogSigmoid(double z) noexcept {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

}  // namespace ctxcite
