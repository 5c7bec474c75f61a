#include "ctxcite/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ctxcite/error.hpp"
#include "ctxcite/rng.hpp"

namespace ctxcite {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::string Join(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

// k distinct indices out of d, via a partial Fisher-Yates shuffle.
std::vector<std::size_t> ChooseSupport(std::size_t d, std::size_t k,
                                       CounterRng& rng) {
  if (k > d) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot plant " + std::to_string(k) + " weights in d=" +
                    std::to_string(d));
  }
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.Below(d - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double Dot(const std::vector<double>& w, const AblationVector& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (v[i]) s += w[i];
  }
  return s;
}

double LogSumExp3(double a, double b, double c) {
  const double m = std::max({a, b, c});
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

constexpr std::array<const char*, 8> kNouns = {
    "harbor", "archive", "orchard", "bridge",
    "council", "glacier", "library", "market"};
constexpr std::array<const char*, 8> kVerbs = {
    "reopened", "flooded", "expanded", "closed",
    "relocated", "doubled", "recovered", "stalled"};

}  // namespace

SyntheticOracle::SyntheticOracle(std::vector<std::string> sourceTexts,
                                 std::string id)
    : sources_(std::move(sourceTexts)), id_(std::move(id)) {
  if (sources_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "oracle needs at least one source");
  }
}

AblationVector SyntheticOracle::InclusionOf(std::string_view renderedPrompt) const {
  AblationVector v(sources_.size(), false);
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (renderedPrompt.find(sources_[i]) != std::string_view::npos) v.Set(i, true);
  }
  return v;
}

std::vector<std::string> SyntheticOracle::Tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = pos;
    while (end < text.size() && IsSpace(text[end])) ++end;
    if (end == text.size()) {
      tokens.emplace_back(text.substr(pos));
      break;
    }
    while (end < text.size() && !IsSpace(text[end])) ++end;
    tokens.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

ScoredContinuation SyntheticOracle::Generate(
    const Prompt& prompt, int maxTokens, std::optional<std::uint64_t>) const {
  if (maxTokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "maxTokens must be >= 1");
  }
  const std::string rendered = prompt.Render();
  const AblationVector v = InclusionOf(rendered);
  std::vector<std::string> tokens = Tokenize(Respond(v, rendered));
  if (tokens.size() > static_cast<std::size_t>(maxTokens)) tokens.resize(maxTokens);
  const double total = ContinuationLogProb(v, rendered, Join(tokens));
  return MakeUniformScore(std::move(tokens), total);
}

ScoredContinuation SyntheticOracle::ScoreForced(
    const Prompt& prompt, std::span<const std::string>,
    std::span<const std::string> continuation) const {
  if (continuation.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "continuation must be non-empty");
  }
  const std::string rendered = prompt.Render();
  const double total =
      ContinuationLogProb(InclusionOf(rendered), rendered, Join(continuation));
  return MakeUniformScore({continuation.begin(), continuation.end()}, total);
}

// --- PlantedLinearOracle ----------------------------------------------------

PlantedLinearOracle::PlantedLinearOracle(std::vector<std::string> sourceTexts,
                                         std::vector<double> weights,
                                         double intercept, std::string response)
    : SyntheticOracle(std::move(sourceTexts), "planted-linear"),
      weights_(std::move(weights)),
      intercept_(intercept),
      response_(std::move(response)) {
  if (weights_.size() != dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weights and sources differ in length");
  }
}

PlantedLinearOracle PlantedLinearOracle::Random(
    std::vector<std::string> sourceTexts, std::size_t k, std::uint64_t seed,
    double lo, double hi) {
  CounterRng rng(seed, "planted-linear");
  const std::size_t d = sourceTexts.size();
  std::vector<double> w(d, 0.0);
  for (std::size_t j : ChooseSupport(d, k, rng)) {
    const double magnitude = rng.Uniform(lo, hi);
    w[j] = (rng.Next() & 1U) ? magnitude : -magnitude;
  }
  const double intercept = -std::accumulate(w.begin(), w.end(), 0.0) / 2.0;
  return PlantedLinearOracle(std::move(sourceTexts), std::move(w), intercept);
}

double PlantedLinearOracle::Logit(const AblationVector& v) const {
  return intercept_ + Dot(weights_, v);
}

double PlantedLinearOracle::ContinuationLogProb(const AblationVector& v,
                                                std::string_view,
                                                std::string_view) const {
  return LogSigmoid(Logit(v));
}

// --- InteractionOracle ------------------------------------------------------

InteractionOracle::InteractionOracle(std::vector<std::string> sourceTexts,
                                     std::vector<double> weights,
                                     std::vector<PairTerm> pairs,
                                     double intercept)
    : SyntheticOracle(std::move(sourceTexts), "interaction"),
      weights_(std::move(weights)),
      pairs_(std::move(pairs)),
      intercept_(intercept) {
  if (weights_.size() != dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weights and sources differ in length");
  }
  for (const PairTerm& p : pairs_) {
    if (p.a >= dimension() || p.b >= dimension() || p.a == p.b) {
      throw Error(ErrorCode::kInvalidArgument, "bad pair term");
    }
  }
}

InteractionOracle InteractionOracle::Random(std::vector<std::string> sourceTexts,
                                            std::size_t k, std::size_t pairCount,
                                            std::uint64_t seed, double pairLo,
                                            double pairHi) {
  CounterRng rng(seed, "interaction");
  const std::size_t d = sourceTexts.size();
  std::vector<double> w(d, 0.0);
  for (std::size_t j : ChooseSupport(d, k, rng)) {
    const double magnitude = rng.Uniform(2.0, 5.0);
    w[j] = (rng.Next() & 1U) ? magnitude : -magnitude;
  }
  std::vector<PairTerm> pairs;
  if (d >= 2) {
    for (std::size_t p = 0; p < pairCount; ++p) {
      const auto ab = ChooseSupport(d, 2, rng);
      const double magnitude = rng.Uniform(pairLo, pairHi);
      pairs.push_back({ab[0], ab[1], (rng.Next() & 1U) ? magnitude : -magnitude});
    }
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (const PairTerm& p : pairs) total += p.weight;
  return InteractionOracle(std::move(sourceTexts), std::move(w),
                           std::move(pairs), -total / 2.0);
}

double InteractionOracle::Logit(const AblationVector& v) const {
  double z = intercept_ + Dot(weights_, v);
  for (const PairTerm& p : pairs_) {
    if (v[p.a] && v[p.b]) z += p.weight;
  }
  return z;
}

double InteractionOracle::ContinuationLogProb(const AblationVector& v,
                                              std::string_view,
                                              std::string_view) const {
  return LogSigmoid(Logit(v));
}

// --- PoisonOracle -----------------------------------------------------------

PoisonOracle::PoisonOracle(std::vector<std::string> sourceTexts,
                           std::size_t poisonIndex, std::vector<double> weights,
                           double intercept, std::uint64_t noiseKey)
    : SyntheticOracle(std::move(sourceTexts), "poison"),
      poison_(poisonIndex),
      weights_(std::move(weights)),
      intercept_(intercept),
      noiseKey_(noiseKey) {}

PoisonOracle PoisonOracle::Random(std::vector<std::string> sourceTexts,
                                  std::size_t poisonIndex, std::uint64_t seed) {
  const std::size_t d = sourceTexts.size();
  if (poisonIndex >= d) {
    throw Error(ErrorCode::kOutOfBounds, "poison index outside the context");
  }
  CounterRng rng(seed, "poison");
  std::vector<double> w(d);
  for (double& x : w) x = 0.3 * rng.Normal();
  w[poisonIndex] = rng.Uniform(3.0, 6.0);
  const double intercept = -std::accumulate(w.begin(), w.end(), 0.0) / 2.0;
  return PoisonOracle(std::move(sourceTexts), poisonIndex, std::move(w),
                      intercept, StreamKey(seed, "poison-noise"));
}

double PoisonOracle::FlipLogit(const AblationVector& v) const {
  std::uint64_t h = noiseKey_;
  for (std::size_t i = 0; i < v.size(); ++i) {
    h = Mix64(h ^ (static_cast<std::uint64_t>(v[i]) + 2 * i + 1));
  }
  CounterRng noise(h);
  return intercept_ + Dot(weights_, v) + 0.3 * noise.Normal();
}

double PoisonOracle::ContinuationLogProb(const AblationVector& v,
                                         std::string_view,
                                         std::string_view continuation) const {
  const double z = FlipLogit(v);
  return continuation == kFlippedResponse ? LogSigmoid(z) : LogSigmoid(-z);
}

std::string PoisonOracle::Respond(const AblationVector& v,
                                  std::string_view) const {
  return FlipLogit(v) > 0 ? kFlippedResponse : kCleanResponse;
}

// --- DistractorQaOracle -----------------------------------------------------

DistractorQaOracle::DistractorQaOracle(std::vector<std::string> sourceTexts,
                                       std::size_t relevantIndex,
                                       std::vector<double> suppress,
                                       std::vector<double> prime,
                                       double targetWeight, double wrongWeight)
    : SyntheticOracle(std::move(sourceTexts), "distractor-qa"),
      relevant_(relevantIndex),
      suppress_(std::move(suppress)),
      prime_(std::move(prime)),
      targetWeight_(targetWeight),
      wrongWeight_(wrongWeight) {}

DistractorQaOracle DistractorQaOracle::Random(std::vector<std::string> sourceTexts,
                                              std::size_t relevantIndex,
                                              std::uint64_t seed) {
  const std::size_t d = sourceTexts.size();
  if (relevantIndex >= d) {
    throw Error(ErrorCode::kOutOfBounds, "relevant index outside the context");
  }
  CounterRng rng(seed, "distractor-qa");
  std::vector<double> suppress(d, 0.0);
  std::vector<double> prime(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (i == relevantIndex) continue;
    suppress[i] = rng.Uniform(0.2, 0.4);
    prime[i] = rng.Uniform(0.02, 0.1);
  }
  const double target = rng.Uniform(3.2, 3.6);
  const double wrong = rng.Uniform(2.8, 3.1);
  return DistractorQaOracle(std::move(sourceTexts), relevantIndex,
                            std::move(suppress), std::move(prime), target, wrong);
}

std::pair<double, double> DistractorQaOracle::AnswerLogits(
    const AblationVector& v) const {
  double target = v[relevant_] ? targetWeight_ : 0.0;
  double wrong = v[relevant_] ? wrongWeight_ : 0.0;
  target -= Dot(suppress_, v);
  wrong += Dot(prime_, v);
  return {target, wrong};
}

double DistractorQaOracle::ContinuationLogProb(const AblationVector& v,
                                               std::string_view,
                                               std::string_view continuation) const {
  const auto [target, wrong] = AnswerLogits(v);
  const double norm = LogSumExp3(target, wrong, 0.0);
  if (continuation == kTargetAnswer) return target - norm;
  if (continuation == kWrongAnswer) return wrong - norm;
  if (continuation == kAbstain) return -norm;
  return -40.0;
}

std::string DistractorQaOracle::Respond(const AblationVector& v,
                                        std::string_view) const {
  const auto [target, wrong] = AnswerLogits(v);
  if (target >= wrong && target >= 0.0) return kTargetAnswer;
  if (wrong > target && wrong >= 0.0) return kWrongAnswer;
  return kAbstain;
}

// --- FunctionOracle ---------------------------------------------------------

FunctionOracle::FunctionOracle(std::vector<std::string> sourceTexts,
                               LogProbFn logProb, RespondFn respond,
                               std::string id)
    : SyntheticOracle(std::move(sourceTexts), std::move(id)),
      logProb_(std::move(logProb)),
      respond_(std::move(respond)) {}

std::vector<std::string> SyntheticSourceTexts(std::size_t d) {
  std::vector<std::string> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.push_back("Report " + std::to_string(i + 1) + " says the " +
                  kNouns[i % kNouns.size()] + " " +
                  kVerbs[(i / kNouns.size()) % kVerbs.size()] + " last year.");
  }
  return out;
}

std::string SyntheticContext(std::size_t d) {
  std::string out;
  for (const auto& s : SyntheticSourceTexts(d)) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

}  // namespace ctxcite
