#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxcite/ablation.hpp"
#include "ctxcite/provider.hpp"
#include "ctxcite/scheduler.hpp"
#include "ctxcite/segmentation.hpp"

namespace ctxcite {

// logit(p) for p = exp(logProb), stable for tiny and near-one probabilities.
double LogitOfLogProb(double logProb);

// Everything needed to score one statement under arbitrary ablations.
struct AttributionTask {
  const Provider* provider = nullptr;
  const SourcePartition* partition = nullptr;
  std::string templ = std::string(kDefaultTemplate);
  std::string query;
  // The original response's tokens; the statement is tokens[tokenStart,
  // tokenEnd) and the preceding tokens are always the forced prefix.
  std::vector<std::string> responseTokens;
  StatementSpan statement;

  std::size_t dimension() const { return partition->size(); }
  Prompt PromptFor(const AblationVector& v) const;
  // log p(statement | Ablate(C, v), Q, prefix)
  double StatementLogProb(const AblationVector& v) const;
};

// Targets the whole response.
AttributionTask MakeWholeResponseTask(const Provider& provider,
                                      const SourcePartition& partition,
                                      std::string templ, std::string query,
                                      std::vector<std::string> responseTokens);

// Column-major dense matrix; rows are samples, columns are sources.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  static DesignMatrix FromMasks(const std::vector<AblationVector>& masks,
                                std::size_t d);
  std::span<const double> Column(std::size_t j) const {
    return {data.data() + j * rows, rows};
  }
  double At(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
};

struct SurrogateDataset {
  std::vector<AblationVector> masks;
  std::vector<double> targets;  // logit-scaled statement probabilities
  std::vector<double> logProbs;
  std::uint64_t seed = 0;
  std::string samplerId;

  std::size_t size() const noexcept { return masks.size(); }
};

// Samples n ablations from (seed, samplerId), scores each through the
// provider with bounded concurrency, and logit-transforms the results.
SurrogateDataset CollectDataset(const AttributionTask& task, std::size_t n,
                                std::uint64_t seed,
                                const SchedulerOptions& scheduler = {},
                                std::string_view samplerId = kFitSampler);

struct LassoOptions {
  double tolerance = 1e-7;  // stop when the largest coefficient step is below
  int maxSweeps = 10000;
  bool recordObjective = false;
};

struct LassoFit {
  std::vector<double> weights;
  double intercept = 0.0;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objectiveHistory;  // one entry per sweep when recorded
};

// Minimises (1/2n)||y - Xw - b||^2 + lambda ||w||_1 by cyclic coordinate
// descent with soft-thresholding. The intercept is unpenalised; features are
// centred but not scaled. Constant columns get weight 0.
LassoFit FitLasso(const DesignMatrix& x, std::span<const double> y,
                  double lambda, const LassoOptions& options = {});

double LassoObjective(const DesignMatrix& x, std::span<const double> y,
                      std::span<const double> w, double intercept,
                      double lambda);

struct LinearFit {
  std::vector<double> weights;
  double intercept = 0.0;
};

// Ordinary least squares with an intercept; minimum-norm weights when the
// design is rank deficient (n <= d).
LinearFit FitOls(const DesignMatrix& x, std::span<const double> y);

double Predict(std::span<const double> weights, double intercept,
               const AblationVector& v);

double HeldOutRmse(std::span<const double> weights, double intercept,
                   const std::vector<AblationVector>& masks,
                   std::span<const double> targets);

struct AttributeOptions {
  std::size_t numAblations = 32;
  double lambda = 0.01;
  std::uint64_t seed = 0;
  // Fraction of the n ablations withheld from the fit to report RMSE.
  double heldOutFraction = 0.0;
  SchedulerOptions scheduler;
  LassoOptions lasso;
};

struct AttributionResult {
  static constexpr int kVersion = 1;

  std::vector<double> weights;  // one attribution score per source
  double intercept = 0.0;
  double lambda = 0.0;
  std::size_t nAblations = 0;
  std::uint64_t seed = 0;
  std::optional<double> heldOutRmse;
  std::size_t tokenStart = 0;
  std::size_t tokenEnd = 0;
  std::size_t charStart = 0;
  std::size_t charEnd = 0;
  int sweeps = 0;
  bool converged = false;

  std::size_t dimension() const noexcept { return weights.size(); }
};

AttributionResult FitAttribution(const SurrogateDataset& data, std::size_t d,
                                 const StatementSpan& statement,
                                 const AttributeOptions& options);

// Collect ablations, then fit the sparse linear surrogate.
AttributionResult Attribute(const AttributionTask& task,
                            const AttributeOptions& options = {});

// Indices of the k largest scores, descending, ties by ascending index.
std::vector<std::size_t> TopK(std::span<const double> scores, std::size_t k);

std::string ToJson(const AttributionResult& result);
AttributionResult AttributionResultFromJson(std::string_view json);

}  // namespace ctxcite
