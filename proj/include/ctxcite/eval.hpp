#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctxcite/ablation.hpp"
#include "ctxcite/scheduler.hpp"
#include "ctxcite/surrogate.hpp"

namespace ctxcite {

struct EvalReport {
  std::string method;
  std::map<std::size_t, double> topKDrops;
  double lds = 0.0;
  std::size_t mEvalAblations = 0;
};

std::string ToJson(const EvalReport& report);

// Vector that removes exactly TopK(scores, k).
AblationVector TopKAblation(std::span<const double> scores, std::size_t k);

// log p(statement | C) - log p(statement | C without the top-k sources).
double TopKDrop(const AttributionTask& task, std::span<const double> scores,
                std::size_t k);

// Same, reusing an already computed unablated log-probability.
double TopKDrop(const AttributionTask& task, std::span<const double> scores,
                std::size_t k, double fullLogProb);

// Spearman rank correlation with tie-averaged ranks.
double Spearman(std::span<const double> xs, std::span<const double> ys);

// Tie-averaged ranks starting at 1.
std::vector<double> AverageRanks(std::span<const double> values);

// Linear datamodeling score over m fresh ablations drawn from the eval stream.
double Lds(const AttributionTask& task, std::span<const double> scores,
           std::size_t m, std::uint64_t seed,
           const SchedulerOptions& scheduler = {});

// score_j = log p(full) - log p(without source j).
std::vector<double> LeaveOneOut(const AttributionTask& task,
                                const SchedulerOptions& scheduler = {});

// Kernel SHAP similarity weight for an ablation vector with `included` of
// `d` sources kept. Undefined at included = 0 and included = d.
double ShapKernelWeight(std::size_t d, std::size_t included);
double ShapKernelWeight(const AblationVector& v);

// Sources whose removal alone changes the statement probability by a factor
// of at least delta, i.e. |delta log p| >= ln(delta).
std::size_t RelevantSourceCount(const AttributionTask& task, double delta = 2.0,
                                const SchedulerOptions& scheduler = {});

struct EvalOptions {
  std::vector<std::size_t> ks = {1, 3, 5};
  std::size_t ldsAblations = 64;
  std::uint64_t seed = 0;
  SchedulerOptions scheduler;
};

EvalReport Evaluate(const AttributionTask& task, std::span<const double> scores,
                    const std::string& method, const EvalOptions& options);

}  // namespace ctxcite
