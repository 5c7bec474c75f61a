#include "ctxcite/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ctxcite/error.hpp"
#include "ctxcite/kernels.hpp"

namespace ctxcite {
namespace {

void CheckScores(const AttributionTask& task, std::span<const double> scores) {
  if (scores.size() != task.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "got " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(task.dimension()) + " sources");
  }
}

}  // namespace

AblationVector TopKAblation(std::span<const double> scores, std::size_t k) {
  AblationVector v = AblationVector::Ones(scores.size());
  for (std::size_t j : TopK(scores, k)) v.Set(j, false);
  return v;
}

double TopKDrop(const AttributionTask& task, std::span<const double> scores,
                std::size_t k) {
  CheckScores(task, scores);
  if (k == 0) return 0.0;
  return TopKDrop(task, scores, k,
                  task.StatementLogProb(AblationVector::Ones(task.dimension())));
}

double TopKDrop(const AttributionTask& task, std::span<const double> scores,
                std::size_t k, double fullLogProb) {
  CheckScores(task, scores);
  if (k == 0) return 0.0;
  return fullLogProb - task.StatementLogProb(TopKAblation(scores, k));
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "spearman inputs differ in length");
  }
  if (xs.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "spearman needs at least 3 points");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::isnan(xs[i]) || std::isnan(ys[i])) {
      throw Error(ErrorCode::kNonFinite, "spearman input contains NaN");
    }
  }
  std::vector<double> rx = AverageRanks(xs);
  std::vector<double> ry = AverageRanks(ys);
  const double mean = (static_cast<double>(xs.size()) + 1.0) / 2.0;
  for (double& r : rx) r -= mean;
  for (double& r : ry) r -= mean;
  const double sxx = kernels::SumSquares(rx);
  const double syy = kernels::SumSquares(ry);
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kDegenerateRanks, "a ranking is constant");
  }
  const double rho = kernels::Dot(rx, ry) / std::sqrt(sxx * syy);
  return std::clamp(rho, -1.0, 1.0);
}

double Lds(const AttributionTask& task, std::span<const double> scores,
           std::size_t m, std::uint64_t seed, const SchedulerOptions& scheduler) {
  CheckScores(task, scores);
  if (m < 3) throw Error(ErrorCode::kInvalidArgument, "LDS needs m ≥ 3");
  const auto sample = SampleAblations(task.dimension(), m, seed, kEvalSampler);
  const std::vector<double> actual = RunIndexed<double>(
      m, scheduler,
      [&](std::size_t i) { return task.StatementLogProb(sample.vectors[i]); });
  std::vector<double> predicted(m);
  for (std::size_t i = 0; i < m; ++i) {
    predicted[i] = kernels::MaskedSum(scores, sample.vectors[i].bits());
  }
  return Spearman(predicted, actual);
}

std::vector<double> LeaveOneOut(const AttributionTask& task,
                                const SchedulerOptions& scheduler) {
  const std::size_t d = task.dimension();
  // Index d is the unablated context.
  const std::vector<double> logProbs = RunIndexed<double>(
      d + 1, scheduler, [&](std::size_t i) {
        AblationVector v = AblationVector::Ones(d);
        if (i < d) v.Set(i, false);
        return task.StatementLogProb(v);
      });
  std::vector<double> scores(d);
  for (std::size_t j = 0; j < d; ++j) scores[j] = logProbs[d] - logProbs[j];
  return scores;
}

double ShapKernelWeight(std::size_t d, std::size_t included) {
  if (included == 0 || included >= d) {
    throw Error(ErrorCode::kUndefinedWeight,
                "SHAP kernel weight is undefined for |v| = " +
                    std::to_string(included) + " with d = " + std::to_string(d));
  }
  const double dd = static_cast<double>(d);
  const double s = static_cast<double>(included);
  if (d <= 60) {
    double binom = 1.0;
    const std::size_t r = std::min(included, d - included);
    for (std::size_t i = 0; i < r; ++i) {
      binom = binom * static_cast<double>(d - i) / static_cast<double>(i + 1);
    }
    return (dd - 1.0) / (binom * s * (dd - s));
  }
  const double logBinom =
      std::lgamma(dd + 1.0) - std::lgamma(s + 1.0) - std::lgamma(dd - s + 1.0);
  return std::exp(std::log(dd - 1.0) - logBinom - std::log(s) - std::log(dd - s));
}

double ShapKernelWeight(const AblationVector& v) {
  return ShapKernelWeight(v.size(), v.Count());
}

std::size_t RelevantSourceCount(const AttributionTask& task, double delta,
                                const SchedulerOptions& scheduler) {
  if (!(delta > 1.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be > 1");
  const double threshold = std::log(delta);
  const auto drops = LeaveOneOut(task, scheduler);
  return static_cast<std::size_t>(std::count_if(
      drops.begin(), drops.end(),
      [&](double x) { return std::abs(x) >= threshold; }));
}

EvalReport Evaluate(const AttributionTask& task, std::span<const double> scores,
                    const std::string& method, const EvalOptions& options) {
  CheckScores(task, scores);
  EvalReport report;
  report.method = method;
  report.mEvalAblations = options.ldsAblations;
  const double full = task.StatementLogProb(AblationVector::Ones(task.dimension()));
  for (std::size_t k : options.ks) {
    report.topKDrops[k] = TopKDrop(task, scores, k, full);
  }
  report.lds = Lds(task, scores, options.ldsAblations, options.seed,
                   options.scheduler);
  return report;
}

std::string ToJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  nlohmann::ordered_json drops = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.topKDrops) drops[std::to_string(k)] = v;
  j["topKDrops"] = drops;
  j["lds"] = report.lds;
  j["mEvalAblations"] = report.mEvalAblations;
  return j.dump();
}

}  // namespace ctxcite
