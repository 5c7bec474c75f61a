#include "ctxcite/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ctxcite/error.hpp"
#include "ctxcite/kernels.hpp"

namespace ctxcite {
namespace {

constexpr double kLogitUnderflow = -30.0;
constexpr double kNearOne = -1e-9;

double SoftThreshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

void CheckFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, std::string(what) + " contains non-finite values");
    }
  }
}

bool IsConstant(std::span<const double> column) {
  return std::all_of(column.begin(), column.end(),
                     [&](double v) { return v == column.front(); });
}

}  // namespace

double LogitOfLogProb(double logProb) {
  if (!std::isfinite(logProb)) {
    throw Error(ErrorCode::kNonFinite, "log-probability is not finite");
  }
  if (logProb < kLogitUnderflow) return logProb;
  if (logProb > kNearOne) {
    const double p = 1.0 - 1e-9;
    return std::log(p / (1.0 - p));
  }
  return logProb - std::log(-std::expm1(logProb));
}

// --- AttributionTask --------------------------------------------------------

Prompt AttributionTask::PromptFor(const AblationVector& v) const {
  return Prompt{Ablate(*partition, v), query, templ};
}

double AttributionTask::StatementLogProb(const AblationVector& v) const {
  const std::span<const std::string> tokens(responseTokens);
  if (statement.tokenEnd > tokens.size() ||
      statement.tokenStart >= statement.tokenEnd) {
    throw Error(ErrorCode::kOutOfBounds, "statement outside the response tokens");
  }
  const auto prefix = tokens.subspan(0, statement.tokenStart);
  const auto continuation =
      tokens.subspan(statement.tokenStart, statement.tokenEnd - statement.tokenStart);
  return provider->ScoreForced(PromptFor(v), prefix, continuation).totalLogProb;
}

AttributionTask MakeWholeResponseTask(const Provider& provider,
                                      const SourcePartition& partition,
                                      std::string templ, std::string query,
                                      std::vector<std::string> responseTokens) {
  if (responseTokens.empty()) {
    throw Error(ErrorCode::kEmptyText, "response has no tokens");
  }
  AttributionTask task;
  task.provider = &provider;
  task.partition = &partition;
  task.templ = std::move(templ);
  task.query = std::move(query);
  task.responseTokens = std::move(responseTokens);
  std::string response;
  for (const auto& t : task.responseTokens) response += t;
  task.statement.responseText = response;
  task.statement.tokenStart = 0;
  task.statement.tokenEnd = task.responseTokens.size();
  task.statement.charStart = 0;
  task.statement.charEnd = response.size();
  return task;
}

// --- Dataset ----------------------------------------------------------------

DesignMatrix DesignMatrix::FromMasks(const std::vector<AblationVector>& masks,
                                     std::size_t d) {
  DesignMatrix x;
  x.rows = masks.size();
  x.cols = d;
  x.data.assign(x.rows * d, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (masks[i].size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "mask length differs from d");
    }
    for (std::size_t j = 0; j < d; ++j) x.data[j * x.rows + i] = masks[i][j] ? 1.0 : 0.0;
  }
  return x;
}

SurrogateDataset CollectDataset(const AttributionTask& task, std::size_t n,
                                std::uint64_t seed,
                                const SchedulerOptions& scheduler,
                                std::string_view samplerId) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be ≥ 1");
  SurrogateDataset data;
  data.seed = seed;
  data.samplerId = std::string(samplerId);
  data.masks = SampleAblations(task.dimension(), n, seed, samplerId).vectors;
  data.logProbs = RunIndexed<double>(
      n, scheduler,
      [&](std::size_t i) { return task.StatementLogProb(data.masks[i]); });
  data.targets.reserve(n);
  for (double lp : data.logProbs) data.targets.push_back(LogitOfLogProb(lp));
  return data;
}

// --- Lasso ------------------------------------------------------------------

double LassoObjective(const DesignMatrix& x, std::span<const double> y,
                      std::span<const double> w, double intercept,
                      double lambda) {
  std::vector<double> residual(y.begin(), y.end());
  for (double& r : residual) r -= intercept;
  for (std::size_t j = 0; j < x.cols; ++j) {
    if (w[j] != 0.0) kernels::Axpy(-w[j], x.Column(j), residual);
  }
  double l1 = 0.0;
  for (double v : w) l1 += std::abs(v);
  return kernels::SumSquares(residual) / (2.0 * static_cast<double>(x.rows)) +
         lambda * l1;
}

LassoFit FitLasso(const DesignMatrix& x, std::span<const double> y,
                  double lambda, const LassoOptions& options) {
  if (x.rows < 1) throw Error(ErrorCode::kInvalidArgument, "n must be ≥ 1");
  if (y.size() != x.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "targets and design rows differ");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be finite and ≥ 0");
  }
  CheckFinite(y, "targets");
  CheckFinite(x.data, "design");

  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const double invN = 1.0 / static_cast<double>(n);

  // Centred columns make the optimal intercept ybar - mean . w at every step.
  std::vector<double> centred(x.data);
  std::vector<double> means(d, 0.0);
  std::vector<double> curvature(d, 0.0);  // ||x_j - mean_j||^2 / n
  std::vector<bool> active(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    std::span<double> col(centred.data() + j * n, n);
    if (IsConstant(x.Column(j))) continue;
    means[j] = kernels::Sum(col) * invN;
    for (double& v : col) v -= means[j];
    curvature[j] = kernels::SumSquares(col) * invN;
    active[j] = curvature[j] > 0.0;
  }
  const double yMean = kernels::Sum(y) * invN;
  std::vector<double> residual(y.begin(), y.end());
  for (double& r : residual) r -= yMean;

  LassoFit fit;
  fit.weights.assign(d, 0.0);
  auto interceptNow = [&] {
    double b = yMean;
    for (std::size_t j = 0; j < d; ++j) b -= means[j] * fit.weights[j];
    return b;
  };
  auto objectiveNow = [&] {
    double l1 = 0.0;
    for (double v : fit.weights) l1 += std::abs(v);
    return kernels::SumSquares(residual) * invN / 2.0 + lambda * l1;
  };

  for (fit.sweeps = 0; fit.sweeps < options.maxSweeps;) {
    double maxStep = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!active[j]) continue;
      const std::span<const double> col(centred.data() + j * n, n);
      const double old = fit.weights[j];
      const double rho = kernels::Dot(col, residual) * invN + curvature[j] * old;
      const double updated = SoftThreshold(rho, lambda) / curvature[j];
      const double step = updated - old;
      if (step != 0.0) {
        kernels::Axpy(-step, col, residual);
        fit.weights[j] = updated;
        maxStep = std::max(maxStep, std::abs(step));
      }
    }
    ++fit.sweeps;
    if (options.recordObjective) fit.objectiveHistory.push_back(objectiveNow());
    if (maxStep < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = interceptNow();
  fit.objective = LassoObjective(x, y, fit.weights, fit.intercept, lambda);
  return fit;
}

LinearFit FitOls(const DesignMatrix& x, std::span<const double> y) {
  if (y.size() != x.rows || x.rows < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "targets and design rows differ");
  }
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto d = static_cast<Eigen::Index>(x.cols);
  Eigen::Map<const Eigen::MatrixXd> raw(x.data.data(), n, d);
  Eigen::Map<const Eigen::VectorXd> target(y.data(), n);
  const Eigen::RowVectorXd means = raw.colwise().mean();
  const Eigen::MatrixXd centred = raw.rowwise() - means;
  const double yMean = target.mean();
  const Eigen::VectorXd w =
      centred.completeOrthogonalDecomposition().solve(
          (target.array() - yMean).matrix());
  LinearFit fit;
  fit.weights.assign(w.data(), w.data() + d);
  fit.intercept = yMean - means.dot(w);
  return fit;
}

double Predict(std::span<const double> weights, double intercept,
               const AblationVector& v) {
  return intercept + kernels::MaskedSum(weights, v.bits());
}

double HeldOutRmse(std::span<const double> weights, double intercept,
                   const std::vector<AblationVector>& masks,
                   std::span<const double> targets) {
  if (masks.empty() || masks.size() != targets.size()) {
    throw Error(ErrorCode::kInvalidArgument, "held-out set is empty or ragged");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const double e = Predict(weights, intercept, masks[i]) - targets[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(masks.size()));
}

AttributionResult FitAttribution(const SurrogateDataset& data, std::size_t d,
                                 const StatementSpan& statement,
                                 const AttributeOptions& options) {
  const std::size_t n = data.size();
  const auto held = static_cast<std::size_t>(
      std::floor(options.heldOutFraction * static_cast<double>(n)));
  if (options.heldOutFraction < 0.0 || options.heldOutFraction >= 1.0 ||
      held >= n) {
    throw Error(ErrorCode::kInvalidArgument,
                "held-out fraction must leave at least one ablation to fit");
  }
  const std::size_t train = n - held;
  const std::vector<AblationVector> trainMasks(data.masks.begin(),
                                               data.masks.begin() + train);
  const DesignMatrix x = DesignMatrix::FromMasks(trainMasks, d);
  const LassoFit fit = FitLasso(
      x, std::span<const double>(data.targets).first(train), options.lambda,
      options.lasso);

  AttributionResult result;
  result.weights = fit.weights;
  result.intercept = fit.intercept;
  result.lambda = options.lambda;
  result.nAblations = n;
  result.seed = data.seed;
  result.sweeps = fit.sweeps;
  result.converged = fit.converged;
  result.tokenStart = statement.tokenStart;
  result.tokenEnd = statement.tokenEnd;
  result.charStart = statement.charStart;
  result.charEnd = statement.charEnd;
  if (held > 0) {
    const std::vector<AblationVector> heldMasks(data.masks.begin() + train,
                                                data.masks.end());
    result.heldOutRmse =
        HeldOutRmse(fit.weights, fit.intercept, heldMasks,
                    std::span<const double>(data.targets).subspan(train));
  }
  return result;
}

AttributionResult Attribute(const AttributionTask& task,
                            const AttributeOptions& options) {
  const SurrogateDataset data = CollectDataset(
      task, options.numAblations, options.seed, options.scheduler);
  return FitAttribution(data, task.dimension(), task.statement, options);
}

std::vector<std::size_t> TopK(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

// --- JSON -------------------------------------------------------------------

std::string ToJson(const AttributionResult& r) {
  nlohmann::ordered_json j;
  j["version"] = AttributionResult::kVersion;
  j["d"] = r.weights.size();
  j["weights"] = r.weights;
  j["intercept"] = r.intercept;
  j["lambda"] = r.lambda;
  j["nAblations"] = r.nAblations;
  j["seed"] = r.seed;
  j["heldOutRmse"] = r.heldOutRmse ? nlohmann::ordered_json(*r.heldOutRmse)
                                   : nlohmann::ordered_json(nullptr);
  j["statement"] = {{"tokenStart", r.tokenStart},
                    {"tokenEnd", r.tokenEnd},
                    {"charStart", r.charStart},
                    {"charEnd", r.charEnd}};
  j["fit"] = {{"sweeps", r.sweeps}, {"converged", r.converged}};
  return j.dump();
}

AttributionResult AttributionResultFromJson(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != AttributionResult::kVersion) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported result version");
    }
    AttributionResult r;
    r.weights = j.at("weights").get<std::vector<double>>();
    r.intercept = j.at("intercept").get<double>();
    r.lambda = j.at("lambda").get<double>();
    r.nAblations = j.at("nAblations").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("heldOutRmse").is_null()) r.heldOutRmse = j["heldOutRmse"].get<double>();
    const auto& s = j.at("statement");
    r.tokenStart = s.at("tokenStart").get<std::size_t>();
    r.tokenEnd = s.at("tokenEnd").get<std::size_t>();
    r.charStart = s.at("charStart").get<std::size_t>();
    r.charEnd = s.at("charEnd").get<std::size_t>();
    r.sweeps = j.at("fit").at("sweeps").get<int>();
    r.converged = j.at("fit").at("converged").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed attribution JSON: ") + e.what());
  }
}

}  // namespace ctxcite
