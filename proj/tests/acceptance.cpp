// Acceptance suite: one PASS/FAIL line per criterion, synthetic providers only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <unistd.h>
#include <string>
#include <vector>

#include "ctxcite/error.hpp"
#include "ctxcite/eval.hpp"
#include "ctxcite/rng.hpp"
#include "ctxcite/service/cache.hpp"
#include "support.hpp"

namespace {

using namespace ctxcite;
using namespace ctxcite::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 1. Planted sparse recovery at d=100, k=5, n=32.
Outcome PlantedRecovery() {
  const auto start = Clock::now();
  int recovered = 0;
  double ldsSum = 0.0;
  int topFive = 0;
  int spurious = 0;
  double largestSpurious = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto fx = Planted(100, 5, s, 2.0, 5.0);
    AttributeOptions opts;
    opts.numAblations = 32;
    opts.lambda = 0.01;
    opts.seed = s;
    const AttributionResult r = Attribute(fx->task, opts);
    bool same = true;
    for (std::size_t j = 0; j < 100; ++j) {
      same = same && ((r.weights[j] != 0.0) == (fx->oracle.weights()[j] != 0.0));
    }
    recovered += same ? 1 : 0;
    ldsSum += Lds(fx->task, r.weights, 64, 1000 + s);
    // Diagnostics only: spurious non-zeros and whether the 5 largest |w| are the plant.
    std::vector<double> magnitude(100);
    for (std::size_t j = 0; j < 100; ++j) {
      magnitude[j] = std::fabs(r.weights[j]);
      if (fx->oracle.weights()[j] == 0.0) {
        spurious += r.weights[j] != 0.0 ? 1 : 0;
        largestSpurious = std::max(largestSpurious, magnitude[j]);
      }
    }
    bool top = true;
    for (std::size_t j : TopK(magnitude, 5)) top = top && fx->oracle.weights()[j] != 0.0;
    topFive += top ? 1 : 0;
  }
  const double seconds = Seconds(start);
  const double lds = ldsSum / seeds;
  return {recovered >= 19 && lds >= 0.90 && seconds < 10.0,
          Fmt("exact non-zero support %d/20 (need >= 19), mean LDS %.4f (need >= 0.90), "
              "%.2f s (< 10) [5 largest |w| = plant in %d/20; %d spurious non-zeros, max %.3g]",
              recovered, lds, seconds, topFive, spurious, largestSpurious)};
}

// 2. Top-1 drop against the leave-one-out oracle over 50 instances.
Outcome LooAgreement() {
  const auto start = Clock::now();
  double cc = 0.0;
  double loo = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 10 + 2 * static_cast<std::size_t>(i % 16);
    AttributeOptions opts;
    opts.seed = 7000 + i;
    auto run = [&](const AttributionTask& task) {
      const double full = task.StatementLogProb(AblationVector::Ones(task.dimension()));
      const auto w = Attribute(task, opts).weights;
      cc += TopKDrop(task, w, 1, full);
      loo += TopKDrop(task, LeaveOneOut(task), 1, full);
    };
    if (i % 2 == 0) {
      const auto fx = Planted(d, 1 + i % 5, 500 + i);
      run(fx->task);
    } else {
      const auto fx = Interaction(d, 1 + i % 5, 2, 500 + i);
      run(fx->task);
    }
  }
  const double seconds = Seconds(start);
  const double ratio = cc / loo;
  return {ratio >= 0.95 && seconds < 30.0,
          Fmt("mean top-1 drop %.4f vs leave-one-out %.4f, ratio %.4f (need >= 0.95), %.2f s (< 30)",
              cc / 50, loo / 50, ratio, seconds)};
}

// 3. Coordinate descent against a long reference run and a dense OLS solve.
Outcome LassoCorrectness() {
  const auto start = Clock::now();
  double worstRel = 0.0;
  double worstOls = 0.0;
  for (int p = 0; p < 50; ++p) {
    const std::size_t n = 64;
    const std::size_t d = 30;
    const auto masks = SampleAblations(d, n, 9000 + p).vectors;
    const DesignMatrix x = DesignMatrix::FromMasks(masks, d);
    CounterRng rng(9000 + p, "lasso-problem");
    std::vector<double> w(d);
    for (auto& v : w) v = rng.Uniform() < 0.3 ? rng.Uniform(-3.0, 3.0) : 0.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.5 + Predict(w, 0.0, masks[i]) + 0.5 * rng.Normal();
    }
    const double lambda = 0.01 + 0.2 * rng.Uniform();
    const LassoFit fit = FitLasso(x, y, lambda);
    LassoOptions ref;
    ref.maxSweeps = 100000;
    ref.tolerance = 1e-14;
    const LassoFit best = FitLasso(x, y, lambda, ref);
    worstRel = std::max(worstRel, std::fabs(fit.objective - best.objective) /
                                      std::fabs(best.objective));

    const LassoFit tiny = FitLasso(x, y, 1e-10);
    const auto beta = NormalEquationsOls(Rows(masks), y);
    for (std::size_t j = 0; j < d; ++j) {
      worstOls = std::max(worstOls, std::fabs(tiny.weights[j] - beta[j + 1]));
    }
  }
  const double seconds = Seconds(start);
  return {worstRel <= 1e-8 && worstOls < 1e-5 && seconds < 20.0,
          Fmt("worst relative objective gap %.3e (<= 1e-8), worst |w - OLS| %.3e (< 1e-5), "
              "%.2f s (< 20)",
              worstRel, worstOls, seconds)};
}

// Held-out RMSE on a separate stream of ablations.
double HoldoutRmse(const AttributionTask& task, const LinearFit& fit, std::uint64_t seed) {
  const auto held = CollectDataset(task, 256, seed, {}, kHoldoutSampler);
  return HeldOutRmse(fit.weights, fit.intercept, held.masks, held.targets);
}

// 4. Held-out RMSE shrinks with more ablations; Lasso beats OLS at n=32.
Outcome RmseTrend() {
  double lasso32 = 0.0;
  double lasso256 = 0.0;
  double ols32 = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto fx = Interaction(50, 5, 3, 300 + s);
    const std::size_t d = 50;
    auto lassoAt = [&](std::size_t n) {
      const auto data = CollectDataset(fx->task, n, 300 + s);
      const LassoFit f = FitLasso(DesignMatrix::FromMasks(data.masks, d), data.targets, 0.01);
      return HoldoutRmse(fx->task, {f.weights, f.intercept}, 300 + s);
    };
    lasso32 += lassoAt(32);
    lasso256 += lassoAt(256);
    const auto data = CollectDataset(fx->task, 32, 300 + s);
    ols32 += HoldoutRmse(fx->task, FitOls(DesignMatrix::FromMasks(data.masks, d), data.targets),
                         300 + s);
  }
  lasso32 /= seeds;
  lasso256 /= seeds;
  ols32 /= seeds;
  return {lasso256 < lasso32 && lasso32 <= ols32,
          Fmt("mean RMSE lasso n=256 %.4f < n=32 %.4f; lasso n=32 %.4f <= OLS n=32 %.4f",
              lasso256, lasso32, lasso32, ols32)};
}

// 5. Planted poison ranked first.
Outcome PoisonDetection() {
  const auto start = Clock::now();
  int top1 = 0;
  int top3 = 0;
  const int cases = 100;
  for (int s = 0; s < cases; ++s) {
    const std::size_t d = 20;
    const std::size_t poison = static_cast<std::size_t>(s) % d;
    const auto fx = Poison(d, poison, 4000 + s);
    AttributeOptions opts;
    opts.seed = 4000 + s;
    const auto r = Attribute(fx->task, opts);
    const auto ranked = TopK(r.weights, 3);
    top1 += ranked[0] == poison ? 1 : 0;
    top3 += std::find(ranked.begin(), ranked.end(), poison) != ranked.end() ? 1 : 0;
  }
  const double seconds = Seconds(start);
  return {top1 >= 95 && top3 >= 99 && seconds < 60.0,
          Fmt("top-1 %d/100 (need >= 95), top-3 %d/100 (need >= 99), %.2f s (< 60)", top1, top3,
              seconds)};
}

// 6. Closed-form identities of the metrics.
Outcome MetricIdentities() {
  std::vector<std::string> notes;
  bool ok = true;
  const auto fx = Planted(8, 3, 11);
  const std::vector<double> scores{0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 0.9};
  const double drop0 = TopKDrop(fx->task, scores, 0);
  if (drop0 != 0.0) {
    ok = false;
    notes.push_back("topKDrop(k=0) != 0");
  }
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{5, 4, 3, 2, 1};
  if (Spearman(a, a) != 1.0 || Spearman(a, b) != -1.0) {
    ok = false;
    notes.push_back("spearman not +-1");
  }
  if (ShapKernelWeight(4, 1) != 0.25) {
    ok = false;
    notes.push_back("shap weight != 0.25");
  }
  for (std::size_t s : {std::size_t{0}, std::size_t{4}}) {
    try {
      ShapKernelWeight(4, s);
      ok = false;
      notes.push_back("shap endpoint did not error");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedWeight) ok = false;
    }
  }
  const double logit = LogitOfLogProb(std::log(0.5));
  if (std::fabs(logit) > 1e-12) {
    ok = false;
    notes.push_back("logit(ln 0.5) off");
  }
  std::string detail = Fmt("topKDrop(0)=%g spearman=+1/-1 shap(4,1)=%g logit(ln .5)=%.1e",
                           drop0, ShapKernelWeight(4, 1), logit);
  for (const auto& n : notes) detail += "; " + n;
  return {ok, detail};
}

// 7. Same seed gives byte-identical JSON across runs, thread counts and cache state.
Outcome Determinism() {
  const auto fx = Planted(40, 4, 77);
  AttributeOptions opts;
  opts.seed = 123;
  opts.heldOutFraction = 0.25;
  const std::string first = ToJson(Attribute(fx->task, opts));
  bool ok = ToJson(Attribute(fx->task, opts)) == first;
  for (std::size_t threads : {1, 3, 16}) {
    opts.scheduler.maxInFlight = threads;
    ok = ok && ToJson(Attribute(fx->task, opts)) == first;
  }

  const auto dir = std::filesystem::temp_directory_path() /
                   ("ctxcite-acceptance-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::size_t warmUpstream = 1;
  {
    auto inner = std::make_shared<PlantedLinearOracle>(fx->oracle);
    auto coldCache = std::make_shared<service::ScoreCache>(dir);
    service::CachingProvider cold(inner, coldCache, "planted-77");
    AttributionTask task = fx->task;
    task.provider = &cold;
    ok = ok && ToJson(Attribute(task, opts)) == first;
  }
  {
    auto inner = std::make_shared<PlantedLinearOracle>(fx->oracle);
    auto warmCache = std::make_shared<service::ScoreCache>(dir);
    service::CachingProvider warm(inner, warmCache, "planted-77");
    AttributionTask task = fx->task;
    task.provider = &warm;
    ok = ok && ToJson(Attribute(task, opts)) == first;
    warmUpstream = warm.upstreamCalls();
  }
  std::filesystem::remove_all(dir);
  ok = ok && warmUpstream == 0;
  return {ok, Fmt("identical JSON over repeat, 1/3/16 threads, cold and warm cache; "
                  "warm upstream calls %zu",
                  warmUpstream)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"planted sparse recovery", PlantedRecovery},
      {"leave-one-out agreement", LooAgreement},
      {"lasso correctness", LassoCorrectness},
      {"held-out RMSE trend", RmseTrend},
      {"poison detection", PoisonDetection},
      {"metric identities", MetricIdentities},
      {"determinism and cache transparency", Determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
