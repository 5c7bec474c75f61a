#include "ctxcite/service/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "ctxcite/applications.hpp"
#include "ctxcite/error.hpp"
#include "ctxcite/eval.hpp"
#include "ctxcite/synthetic.hpp"
#include "ctxcite/service/server.hpp"
#include "ctxcite/service/session.hpp"

namespace ctxcite::service {
namespace {

using json = nlohmann::ordered_json;

struct CommonFlags {
  std::string contextFile;
  std::optional<std::string> query;
  std::string responseFile;
  std::string statement;
  std::string granularity = "sentence";
  long long numAblations = 32;
  double alpha = 0.01;
  std::uint64_t seed = 0;
  std::string templateFile;
  double heldOut = 0.0;
  int maxTokens = 256;
  std::optional<std::uint64_t> generationSeed;

  std::optional<std::string> provider;
  std::optional<std::string> cacheDir;
  std::optional<std::string> configFile;
  std::optional<std::size_t> threads;
};

struct EvalFlags {
  std::vector<std::string> methods = {"contextcite", "loo"};
  std::vector<std::size_t> ks = {1, 3, 5};
  std::size_t ldsM = 64;
  std::size_t trials = 1;
  bool perSentence = false;
};

struct ServeFlags {
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> uiDir;
  std::optional<std::string> bearerToken;
};

std::string ReadFile(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, std::string("cannot read ") + what + " file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void AddCommon(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--context", f.contextFile, "Context text file");
  cmd.add_option("--query", f.query, "Query text");
  cmd.add_option("--response", f.responseFile, "Response text file; generated when absent");
  cmd.add_option("--statement", f.statement, "START:END character range of the response");
  cmd.add_option("--granularity", f.granularity, "sentence or word")
      ->check(CLI::IsMember({"sentence", "word"}));
  cmd.add_option("--num-ablations", f.numAblations, "Ablations per statement")
      ->capture_default_str();
  cmd.add_option("--alpha", f.alpha, "Lasso regularization")->capture_default_str();
  cmd.add_option("--seed", f.seed, "Sampling seed")->capture_default_str();
  cmd.add_option("--template", f.templateFile, "Prompt template file with {context} and {query}");
  cmd.add_option("--held-out", f.heldOut, "Fraction of ablations withheld to report RMSE");
  cmd.add_option("--max-tokens", f.maxTokens, "Generation length limit");
  cmd.add_option("--generation-seed", f.generationSeed, "Sample the response instead of greedy");
  cmd.add_option("--provider", f.provider, "Endpoint URL or synthetic spec such as planted:d=10,k=2");
  cmd.add_option("--cache", f.cacheDir, "Provider-call cache directory");
  cmd.add_option("--config", f.configFile, "key = value config file");
  cmd.add_option("--threads", f.threads, "Max provider calls in flight");
}

ServiceConfig Resolve(const CommonFlags& f, const EnvLookup& env, const ServeFlags* serve = nullptr) {
  ConfigOverrides o;
  o.provider = f.provider;
  o.cacheDir = f.cacheDir;
  o.maxConcurrency = f.threads;
  if (serve) {
    o.host = serve->host;
    o.port = serve->port;
    o.uiDir = serve->uiDir;
    o.bearerToken = serve->bearerToken;
  }
  return ResolveConfig(f.configFile, env, o);
}

struct Runtime {
  ServiceConfig config;
  ProviderSpec spec;
  std::shared_ptr<ScoreCache> cache;
};

Runtime MakeRuntime(const CommonFlags& f, const EnvLookup& env) {
  Runtime rt;
  rt.config = Resolve(f, env);
  if (rt.config.provider.empty()) {
    throw Error(ErrorCode::kBadConfig, "no provider configured (--provider, PROVIDER_URL or config)");
  }
  rt.spec = ParseProviderSpec(rt.config.provider);
  if (!rt.config.cacheDir.empty()) rt.cache = std::make_shared<ScoreCache>(rt.config.cacheDir);
  return rt;
}

std::string ContextText(const CommonFlags& f, const ProviderSpec& spec) {
  if (!f.contextFile.empty()) return ReadFile(f.contextFile, "context");
  if (spec.IsSynthetic()) {
    if (const auto d = spec.Size("d")) return SyntheticContext(*d);
  }
  throw Error(ErrorCode::kInvalidArgument, "--context is required");
}

RequestInputs Inputs(const CommonFlags& f, const ProviderSpec& spec) {
  RequestInputs in;
  in.context = ContextText(f, spec);
  in.query = f.query.value_or(std::string(kSummarizeQuery));
  if (!f.responseFile.empty()) in.response = ReadFile(f.responseFile, "response");
  if (!f.statement.empty()) in.statement = ParseCharRange(f.statement);
  in.granularity = ParseGranularity(f.granularity);
  if (!f.templateFile.empty()) in.templ = ReadFile(f.templateFile, "template");
  in.maxTokens = f.maxTokens;
  in.generationSeed = f.generationSeed;
  return in;
}

AttributeOptions Options(const CommonFlags& f, const ServiceConfig& config) {
  if (f.numAblations < 1) throw Error(ErrorCode::kInvalidArgument, "n must be ≥ 1");
  if (!(f.alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be ≥ 0");
  if (!(f.heldOut >= 0.0 && f.heldOut < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "held-out fraction must be in [0, 1)");
  }
  AttributeOptions o;
  o.numAblations = static_cast<std::size_t>(f.numAblations);
  o.lambda = f.alpha;
  o.seed = f.seed;
  o.heldOutFraction = f.heldOut;
  o.scheduler.maxInFlight = config.maxConcurrency;
  o.scheduler.maxAttempts = config.maxAttempts;
  return o;
}

std::string Clip(std::string_view text, std::size_t width) {
  std::string s(text);
  for (char& c : s) {
    if (c == '\n' || c == '\t') c = ' ';
  }
  if (s.size() > width) s = s.substr(0, width - 3) + "...";
  return s;
}

void PrintTable(std::ostream& err, const SourcePartition& p, std::span<const double> scores,
                std::size_t topK) {
  const auto order = TopK(scores, topK == 0 ? scores.size() : topK);
  err << "rank  source     score  text\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    char line[64];
    std::snprintf(line, sizeof line, "%4zu  %6zu  %8.4f  ", r + 1, i, scores[i]);
    err << line << Clip(p.sources[i].text, 72) << '\n';
  }
}

template <class T>
std::vector<T> SplitList(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      std::size_t used = 0;
      long long v = -1;
      try {
        v = std::stoll(item, &used);
      } catch (const std::exception&) {
      }
      if (v < 0 || used != item.size()) {
        throw Error(ErrorCode::kInvalidArgument, std::string("bad ") + what + " entry '" + item + "'");
      }
      out.push_back(static_cast<T>(v));
    }
  }
  return out;
}

int CmdAttribute(const CommonFlags& f, std::size_t topK, const EnvLookup& env, std::ostream& out,
                 std::ostream& err) {
  const Runtime rt = MakeRuntime(f, env);
  const AttributeOptions opts = Options(f, rt.config);
  const PreparedRequest prep(Inputs(f, rt.spec), MakeProviderFactory(rt.spec, rt.config, rt.cache));
  const AttributionResult result = Attribute(prep.Task(), opts);
  out << ToJson(result) << '\n';
  err << "statement: " << Clip(prep.statement().Text(), 100) << '\n';
  PrintTable(err, prep.partition(), result.weights, topK);
  return kExitOk;
}

std::vector<CharRange> EvalStatements(const PreparedRequest& prep, bool perSentence) {
  if (!perSentence) {
    const auto& s = prep.statement();
    return {{s.charStart, s.charEnd}};
  }
  std::vector<CharRange> out;
  for (const auto& span : SegmentSentences(prep.response())) {
    out.push_back({span.charStart, span.charEnd});
  }
  return out;
}

int CmdEval(const CommonFlags& f, const EvalFlags& e, const EnvLookup& env, std::ostream& out,
            std::ostream& err) {
  if (e.methods.empty()) throw Error(ErrorCode::kInvalidArgument, "--methods is empty");
  for (const auto& m : e.methods) {
    if (m != "contextcite" && m != "loo") {
      throw Error(ErrorCode::kInvalidArgument, "unknown method '" + m + "'");
    }
  }
  if (e.ks.empty()) throw Error(ErrorCode::kInvalidArgument, "--k-list is empty");
  if (e.trials == 0) throw Error(ErrorCode::kInvalidArgument, "--trials must be ≥ 1");
  const Runtime rt = MakeRuntime(f, env);
  AttributeOptions base = Options(f, rt.config);

  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> sums;
  for (std::size_t t = 0; t < e.trials; ++t) {
    const ProviderSpec spec = rt.spec.WithSeedOffset(t);
    const PreparedRequest prep(Inputs(f, spec), MakeProviderFactory(spec, rt.config, rt.cache));
    const auto statements = EvalStatements(prep, e.perSentence);
    for (std::size_t si = 0; si < statements.size(); ++si) {
      AttributionTask task = prep.Task();
      task.statement = SelectStatement(prep.response(),
                                       TokenCharSpans(prep.response(), prep.responseTokens()),
                                       statements[si]);
      EvalOptions eo;
      eo.ks = e.ks;
      eo.ldsAblations = e.ldsM;
      eo.seed = f.seed + t;
      eo.scheduler = base.scheduler;
      for (const auto& method : e.methods) {
        std::vector<double> scores;
        if (method == "contextcite") {
          AttributeOptions opts = base;
          opts.seed = f.seed + t;
          scores = Attribute(task, opts).weights;
        } else {
          scores = LeaveOneOut(task, base.scheduler);
        }
        const EvalReport report = Evaluate(task, scores, method, eo);
        json line{{"trial", t}, {"statement", si},
                  {"charStart", task.statement.charStart}, {"charEnd", task.statement.charEnd}};
        const json parsed = json::parse(ToJson(report));
        for (const auto& [key, value] : parsed.items()) line[key] = value;
        line["scores"] = scores;
        out << line.dump() << '\n';
        auto& acc = sums[method];
        for (const auto& [k, drop] : report.topKDrops) {
          auto& s = acc["top" + std::to_string(k) + "Drop"];
          s.first += drop;
          ++s.second;
        }
        acc["lds"].first += report.lds;
        ++acc["lds"].second;
      }
    }
  }
  for (const auto& method : e.methods) {
    json summary{{"method", method}};
    for (const auto& [name, s] : sums[method]) summary["mean_" + name] = s.first / s.second;
    err << summary.dump() << '\n';
  }
  return kExitOk;
}

int CmdVerify(const CommonFlags& f, std::size_t k, const std::optional<std::string>& question,
              const std::optional<std::string>& answer, const EnvLookup& env, std::ostream& out,
              std::ostream& err) {
  const Runtime rt = MakeRuntime(f, env);
  const AttributeOptions opts = Options(f, rt.config);
  const PreparedRequest prep(Inputs(f, rt.spec), MakeProviderFactory(rt.spec, rt.config, rt.cache));
  const AttributionResult attribution = Attribute(prep.Task(), opts);
  const VerificationResult v =
      VerifyStatement(prep.provider(), prep.partition(), attribution.weights, k,
                      question.value_or(prep.inputs().query),
                      answer.value_or(std::string(prep.statement().Text())));
  json body = json::parse(ToJson(v));
  body["attribution"] = json::parse(ToJson(attribution));
  out << body.dump() << '\n';
  err << "merged: " << Clip(v.mergedStatement, 100) << "\nscore: " << v.score << '\n';
  return kExitOk;
}

int CmdPrune(const CommonFlags& f, std::size_t k, const EnvLookup& env, std::ostream& out,
             std::ostream& err) {
  const Runtime rt = MakeRuntime(f, env);
  const RequestInputs in = Inputs(f, rt.spec);
  PruneOptions opts;
  opts.k = k;
  opts.templ = in.templ;
  opts.maxTokens = in.maxTokens;
  opts.generationSeed = in.generationSeed;
  opts.attribute = Options(f, rt.config);
  ValidateTemplate(opts.templ);
  const SourcePartition partition = PartitionText(in.context, in.granularity);
  const auto provider = MakeProviderFactory(rt.spec, rt.config, rt.cache)(partition);
  const PruneResult r = PruneAndRegenerate(*provider, partition, in.query, opts);
  json kept = json::array();
  for (const auto& s : r.prunedPartition.sources) kept.push_back(s.text);
  json body{{"originalResponse", r.originalResponse.Text()},
            {"newResponse", r.newResponse.Text()},
            {"prunedContext", r.prunedPartition.contextText},
            {"keptSources", kept},
            {"attribution", json::parse(ToJson(r.attribution))}};
  out << body.dump() << '\n';
  err << "original: " << Clip(r.originalResponse.Text(), 100) << "\npruned:   "
      << Clip(r.newResponse.Text(), 100) << '\n';
  return kExitOk;
}

int CmdPoison(const CommonFlags& f, std::size_t k, const EnvLookup& env, std::ostream& out,
              std::ostream& err) {
  const Runtime rt = MakeRuntime(f, env);
  const AttributeOptions opts = Options(f, rt.config);
  const PreparedRequest prep(Inputs(f, rt.spec), MakeProviderFactory(rt.spec, rt.config, rt.cache));
  const AttributionResult attribution = Attribute(prep.Task(), opts);
  const PoisonFlagReport report = DetectPoison(attribution.weights, k);
  json body = json::parse(ToJson(report));
  body["attribution"] = json::parse(ToJson(attribution));
  out << body.dump() << '\n';
  PrintTable(err, prep.partition(), attribution.weights, k);
  return kExitOk;
}

int CmdServe(const CommonFlags& f, const ServeFlags& s, const EnvLookup& env, std::ostream& err) {
  const ServiceConfig config = Resolve(f, env, &s);
  if (config.provider.empty()) {
    throw Error(ErrorCode::kBadConfig, "no provider configured (--provider, PROVIDER_URL or config)");
  }
  const ProviderSpec spec = ParseProviderSpec(config.provider);
  auto cache = std::make_shared<ScoreCache>(config.cacheDir);
  Server server(config, spec, cache);
  err << "listening on http://" << config.host << ':' << config.port << '\n';
  err.flush();
  if (!server.Listen()) {
    throw Error(ErrorCode::kBadConfig,
                "cannot listen on " + config.host + ":" + std::to_string(config.port));
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           const EnvLookup& env) {
  CLI::App app{"Attribute model statements to context sources", "ctxcite"};
  app.require_subcommand(1);

  CommonFlags common;
  std::size_t topK = 0;
  std::size_t k = 0;
  std::optional<std::string> question;
  std::optional<std::string> answer;
  EvalFlags evalFlags;
  std::string methods = "contextcite,loo";
  std::string kList = "1,3,5";
  ServeFlags serveFlags;

  auto* attribute = app.add_subcommand("attribute", "Attribute a statement to context sources");
  AddCommon(*attribute, common);
  attribute->add_option("--top-k", topK, "Rows in the ranked table (0 = all)");

  auto* eval = app.add_subcommand("eval", "Top-k drop and LDS for attribution methods");
  AddCommon(*eval, common);
  eval->add_option("--methods", methods, "Comma list of contextcite, loo")->capture_default_str();
  eval->add_option("--k-list", kList, "Comma list of k for the top-k drop")->capture_default_str();
  eval->add_option("--lds-m", evalFlags.ldsM, "Eval ablations for LDS")->capture_default_str();
  eval->add_option("--trials", evalFlags.trials, "Seeded trials")->capture_default_str();
  eval->add_flag("--per-sentence", evalFlags.perSentence, "Evaluate each response sentence");

  auto* verify = app.add_subcommand("verify", "Verify a statement against its top-k sources");
  AddCommon(*verify, common);
  verify->add_option("--k", k, "Sources kept")->required();
  verify->add_option("--question", question, "Question for the merge step (default: query)");
  verify->add_option("--answer", answer, "Answer for the merge step (default: statement)");

  auto* prune = app.add_subcommand("prune", "Regenerate from the top-k sources");
  AddCommon(*prune, common);
  prune->add_option("--k", k, "Sources kept")->required();

  auto* poison = app.add_subcommand("poison-scan", "Flag the top-k sources of a response");
  AddCommon(*poison, common);
  poison->add_option("--k,--top-k", k, "Sources flagged")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--provider", common.provider, "Endpoint URL or synthetic spec");
  serve->add_option("--cache", common.cacheDir, "Provider-call cache directory");
  serve->add_option("--config", common.configFile, "key = value config file");
  serve->add_option("--threads", common.threads, "Max provider calls in flight");
  serve->add_option("--host", serveFlags.host, "Bind address");
  serve->add_option("--port", serveFlags.port, "Port");
  serve->add_option("--ui-dir", serveFlags.uiDir, "Static UI bundle directory");
  serve->add_option("--bearer-token", serveFlags.bearerToken, "Required Authorization token");

  std::vector<const char*> argv{"ctxcite"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }

  try {
    if (*attribute) return CmdAttribute(common, topK, env, out, err);
    if (*eval) {
      evalFlags.methods = SplitList<std::string>(methods, "method");
      evalFlags.ks = SplitList<std::size_t>(kList, "k-list");
      return CmdEval(common, evalFlags, env, out, err);
    }
    if (*verify) return CmdVerify(common, k, question, answer, env, out, err);
    if (*prune) return CmdPrune(common, k, env, out, err);
    if (*poison) return CmdPoison(common, k, env, out, err);
    if (*serve) return CmdServe(common, serveFlags, env, err);
  } catch (const Error& e) {
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << '\n';
    return e.IsProviderFailure() ? kExitProviderFailure : kExitBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}

}  // namespace ctxcite::service
