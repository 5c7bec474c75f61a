#include "ctxcite/service/server.hpp"

#include <httplib.h>

#include <condition_variable>
#include <json.hpp>
#include <mutex>

#include "ctxcite/applications.hpp"
#include "ctxcite/error.hpp"
#include "ctxcite/service/session.hpp"

namespace ctxcite::service {
namespace {

using json = nlohmann::ordered_json;

// Caps provider calls in flight across all requests and counts them.
class GatedProvider : public Provider {
 public:
  struct Gate {
    explicit Gate(std::size_t limit) : limit(limit == 0 ? 1 : limit) {}
    std::mutex mu;
    std::condition_variable cv;
    std::size_t limit;
    std::size_t inFlight = 0;
  };

  GatedProvider(std::shared_ptr<const Provider> inner, std::shared_ptr<Gate> gate,
                std::shared_ptr<std::atomic<std::size_t>> calls)
      : inner_(std::move(inner)), gate_(std::move(gate)), calls_(std::move(calls)) {}

  std::string Id() const override { return inner_->Id(); }
  bool IsSynthetic() const override { return inner_->IsSynthetic(); }

  ScoredContinuation Generate(const Prompt& prompt, int maxTokens,
                              std::optional<std::uint64_t> seed) const override {
    Slot slot(*gate_);
    ++*calls_;
    return inner_->Generate(prompt, maxTokens, seed);
  }

  ScoredContinuation ScoreForced(const Prompt& prompt, std::span<const std::string> prefix,
                                 std::span<const std::string> continuation) const override {
    Slot slot(*gate_);
    ++*calls_;
    return inner_->ScoreForced(prompt, prefix, continuation);
  }

  std::vector<std::string> Tokenize(std::string_view text) const override {
    Slot slot(*gate_);
    return inner_->Tokenize(text);
  }

 private:
  struct Slot {
    explicit Slot(Gate& g) : gate(g) {
      std::unique_lock lock(gate.mu);
      gate.cv.wait(lock, [&] { return gate.inFlight < gate.limit; });
      ++gate.inFlight;
    }
    ~Slot() {
      {
        std::lock_guard lock(gate.mu);
        --gate.inFlight;
      }
      gate.cv.notify_one();
    }
    Gate& gate;
  };

  std::shared_ptr<const Provider> inner_;
  std::shared_ptr<Gate> gate_;
  std::shared_ptr<std::atomic<std::size_t>> calls_;
};

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

void SendError(httplib::Response& res, int status, const std::string& code,
               const std::string& message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

void SendJson(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler and maps failures onto the error envelope.
template <class F>
void Guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const HttpError& e) {
    SendError(res, e.status, e.code, e.message);
  } catch (const json::exception& e) {
    SendError(res, 400, "bad_request", e.what());
  } catch (const Error& e) {
    const std::string message = std::string(ErrorCodeName(e.code())) + ": " + e.what();
    if (e.IsProviderFailure()) {
      SendError(res, 502, "provider_error", message);
    } else {
      SendError(res, 400, "bad_request", message);
    }
  } catch (const std::exception& e) {
    SendError(res, 500, "internal", e.what());
  }
}

json ParseBody(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw HttpError{400, "bad_request", "request body must be a JSON object"};
  }
  return body;
}

std::string RequiredString(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw HttpError{400, "bad_request", std::string("missing string field '") + key + "'"};
  }
  return it->get<std::string>();
}

std::size_t RequiredK(const json& body) {
  const auto it = body.find("k");
  if (it == body.end() || !it->is_number_unsigned() || it->get<std::size_t>() == 0) {
    throw HttpError{400, "bad_request", "field 'k' must be a positive integer"};
  }
  return it->get<std::size_t>();
}

CharRange StatementField(const json& value) {
  if (value.is_string()) return ParseCharRange(value.get<std::string>());
  if (value.is_object()) {
    return {value.at("start").get<std::size_t>(), value.at("end").get<std::size_t>()};
  }
  if (value.is_array() && value.size() == 2) {
    return {value[0].get<std::size_t>(), value[1].get<std::size_t>()};
  }
  throw HttpError{400, "bad_request", "statement must be \"START:END\" or {start, end}"};
}

RequestInputs InputsFrom(const json& body) {
  RequestInputs in;
  in.context = RequiredString(body, "context");
  in.query = RequiredString(body, "query");
  if (body.contains("response") && !body["response"].is_null()) {
    in.response = body["response"].get<std::string>();
  }
  if (body.contains("statement") && !body["statement"].is_null()) {
    in.statement = StatementField(body["statement"]);
  }
  if (body.contains("granularity")) {
    in.granularity = ParseGranularity(body["granularity"].get<std::string>());
  }
  if (body.contains("template")) in.templ = body["template"].get<std::string>();
  if (body.contains("maxTokens")) in.maxTokens = body["maxTokens"].get<int>();
  if (body.contains("generationSeed")) {
    in.generationSeed = body["generationSeed"].get<std::uint64_t>();
  }
  return in;
}

AttributeOptions AttributeFrom(const json& body, const ServiceConfig& config) {
  AttributeOptions opts;
  const auto n = body.value("n", std::int64_t{32});
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be ≥ 1");
  opts.numAblations = static_cast<std::size_t>(n);
  opts.lambda = body.value("alpha", 0.01);
  opts.seed = body.value("seed", std::uint64_t{0});
  opts.heldOutFraction = body.value("heldOut", 0.0);
  opts.scheduler.maxInFlight = config.maxConcurrency;
  opts.scheduler.maxAttempts = config.maxAttempts;
  return opts;
}

json Parsed(const std::string& text) { return json::parse(text); }

json PartitionJson(const SourcePartition& p) {
  json sources = json::array();
  for (const auto& s : p.sources) {
    sources.push_back({{"index", s.index},
                       {"charStart", s.charStart},
                       {"charEnd", s.charEnd},
                       {"text", s.text}});
  }
  json groups = json::array();
  for (const auto& g : p.groups) {
    groups.push_back({{"header", g.header}, {"members", g.memberIndices}});
  }
  return {{"granularity", GranularityName(p.granularity)},
          {"d", p.sources.size()},
          {"sources", sources},
          {"groups", groups}};
}

json StatementJson(const PreparedRequest& prep) {
  const auto& s = prep.statement();
  return {{"text", std::string(s.Text())},
          {"charStart", s.charStart},
          {"charEnd", s.charEnd},
          {"tokenStart", s.tokenStart},
          {"tokenEnd", s.tokenEnd}};
}

}  // namespace

Server::Server(ServiceConfig config, ProviderSpec spec, std::shared_ptr<ScoreCache> cache)
    : config_(std::move(config)),
      cache_(std::move(cache)),
      providerCalls_(std::make_shared<std::atomic<std::size_t>>(0)),
      http_(std::make_unique<httplib::Server>()),
      jobs_(2) {
  auto gate = std::make_shared<GatedProvider::Gate>(config_.maxConcurrency);
  factory_ = MakeProviderFactory(
      spec, config_, cache_,
      [gate, calls = providerCalls_](std::shared_ptr<const Provider> inner)
          -> std::shared_ptr<const Provider> {
        return std::make_shared<GatedProvider>(std::move(inner), gate, calls);
      });
  Routes();
}

Server::~Server() { Stop(); }

int Server::BindToAnyPort() { return http_->bind_to_any_port(config_.host); }

bool Server::ListenAfterBind() { return http_->listen_after_bind(); }

bool Server::Listen() { return http_->listen(config_.host, config_.port); }

void Server::Stop() {
  if (http_) http_->stop();
}

void Server::WaitUntilReady() const { http_->wait_until_ready(); }

void Server::Routes() {
  auto& http = *http_;

  if (!config_.bearerToken.empty()) {
    http.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.path.rfind("/v1/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + config_.bearerToken) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      SendError(res, 401, "unauthorized", "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  http.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      RequestInputs in = InputsFrom(body);
      in.response.reset();
      in.statement.reset();
      const PreparedRequest prep(in, factory_);
      SendJson(res, {{"response", prep.response()}, {"tokens", prep.responseTokens()}});
    });
  });

  http.Post("/v1/attribute", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      auto prep = std::make_shared<PreparedRequest>(InputsFrom(body), factory_);
      AttributeOptions opts = AttributeFrom(body, config_);
      const std::string id = jobs_.Submit(
          opts.numAblations, [prep, opts](const auto& progress) mutable {
            opts.scheduler.onProgress = progress;
            return Attribute(prep->Task(), opts);
          });
      SendJson(res, {{"jobId", id}}, 202);
    });
  });

  http.Get(R"(/v1/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const auto record = jobs_.Get(req.matches[1]);
      if (!record) throw HttpError{404, "not_found", "unknown job " + std::string(req.matches[1])};
      res.set_content(ToJson(*record), "application/json");
    });
  });

  http.Post("/v1/verify", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      const std::size_t k = RequiredK(body);
      const PreparedRequest prep(InputsFrom(body), factory_);
      const AttributionResult attribution = Attribute(prep.Task(), AttributeFrom(body, config_));
      const std::string question = body.value("question", prep.inputs().query);
      const std::string answer = body.value("answer", std::string(prep.statement().Text()));
      const VerificationResult v = VerifyStatement(prep.provider(), prep.partition(),
                                                   attribution.weights, k, question, answer);
      SendJson(res, {{"verification", Parsed(ToJson(v))},
                     {"statement", StatementJson(prep)},
                     {"attribution", Parsed(ToJson(attribution))}});
    });
  });

  http.Post("/v1/prune", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      const RequestInputs in = InputsFrom(body);
      PruneOptions opts;
      opts.k = RequiredK(body);
      opts.templ = in.templ;
      opts.maxTokens = in.maxTokens;
      opts.generationSeed = in.generationSeed;
      opts.attribute = AttributeFrom(body, config_);
      ValidateTemplate(opts.templ);
      const SourcePartition partition = PartitionText(in.context, in.granularity);
      const auto provider = factory_(partition);
      const PruneResult r = PruneAndRegenerate(*provider, partition, in.query, opts);
      json kept = json::array();
      for (const auto& s : r.prunedPartition.sources) kept.push_back(s.text);
      SendJson(res, {{"originalResponse", r.originalResponse.Text()},
                     {"newResponse", r.newResponse.Text()},
                     {"prunedContext", r.prunedPartition.contextText},
                     {"keptSources", kept},
                     {"attribution", Parsed(ToJson(r.attribution))}});
    });
  });

  http.Post("/v1/poison-scan", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      const std::size_t k = RequiredK(body);
      const PreparedRequest prep(InputsFrom(body), factory_);
      const AttributionResult attribution = Attribute(prep.Task(), AttributeFrom(body, config_));
      const PoisonFlagReport report = DetectPoison(attribution.weights, k);
      json flagged = json::array();
      for (const std::size_t i : report.flagged) {
        flagged.push_back({{"index", i}, {"text", prep.partition().sources[i].text}});
      }
      SendJson(res, {{"report", Parsed(ToJson(report))},
                     {"sources", flagged},
                     {"attribution", Parsed(ToJson(attribution))}});
    });
  });

  auto partitions = [](const std::string& context, const std::string& granularity,
                       httplib::Response& res) {
    const SourcePartition p =
        PartitionText(context, ParseGranularity(granularity.empty() ? "sentence" : granularity));
    SendJson(res, PartitionJson(p));
  };
  http.Get("/v1/partitions", [partitions](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      if (!req.has_param("context")) {
        throw HttpError{400, "bad_request", "missing query parameter 'context'"};
      }
      partitions(req.get_param_value("context"), req.get_param_value("granularity"), res);
    });
  });
  http.Post("/v1/partitions", [partitions](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = ParseBody(req);
      partitions(RequiredString(body, "context"), body.value("granularity", std::string()), res);
    });
  });

  http.Get("/v1/metrics", [this](const httplib::Request&, httplib::Response& res) {
    json body{{"providerCalls", providerCalls()}};
    body["cacheHits"] = cache_ ? cache_->hits() : 0;
    body["cacheMisses"] = cache_ ? cache_->misses() : 0;
    body["cacheEntries"] = cache_ ? cache_->size() : 0;
    SendJson(res, body);
  });

  if (!config_.uiDir.empty()) http.set_mount_point("/", config_.uiDir);

  http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      SendError(res, 404, "not_found", "no route for " + req.method + " " + req.path);
    }
  });
}

}  // namespace ctxcite::service
