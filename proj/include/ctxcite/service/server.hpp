#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "ctxcite/service/cache.hpp"
#include "ctxcite/service/config.hpp"
#include "ctxcite/service/jobs.hpp"
#include "ctxcite/service/provider_spec.hpp"

namespace httplib {
class Server;
}

namespace ctxcite::service {

// HTTP front end. All bodies are JSON; failures use {"code", "message"} with
// 400 (bad_request), 401 (unauthorized), 404 (not_found) or 502
// (provider_error).
//
//   POST /v1/generate      {context, query}                -> {response, tokens}
//   POST /v1/attribute     {context, query, response?, statement?, n?, alpha?,
//                           seed?}                          -> {jobId}
//   GET  /v1/jobs/{id}                                      -> JobRecord
//   POST /v1/verify        {..., k, question?, answer?}
//   POST /v1/prune         {context, query, k, ...}
//   POST /v1/poison-scan   {..., k}
//   GET  /v1/partitions?context=..&granularity=..           (POST also accepted)
//   GET  /v1/metrics                                        -> cache and call counters
//   GET  /*                                                 -> static UI bundle
class Server {
 public:
  // Provider calls are served from `cache` (when non-null) before reaching
  // the provider built from `spec`; only the latter count as providerCalls
  // and take a maxConcurrency slot.
  Server(ServiceConfig config, ProviderSpec spec, std::shared_ptr<ScoreCache> cache);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds an ephemeral port on config.host and returns it.
  int BindToAnyPort();
  // Serves on a port from BindToAnyPort() until Stop().
  bool ListenAfterBind();
  // Binds config.host:config.port and serves until Stop().
  bool Listen();
  void Stop();
  void WaitUntilReady() const;

  std::size_t providerCalls() const noexcept { return *providerCalls_; }

 private:
  void Routes();

  ServiceConfig config_;
  ProviderFactory factory_;
  std::shared_ptr<ScoreCache> cache_;
  std::shared_ptr<std::atomic<std::size_t>> providerCalls_;
  std::unique_ptr<httplib::Server> http_;
  JobManager jobs_;
};

}  // namespace ctxcite::service
