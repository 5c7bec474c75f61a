#pragma once

#include <string>

#include "ctxcite/provider.hpp"

namespace ctxcite::service {

// Maps the engine's needs onto a completions-style HTTP API. Pointers are
// JSON pointers into the response body. Defaults follow the common
// "/v1/completions" shape with echo scoring.
struct RemoteAdapter {
  std::string endpoint = "/v1/completions";
  std::string model;
  std::string promptField = "prompt";
  std::string maxTokensField = "max_tokens";
  std::string echoField = "echo";
  std::string logprobsField = "logprobs";
  std::string temperatureField = "temperature";
  std::string seedField = "seed";
  std::string tokensPointer = "/choices/0/logprobs/tokens";
  std::string tokenLogprobsPointer = "/choices/0/logprobs/token_logprobs";
  // Substring of an HTTP 400 body that signals a token-limit overflow.
  std::string contextTooLongMarker = "maximum context length";
};

// Reads an adapter JSON file; absent fields keep their defaults.
RemoteAdapter LoadAdapter(const std::string& path);

class RemoteProvider : public Provider {
 public:
  RemoteProvider(std::string baseUrl, std::string apiKey, int timeoutMs,
                 RemoteAdapter adapter = {});

  std::string Id() const override;

  ScoredContinuation Generate(const Prompt& prompt, int maxTokens,
                              std::optional<std::uint64_t> seed) const override;

  // Echo-scores prompt + prefix + continuation and keeps the log-probs of
  // the tokens after the prefix. A token straddling the boundary raises
  // TokenizationMismatch rather than re-tokenising.
  ScoredContinuation ScoreForced(
      const Prompt& prompt, std::span<const std::string> prefix,
      std::span<const std::string> continuation) const override;

  std::vector<std::string> Tokenize(std::string_view text) const override;

 private:
  struct EchoResult {
    std::vector<std::string> tokens;
    std::vector<std::optional<double>> logprobs;
  };
  EchoResult Echo(const std::string& text) const;
  std::string Post(const std::string& body) const;

  std::string baseUrl_;
  std::string apiKey_;
  int timeoutMs_;
  RemoteAdapter adapter_;
};

}  // namespace ctxcite::service
