#include "ctxcite/service/remote_provider.hpp"

#include <fstream>
#include <httplib.h>
#include <json.hpp>

#include "ctxcite/error.hpp"

namespace ctxcite::service {
namespace {

using nlohmann::json;

std::string Join(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

const json& AtPointer(const json& body, const std::string& pointer) {
  try {
    return body.at(json::json_pointer(pointer));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider response lacks " + pointer + ": " + e.what());
  }
}

void ReadString(const json& j, const char* key, std::string& field) {
  if (j.contains(key)) field = j.at(key).get<std::string>();
}

}  // namespace

RemoteAdapter LoadAdapter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot read adapter file " + path);
  RemoteAdapter a;
  try {
    const json j = json::parse(in);
    ReadString(j, "endpoint", a.endpoint);
    ReadString(j, "model", a.model);
    ReadString(j, "prompt_field", a.promptField);
    ReadString(j, "max_tokens_field", a.maxTokensField);
    ReadString(j, "echo_field", a.echoField);
    ReadString(j, "logprobs_field", a.logprobsField);
    ReadString(j, "temperature_field", a.temperatureField);
    ReadString(j, "seed_field", a.seedField);
    ReadString(j, "tokens_pointer", a.tokensPointer);
    ReadString(j, "token_logprobs_pointer", a.tokenLogprobsPointer);
    ReadString(j, "context_too_long_marker", a.contextTooLongMarker);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadConfig, "bad adapter file " + path + ": " + e.what());
  }
  return a;
}

RemoteProvider::RemoteProvider(std::string baseUrl, std::string apiKey,
                               int timeoutMs, RemoteAdapter adapter)
    : baseUrl_(std::move(baseUrl)),
      apiKey_(std::move(apiKey)),
      timeoutMs_(timeoutMs),
      adapter_(std::move(adapter)) {}

std::string RemoteProvider::Id() const {
  return "remote:" + baseUrl_ + adapter_.endpoint + "#" + adapter_.model;
}

std::string RemoteProvider::Post(const std::string& body) const {
  httplib::Client client(baseUrl_);
  const auto seconds = timeoutMs_ / 1000;
  const auto micros = (timeoutMs_ % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!apiKey_.empty()) headers.emplace("Authorization", "Bearer " + apiKey_);

  const auto res = client.Post(adapter_.endpoint, headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnavailable,
                "cannot reach " + baseUrl_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 400 && !adapter_.contextTooLongMarker.empty() &&
      res->body.find(adapter_.contextTooLongMarker) != std::string::npos) {
    throw Error(ErrorCode::kContextTooLong, "provider rejected prompt: " + res->body);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider returned HTTP " + std::to_string(res->status) + ": " +
                    res->body.substr(0, 200));
  }
  return res->body;
}

RemoteProvider::EchoResult RemoteProvider::Echo(const std::string& text) const {
  json request;
  if (!adapter_.model.empty()) request["model"] = adapter_.model;
  request[adapter_.promptField] = text;
  request[adapter_.maxTokensField] = 0;
  request[adapter_.echoField] = true;
  request[adapter_.logprobsField] = 1;
  request[adapter_.temperatureField] = 0;

  json body;
  try {
    body = json::parse(Post(request.dump()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("provider returned invalid JSON: ") + e.what());
  }
  EchoResult out;
  try {
    out.tokens = AtPointer(body, adapter_.tokensPointer).get<std::vector<std::string>>();
    for (const json& lp : AtPointer(body, adapter_.tokenLogprobsPointer)) {
      out.logprobs.push_back(lp.is_null() ? std::nullopt
                                          : std::optional<double>(lp.get<double>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("malformed log-prob payload: ") + e.what());
  }
  if (out.tokens.size() != out.logprobs.size()) {
    throw Error(ErrorCode::kProviderUnavailable, "tokens and log-probs differ in length");
  }
  if (Join(out.tokens) != text) {
    throw Error(ErrorCode::kTokenizationMismatch,
                "echoed tokens do not reproduce the submitted text");
  }
  return out;
}

ScoredContinuation RemoteProvider::Generate(const Prompt& prompt, int maxTokens,
                                            std::optional<std::uint64_t> seed) const {
  if (maxTokens < 1) throw Error(ErrorCode::kInvalidArgument, "maxTokens must be ≥ 1");
  json request;
  if (!adapter_.model.empty()) request["model"] = adapter_.model;
  request[adapter_.promptField] = prompt.Render();
  request[adapter_.maxTokensField] = maxTokens;
  request[adapter_.logprobsField] = 1;
  if (seed) {
    request[adapter_.temperatureField] = 1.0;
    request[adapter_.seedField] = *seed;
  } else {
    request[adapter_.temperatureField] = 0;
  }
  ScoredContinuation out;
  try {
    const json body = json::parse(Post(request.dump()));
    out.tokens = AtPointer(body, adapter_.tokensPointer).get<std::vector<std::string>>();
    out.tokenLogProbs =
        AtPointer(body, adapter_.tokenLogprobsPointer).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("malformed generation payload: ") + e.what());
  }
  if (out.tokens.size() != out.tokenLogProbs.size() || out.tokens.empty()) {
    throw Error(ErrorCode::kProviderUnavailable, "generation returned no usable tokens");
  }
  for (double lp : out.tokenLogProbs) out.totalLogProb += lp;
  return out;
}

ScoredContinuation RemoteProvider::ScoreForced(
    const Prompt& prompt, std::span<const std::string> prefix,
    std::span<const std::string> continuation) const {
  if (continuation.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "continuation must be non-empty");
  }
  const std::string head = prompt.Render() + Join(prefix);
  const std::string tail = Join(continuation);
  const EchoResult echo = Echo(head + tail);

  std::size_t offset = 0;
  std::size_t first = 0;
  while (first < echo.tokens.size() && offset < head.size()) {
    offset += echo.tokens[first].size();
    ++first;
  }
  if (offset != head.size()) {
    throw Error(ErrorCode::kTokenizationMismatch,
                "a provider token spans the prefix/continuation boundary");
  }
  ScoredContinuation out;
  for (std::size_t i = first; i < echo.tokens.size(); ++i) {
    if (!echo.logprobs[i]) {
      throw Error(ErrorCode::kTokenizationMismatch,
                  "provider did not score continuation token " + std::to_string(i));
    }
    out.tokens.push_back(echo.tokens[i]);
    out.tokenLogProbs.push_back(*echo.logprobs[i]);
    out.totalLogProb += *echo.logprobs[i];
  }
  if (out.tokens.empty()) {
    throw Error(ErrorCode::kTokenizationMismatch, "no continuation tokens were scored");
  }
  return out;
}

std::vector<std::string> RemoteProvider::Tokenize(std::string_view text) const {
  return Echo(std::string(text)).tokens;
}

}  // namespace ctxcite::service
