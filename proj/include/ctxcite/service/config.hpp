#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace ctxcite::service {

struct ServiceConfig {
  // "http(s)://..." for a remote endpoint or a synthetic spec such as
  // "planted:d=10,k=2,seed=0".
  std::string provider;
  std::string providerKey;
  int providerTimeoutMs = 60000;
  std::string adapterFile;
  std::string cacheDir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t maxConcurrency = 8;
  int maxAttempts = 3;
  std::string uiDir;
  std::string bearerToken;
};

// Values given on the command line; unset fields fall through.
struct ConfigOverrides {
  std::optional<std::string> provider;
  std::optional<std::string> providerKey;
  std::optional<int> providerTimeoutMs;
  std::optional<std::string> adapterFile;
  std::optional<std::string> cacheDir;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::size_t> maxConcurrency;
  std::optional<std::string> uiDir;
  std::optional<std::string> bearerToken;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup ProcessEnvironment();

// key = value lines; '#' starts a comment. Unknown keys are rejected.
void ApplyConfigFile(ServiceConfig& config, const std::string& path);

// PROVIDER_URL, PROVIDER_KEY, PROVIDER_TIMEOUT_MS.
void ApplyEnvironment(ServiceConfig& config, const EnvLookup& env);

void ApplyOverrides(ServiceConfig& config, const ConfigOverrides& flags);

// Defaults < config file < environment < flags.
ServiceConfig ResolveConfig(const std::optional<std::string>& configFile,
                            const EnvLookup& env, const ConfigOverrides& flags);

}  // namespace ctxcite::service
