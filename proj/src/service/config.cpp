#include "ctxcite/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "ctxcite/error.hpp"

namespace ctxcite::service {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int ParseInt(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kBadConfig, key + " must be an integer, got '" + value + "'");
  }
}

}  // namespace

EnvLookup ProcessEnvironment() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') {
      return std::string(v);
    }
    return std::nullopt;
  };
}

void ApplyConfigFile(ServiceConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot read config file " + path);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadConfig,
                  path + ":" + std::to_string(lineNo) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key == "provider") config.provider = value;
    else if (key == "provider_key") config.providerKey = value;
    else if (key == "provider_timeout_ms") config.providerTimeoutMs = ParseInt(key, value);
    else if (key == "adapter") config.adapterFile = value;
    else if (key == "cache_dir") config.cacheDir = value;
    else if (key == "host") config.host = value;
    else if (key == "port") config.port = ParseInt(key, value);
    else if (key == "max_concurrency") config.maxConcurrency = static_cast<std::size_t>(ParseInt(key, value));
    else if (key == "max_attempts") config.maxAttempts = ParseInt(key, value);
    else if (key == "ui_dir") config.uiDir = value;
    else if (key == "bearer_token") config.bearerToken = value;
    else {
      throw Error(ErrorCode::kBadConfig,
                  path + ":" + std::to_string(lineNo) + ": unknown key '" + key + "'");
    }
  }
}

void ApplyEnvironment(ServiceConfig& config, const EnvLookup& env) {
  if (auto v = env("PROVIDER_URL")) config.provider = *v;
  if (auto v = env("PROVIDER_KEY")) config.providerKey = *v;
  if (auto v = env("PROVIDER_TIMEOUT_MS")) {
    config.providerTimeoutMs = ParseInt("PROVIDER_TIMEOUT_MS", *v);
  }
}

void ApplyOverrides(ServiceConfig& config, const ConfigOverrides& flags) {
  if (flags.provider) config.provider = *flags.provider;
  if (flags.providerKey) config.providerKey = *flags.providerKey;
  if (flags.providerTimeoutMs) config.providerTimeoutMs = *flags.providerTimeoutMs;
  if (flags.adapterFile) config.adapterFile = *flags.adapterFile;
  if (flags.cacheDir) config.cacheDir = *flags.cacheDir;
  if (flags.host) config.host = *flags.host;
  if (flags.port) config.port = *flags.port;
  if (flags.maxConcurrency) config.maxConcurrency = *flags.maxConcurrency;
  if (flags.uiDir) config.uiDir = *flags.uiDir;
  if (flags.bearerToken) config.bearerToken = *flags.bearerToken;
}

ServiceConfig ResolveConfig(const std::optional<std::string>& configFile,
                            const EnvLookup& env, const ConfigOverrides& flags) {
  ServiceConfig config;
  if (configFile) ApplyConfigFile(config, *configFile);
  ApplyEnvironment(config, env);
  ApplyOverrides(config, flags);
  if (config.maxConcurrency == 0) {
    throw Error(ErrorCode::kBadConfig, "max_concurrency must be ≥ 1");
  }
  return config;
}

}  // namespace ctxcite::service
