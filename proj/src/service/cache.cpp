#include "ctxcite/service/cache.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <json.hpp>
#include <unistd.h>

#include "ctxcite/error.hpp"

namespace ctxcite::service {
namespace {

void AppendField(std::string& buf, std::string_view field) {
  buf += std::to_string(field.size());
  buf += ':';
  buf += field;
}

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string CacheKey(std::string_view providerId, std::string_view kind,
                     std::string_view renderedPrompt,
                     std::span<const std::string> prefix,
                     std::span<const std::string> continuation) {
  std::string buf;
  AppendField(buf, providerId);
  AppendField(buf, kind);
  AppendField(buf, renderedPrompt);
  buf += std::to_string(prefix.size()) + "|";
  for (const auto& t : prefix) AppendField(buf, t);
  buf += std::to_string(continuation.size()) + "|";
  for (const auto& t : continuation) AppendField(buf, t);
  return Sha256Hex(buf);
}

std::string ToJsonLine(const CacheRecord& r) {
  nlohmann::ordered_json j;
  j["key"] = r.key;
  j["totalLogProb"] = r.totalLogProb;
  j["tokenLogProbs"] = r.tokenLogProbs;
  if (!r.tokens.empty()) j["tokens"] = r.tokens;
  j["createdAt"] = r.createdAt;
  return j.dump();
}

std::optional<CacheRecord> ParseCacheLine(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    CacheRecord r;
    r.key = j.at("key").get<std::string>();
    r.totalLogProb = j.at("totalLogProb").get<double>();
    r.tokenLogProbs = j.at("tokenLogProbs").get<std::vector<double>>();
    if (j.contains("tokens")) r.tokens = j["tokens"].get<std::vector<std::string>>();
    r.createdAt = j.value("createdAt", "");
    if (r.key.size() != 64) return std::nullopt;
    return r;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

ScoreCache::ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kBadConfig,
                "cannot create cache directory " + dir_.string() + ": " + ec.message());
  }
  LoadSegments();
  const auto stamp = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  segment_ = dir_ / ("segment-" + std::to_string(stamp) + "-" +
                     std::to_string(::getpid()) + ".jsonl");
}

void ScoreCache::LoadSegments() {
  std::vector<std::filesystem::path> segments;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      segments.push_back(entry.path());
    }
  }
  std::sort(segments.begin(), segments.end());
  for (const auto& path : segments) {
    std::ifstream in(path);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
      ++lineNo;
      if (line.empty()) continue;
      if (auto record = ParseCacheLine(line)) {
        index_[record->key] = std::move(*record);
      } else {
        ++skipped_;
        std::clog << "ctxcite: skipping corrupt cache line " << path.filename().string()
                  << ":" << lineNo << "\n";
      }
    }
  }
}

std::optional<CacheRecord> ScoreCache::Lookup(const std::string& key) {
  std::lock_guard lock(mu_);
  const auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void ScoreCache::Insert(CacheRecord record) {
  if (record.createdAt.empty()) record.createdAt = UtcTimestamp();
  std::lock_guard lock(mu_);
  if (!segment_.empty()) {
    if (!out_.is_open()) out_.open(segment_, std::ios::app);
    out_ << ToJsonLine(record) << '\n';
    out_.flush();
  }
  index_[record.key] = std::move(record);
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

CachingProvider::CachingProvider(std::shared_ptr<const Provider> inner,
                                 std::shared_ptr<ScoreCache> cache,
                                 std::string id)
    : inner_(std::move(inner)), cache_(std::move(cache)), id_(std::move(id)) {}

ScoredContinuation CachingProvider::Generate(
    const Prompt& prompt, int maxTokens, std::optional<std::uint64_t> seed) const {
  const std::string params = "generate:" + std::to_string(maxTokens) + ":" +
                             (seed ? std::to_string(*seed) : "greedy");
  const std::string key = CacheKey(id_, params, prompt.Render(), {}, {});
  if (auto hit = cache_->Lookup(key)) {
    return ScoredContinuation{std::move(hit->tokens), std::move(hit->tokenLogProbs),
                              hit->totalLogProb};
  }
  ++upstream_;
  ScoredContinuation out = inner_->Generate(prompt, maxTokens, seed);
  cache_->Insert({key, out.totalLogProb, out.tokenLogProbs, out.tokens, {}});
  return out;
}

ScoredContinuation CachingProvider::ScoreForced(
    const Prompt& prompt, std::span<const std::string> prefix,
    std::span<const std::string> continuation) const {
  const std::string key =
      CacheKey(id_, "score", prompt.Render(), prefix, continuation);
  if (auto hit = cache_->Lookup(key)) {
    return ScoredContinuation{{continuation.begin(), continuation.end()},
                              std::move(hit->tokenLogProbs), hit->totalLogProb};
  }
  ++upstream_;
  ScoredContinuation out = inner_->ScoreForced(prompt, prefix, continuation);
  cache_->Insert({key, out.totalLogProb, out.tokenLogProbs, {}, {}});
  return out;
}

}  // namespace ctxcite::service
