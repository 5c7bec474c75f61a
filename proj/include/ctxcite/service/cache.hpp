#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxcite/provider.hpp"

namespace ctxcite::service {

// One memoised provider call. `tokens` is filled for generations.
struct CacheRecord {
  std::string key;
  double totalLogProb = 0.0;
  std::vector<double> tokenLogProbs;
  std::vector<std::string> tokens;
  std::string createdAt;
};

std::string Sha256Hex(std::string_view data);

// Content hash of (provider id, call kind, rendered prompt, prefix,
// continuation). Fields are length-prefixed so boundaries cannot collide.
std::string CacheKey(std::string_view providerId, std::string_view kind,
                     std::string_view renderedPrompt,
                     std::span<const std::string> prefix,
                     std::span<const std::string> continuation);

std::string ToJsonLine(const CacheRecord& record);
// Nullopt for lines that do not parse as a record.
std::optional<CacheRecord> ParseCacheLine(std::string_view line);

// Append-only JSONL segments with an in-memory index. Every instance writes
// its own new segment; all existing segments are loaded on open and
// unreadable lines are skipped with a warning. An empty directory path keeps
// the cache in memory only.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir = {});

  std::optional<CacheRecord> Lookup(const std::string& key);
  void Insert(CacheRecord record);

  std::size_t size() const;
  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }
  std::size_t skippedLines() const noexcept { return skipped_; }

 private:
  void LoadSegments();

  std::filesystem::path dir_;
  std::filesystem::path segment_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::unordered_map<std::string, CacheRecord> index_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::size_t skipped_ = 0;
};

// Provider decorator that serves repeated calls from a ScoreCache.
class CachingProvider : public Provider {
 public:
  CachingProvider(std::shared_ptr<const Provider> inner,
                  std::shared_ptr<ScoreCache> cache, std::string id);

  std::string Id() const override { return id_; }
  bool IsSynthetic() const override { return inner_->IsSynthetic(); }
  ScoredContinuation Generate(const Prompt& prompt, int maxTokens,
                              std::optional<std::uint64_t> seed) const override;
  ScoredContinuation ScoreForced(
      const Prompt& prompt, std::span<const std::string> prefix,
      std::span<const std::string> continuation) const override;
  std::vector<std::string> Tokenize(std::string_view text) const override {
    return inner_->Tokenize(text);
  }

  // Calls forwarded to the wrapped provider.
  std::size_t upstreamCalls() const noexcept { return upstream_; }

 private:
  std::shared_ptr<const Provider> inner_;
  std::shared_ptr<ScoreCache> cache_;
  std::string id_;
  mutable std::atomic<std::size_t> upstream_{0};
};

}  // namespace ctxcite::service
