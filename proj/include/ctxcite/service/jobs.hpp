#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ctxcite/surrogate.hpp"

namespace ctxcite::service {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };

std::string_view JobStatusName(JobStatus status);

struct JobRecord {
  std::string jobId;
  JobStatus status = JobStatus::kQueued;
  std::size_t completed = 0;
  std::size_t total = 0;
  std::optional<AttributionResult> result;
  std::optional<std::string> errorCode;
  std::optional<std::string> errorMessage;
};

std::string ToJson(const JobRecord& record);

// Runs attribution jobs asynchronously on a bounded set of workers. Status
// only moves forward (queued -> running -> done|failed) and progress never
// decreases.
class JobManager {
 public:
  // The work callback receives a progress sink (completed, total).
  using Work = std::function<AttributionResult(
      const std::function<void(std::size_t, std::size_t)>& progress)>;

  explicit JobManager(std::size_t workers = 2);
  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string Submit(std::size_t total, Work work);
  std::optional<JobRecord> Get(const std::string& jobId) const;

  // Blocks until the job leaves queued/running; for tests and the CLI.
  JobRecord Wait(const std::string& jobId) const;

 private:
  struct Entry;
  void WorkerLoop(std::stop_token stop);

  mutable std::mutex mu_;
  mutable std::condition_variable_any changed_;
  std::map<std::string, std::shared_ptr<Entry>> jobs_;
  std::vector<std::shared_ptr<Entry>> queue_;
  std::size_t nextId_ = 1;
  std::vector<std::jthread> workers_;
};

}  // namespace ctxcite::service
