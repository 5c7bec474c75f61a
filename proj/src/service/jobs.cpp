#include "ctxcite/service/jobs.hpp"

#include <condition_variable>
#include <json.hpp>

#include "ctxcite/error.hpp"

namespace ctxcite::service {

struct JobManager::Entry {
  JobRecord record;
  Work work;
};

std::string_view JobStatusName(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "failed";
}

std::string ToJson(const JobRecord& record) {
  nlohmann::ordered_json j;
  j["jobId"] = record.jobId;
  j["status"] = JobStatusName(record.status);
  j["progress"] = {{"completed", record.completed}, {"total", record.total}};
  j["result"] = record.result ? nlohmann::ordered_json::parse(ToJson(*record.result))
                              : nlohmann::ordered_json(nullptr);
  if (record.errorCode) {
    j["error"] = {{"code", *record.errorCode}, {"message", record.errorMessage.value_or("")}};
  }
  return j.dump();
}

JobManager::JobManager(std::size_t workers) {
  if (workers == 0) workers = 1;
  for (std::size_t i = 0; i < workers; ++i) {
    workers_.emplace_back([this](std::stop_token stop) { WorkerLoop(stop); });
  }
}

JobManager::~JobManager() {
  for (auto& w : workers_) w.request_stop();
  changed_.notify_all();
  workers_.clear();
}

std::string JobManager::Submit(std::size_t total, Work work) {
  auto entry = std::make_shared<Entry>();
  entry->record.total = total;
  entry->work = std::move(work);
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "job-" + std::to_string(nextId_++);
    entry->record.jobId = id;
    jobs_[id] = entry;
    queue_.push_back(entry);
  }
  changed_.notify_all();
  return id;
}

std::optional<JobRecord> JobManager::Get(const std::string& jobId) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(jobId);
  if (it == jobs_.end()) return std::nullopt;
  return it->second->record;
}

JobRecord JobManager::Wait(const std::string& jobId) const {
  std::unique_lock lock(mu_);
  const auto it = jobs_.find(jobId);
  if (it == jobs_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown job " + jobId);
  const auto entry = it->second;
  changed_.wait(lock, [&] {
    return entry->record.status == JobStatus::kDone ||
           entry->record.status == JobStatus::kFailed;
  });
  return entry->record;
}

void JobManager::WorkerLoop(std::stop_token stop) {
  while (true) {
    std::shared_ptr<Entry> entry;
    {
      std::unique_lock lock(mu_);
      if (!changed_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      entry = queue_.front();
      queue_.erase(queue_.begin());
      entry->record.status = JobStatus::kRunning;
    }
    auto progress = [&](std::size_t completed, std::size_t total) {
      std::lock_guard lock(mu_);
      if (completed > entry->record.completed) entry->record.completed = completed;
      entry->record.total = total;
    };
    try {
      AttributionResult result = entry->work(progress);
      std::lock_guard lock(mu_);
      entry->record.result = std::move(result);
      entry->record.completed = entry->record.total;
      entry->record.status = JobStatus::kDone;
    } catch (const Error& e) {
      std::lock_guard lock(mu_);
      entry->record.errorCode = std::string(ErrorCodeName(e.code()));
      entry->record.errorMessage = e.what();
      entry->record.status = JobStatus::kFailed;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      entry->record.errorCode = "internal";
      entry->record.errorMessage = e.what();
      entry->record.status = JobStatus::kFailed;
    }
    entry->work = nullptr;
    changed_.notify_all();
  }
}

}  // namespace ctxcite::service
