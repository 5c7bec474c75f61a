#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxcite/provider.hpp"
#include "ctxcite/segmentation.hpp"
#include "ctxcite/service/provider_spec.hpp"
#include "ctxcite/surrogate.hpp"

namespace ctxcite::service {

// Inputs shared by the CLI verbs and the HTTP endpoints.
struct RequestInputs {
  std::string context;
  std::string query;
  std::optional<std::string> response;     // generated when absent
  std::optional<CharRange> statement;      // whole response when absent
  Granularity granularity = Granularity::kSentence;
  std::string templ = std::string(kDefaultTemplate);
  int maxTokens = 256;
  std::optional<std::uint64_t> generationSeed;
};

// A request resolved into a partition, provider, response tokens and a
// token-aligned statement. Not movable: Task() hands out pointers into it.
class PreparedRequest {
 public:
  PreparedRequest(const RequestInputs& inputs, const ProviderFactory& factory);
  PreparedRequest(const PreparedRequest&) = delete;
  PreparedRequest& operator=(const PreparedRequest&) = delete;

  AttributionTask Task() const;

  const SourcePartition& partition() const noexcept { return partition_; }
  const Provider& provider() const noexcept { return *provider_; }
  const std::string& response() const noexcept { return response_; }
  const std::vector<std::string>& responseTokens() const noexcept { return tokens_; }
  const StatementSpan& statement() const noexcept { return statement_; }
  const RequestInputs& inputs() const noexcept { return inputs_; }

 private:
  RequestInputs inputs_;
  SourcePartition partition_;
  std::shared_ptr<const Provider> provider_;
  std::string response_;
  std::vector<std::string> tokens_;
  StatementSpan statement_;
};

// Parses "START:END" into a character range.
CharRange ParseCharRange(const std::string& text);

}  // namespace ctxcite::service
