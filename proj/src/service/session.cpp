#include "ctxcite/service/session.hpp"

#include "ctxcite/error.hpp"

namespace ctxcite::service {

CharRange ParseCharRange(const std::string& text) {
  const auto colon = text.find(':');
  auto bad = [&] {
    return Error(ErrorCode::kInvalidArgument,
                 "statement must be START:END, got '" + text + "'");
  };
  if (colon == std::string::npos) throw bad();
  try {
    std::size_t used = 0;
    const std::string a = text.substr(0, colon);
    const std::string b = text.substr(colon + 1);
    if (a.empty() || b.empty() || a[0] == '-' || b[0] == '-') throw bad();
    const auto start = std::stoull(a, &used);
    if (used != a.size()) throw bad();
    const auto end = std::stoull(b, &used);
    if (used != b.size()) throw bad();
    return {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
  } catch (const std::logic_error&) {
    throw bad();
  }
}

PreparedRequest::PreparedRequest(const RequestInputs& inputs,
                                 const ProviderFactory& factory)
    : inputs_(inputs) {
  ValidateTemplate(inputs_.templ);
  partition_ = PartitionText(inputs_.context, inputs_.granularity);
  provider_ = factory(partition_);
  if (inputs_.response) {
    response_ = *inputs_.response;
    if (response_.empty()) throw Error(ErrorCode::kEmptyText, "response is empty");
    tokens_ = provider_->Tokenize(response_);
  } else {
    const Prompt prompt{partition_.contextText, inputs_.query, inputs_.templ};
    tokens_ = provider_->Generate(prompt, inputs_.maxTokens, inputs_.generationSeed).tokens;
    for (const auto& t : tokens_) response_ += t;
  }
  const auto spans = TokenCharSpans(response_, tokens_);
  statement_ = SelectStatement(response_, spans,
                               inputs_.statement.value_or(CharRange{0, response_.size()}));
}

AttributionTask PreparedRequest::Task() const {
  AttributionTask task;
  task.provider = provider_.get();
  task.partition = &partition_;
  task.templ = inputs_.templ;
  task.query = inputs_.query;
  task.responseTokens = tokens_;
  task.statement = statement_;
  return task;
}

}  // namespace ctxcite::service
