#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/corpus/types.hpp"
#include "moral/labels.hpp"

namespace moral::baselines {

struct PromptTemplate {
  /// Instruction text with `{Moral Foundations Tags}` and `{Description tags}`
  /// placeholders.
  std::string preamble;
  std::vector<std::string> moral_foundation_tags;
  /// One sentence per tag, without the final full stop.
  std::map<std::string, std::string> description_tags;
  std::string delimiter = "####";

  /// The twelve tags, in label order, with the bundled descriptions.
  static PromptTemplate standard();
  /// Throws std::invalid_argument when a tag lacks a description or a
  /// placeholder is missing.
  void validate() const;
  std::string tags_text() const;
  std::string descriptions_text() const;
  std::string instructions() const;
};

/// The instruction preamble with both placeholders uninstantiated.
std::string_view prompt_preamble();

/// Instructions, a blank line, then each post as "####\n<text>\n####".
std::string render_prompt(std::span<const std::string> texts, const PromptTemplate& tmpl = PromptTemplate::standard());

struct LLMResponse {
  std::string raw;
  std::set<MoralLabel> parsed_labels;
  bool parse_ok = false;
};

/// Accepts a JSON list of tags or an object whose array values (or truthy
/// tag keys) name the tags, optionally wrapped in prose. Unknown tags are
/// dropped and clear parse_ok; a non-moral answer is an empty set.
LLMResponse parse_llm_response(std::string_view raw);

/// Per-label binary prediction from a response (unparseable: all negative).
int llm_prediction(const LLMResponse& response, MoralLabel label);

/// Domain-stratified, seed-fixed subsample preserving input order. Each domain
/// keeps round(fraction * n_d) posts, or its entry in `per_domain` if given
/// (capped at n_d). Throws std::invalid_argument for fraction outside (0, 1].
std::vector<corpus::UnifiedPost> llm_subsample(std::span<const corpus::UnifiedPost> posts, double fraction,
                                               std::uint64_t seed = 42,
                                               const std::map<Domain, std::size_t>& per_domain = {});

struct HttpResult {
  /// 0 for transport failures (connection refused, timeout).
  int status = 0;
  std::string body;
  std::string error;
};

/// POSTs a JSON body to the chat-completion endpoint.
using Transport = std::function<HttpResult(const std::string& body)>;

struct LlmClientOptions {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  int concurrency = 4;
  int timeout_seconds = 120;
};

class LlmError : public std::runtime_error {
 public:
  LlmError(const std::string& what, bool retryable) : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// HTTP transport over cpp-httplib; reads the key from options.api_key_env.
Transport http_transport(const LlmClientOptions& options);

/// Status 0, 408, 429 and 5xx are retryable; other non-2xx are fatal.
bool is_retryable(const HttpResult& r) noexcept;

/// Request body for one prompt (single user message, fixed temperature).
nlohmann::json chat_request(const LlmClientOptions& options, const std::string& prompt);
/// Assistant message content of a chat-completion response.
std::string chat_content(const std::string& response_body);

/// Append-only JSONL cache keyed by (post_id, prompt_hash).
class LlmCache {
 public:
  explicit LlmCache(std::filesystem::path path);
  std::optional<std::string> get(const std::string& post_id, const std::string& prompt_hash) const;
  /// Appends one complete line and flushes it.
  void put(const std::string& post_id, const std::string& prompt_hash, const nlohmann::json& request,
           const std::string& content);
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

struct LlmRunStats {
  std::size_t cached = 0;
  std::size_t requested = 0;
  std::size_t parse_failures = 0;
};

/// Classifies each post with its own prompt, serving repeats from the cache.
/// Requests run on up to options.concurrency threads; `sleep` is the backoff
/// hook (tests pass a no-op). A fatal or exhausted request throws LlmError.
std::map<std::string, LLMResponse> llm_classify(
    std::span<const corpus::UnifiedPost> posts, const PromptTemplate& tmpl, const LlmClientOptions& options,
    const Transport& transport, LlmCache& cache, LlmRunStats* stats = nullptr,
    const std::function<void(std::chrono::milliseconds)>& sleep = {});

}  // namespace moral::baselines
