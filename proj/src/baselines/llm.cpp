#include "moral/baselines/llm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "moral/hash.hpp"
#include "moral/rng.hpp"

namespace moral::baselines {
namespace {

using nlohmann::json;

constexpr std::string_view kTagsSlot = "{Moral Foundations Tags}";
constexpr std::string_view kDescSlot = "{Description tags}";

// Verbatim instruction text; only the two slots are filled in.
constexpr std::string_view kPreamble =
    "You will be provided with social media posts from Twitter, Reddit and Facebook, regarding different social "
    "topics. The social media posts will be delimited with #### characters. Classify each social media post into "
    "12 Possible Moral Foundations as defined in Moral Foundation Theory. The available Moral Foundations are: "
    "{Moral Foundations Tags}. The explanation of the moral foundations is as follows: {Description tags}. This is "
    "a multi-label classification problem: where it's possible to assign one or multiple categories "
    "simultaneously. Report the results in JSON format such that the keys of the correct moral values are "
    "reported in a list.";

// Authored for this tool; one sentence each, no final full stop.
const std::map<MoralLabel, std::string_view>& descriptions() {
  static const std::map<MoralLabel, std::string_view> d = {
      {MoralLabel::Care, "Care is concern for the wellbeing of others, expressed as kindness, compassion or protection of the vulnerable"},
      {MoralLabel::Harm, "Harm is causing or condoning physical or emotional suffering, cruelty or violence toward others"},
      {MoralLabel::Fairness, "Fairness is upholding justice, equal treatment, reciprocity and rewards proportional to merit"},
      {MoralLabel::Cheating, "Cheating is fraud, deception, exploitation or unjust advantage that violates fair dealing"},
      {MoralLabel::Loyalty, "Loyalty is allegiance, solidarity and self-sacrifice for one's group, family or nation"},
      {MoralLabel::Betrayal, "Betrayal is disloyalty, treachery or abandoning one's group, family or nation"},
      {MoralLabel::Authority, "Authority is respect for legitimate leadership, tradition, law and social order"},
      {MoralLabel::Subversion, "Subversion is defiance of legitimate authority, rebellion against tradition or disruption of social order"},
      {MoralLabel::Purity, "Purity is reverence for sanctity, decency and keeping body, mind or community undefiled"},
      {MoralLabel::Degradation, "Degradation is contamination, disgust, obscenity or the violation of what is held sacred"},
      {MoralLabel::Liberty, "Liberty is defending freedom, autonomy and the right to choose without outside coercion"},
      {MoralLabel::Oppression, "Oppression is domination, tyranny or coercion that restricts the freedom of individuals or groups"},
  };
  return d;
}

void replace_once(std::string& s, std::string_view slot, const std::string& value) {
  const auto pos = s.find(slot);
  s.replace(pos, slot.size(), value);
}

bool is_non_moral(std::string_view tag) {
  std::string t;
  for (char c : tag) {
    if (std::isalpha(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return t == "nonmoral" || t == "none";
}

/// Display-name match for one of the twelve moral tags.
std::optional<MoralLabel> closed_tag(std::string_view tag) {
  std::string t;
  for (char c : tag) {
    if (c != ' ' && c != '\t') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (MoralLabel l : kMoralLabels) {
    std::string n(name(l));
    for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == t) return l;
  }
  return std::nullopt;
}

std::optional<json> parse_lenient(std::string_view raw) {
  auto attempt = [](std::string_view s) -> std::optional<json> {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !(j.is_object() || j.is_array())) return std::nullopt;
    return j;
  };
  if (auto j = attempt(raw)) return j;
  // Bracket extraction: the widest {...} first, then [...].
  for (auto [open, close] : {std::pair{'{', '}'}, std::pair{'[', ']'}}) {
    const auto b = raw.find(open);
    const auto e = raw.rfind(close);
    if (b != std::string_view::npos && e != std::string_view::npos && e > b) {
      if (auto j = attempt(raw.substr(b, e - b + 1))) return j;
    }
  }
  return std::nullopt;
}

bool truthy(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() != 0.0;
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s == "true" || s == "yes" || s == "1";
  }
  return false;
}

}  // namespace

std::string_view prompt_preamble() { return kPreamble; }

PromptTemplate PromptTemplate::standard() {
  PromptTemplate t;
  t.preamble = std::string(kPreamble);
  for (MoralLabel l : kMoralLabels) {
    t.moral_foundation_tags.emplace_back(name(l));
    t.description_tags.emplace(std::string(name(l)), std::string(descriptions().at(l)));
  }
  return t;
}

void PromptTemplate::validate() const {
  if (preamble.find(kTagsSlot) == std::string::npos || preamble.find(kDescSlot) == std::string::npos) {
    throw std::invalid_argument("prompt template: preamble lacks a tag placeholder");
  }
  if (moral_foundation_tags.empty()) throw std::invalid_argument("prompt template: no tags");
  for (const auto& tag : moral_foundation_tags) {
    if (!description_tags.contains(tag)) throw std::invalid_argument("prompt template: no description for " + tag);
  }
  if (delimiter.empty()) throw std::invalid_argument("prompt template: empty delimiter");
}

std::string PromptTemplate::tags_text() const {
  std::string s;
  for (const auto& tag : moral_foundation_tags) {
    if (!s.empty()) s += ", ";
    s += tag;
  }
  return s;
}

std::string PromptTemplate::descriptions_text() const {
  std::string s;
  for (const auto& tag : moral_foundation_tags) {
    if (!s.empty()) s += "; ";
    s += tag + ": " + description_tags.at(tag);
  }
  return s;
}

std::string PromptTemplate::instructions() const {
  validate();
  std::string s = preamble;
  replace_once(s, kTagsSlot, tags_text());
  replace_once(s, kDescSlot, descriptions_text());
  return s;
}

std::string render_prompt(std::span<const std::string> texts, const PromptTemplate& tmpl) {
  std::string s = tmpl.instructions();
  s += "\n\n";
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) s += "\n";
    s += tmpl.delimiter + "\n" + texts[i] + "\n" + tmpl.delimiter + "\n";
  }
  return s;
}

LLMResponse parse_llm_response(std::string_view raw) {
  LLMResponse r;
  r.raw = std::string(raw);
  auto j = parse_lenient(raw);
  if (!j) {
    spdlog::warn("llm response not parseable, counted as all-negative: {:.80}", r.raw);
    return r;
  }
  r.parse_ok = true;
  auto take = [&](const std::string& tag) {
    if (auto l = closed_tag(tag)) {
      r.parsed_labels.insert(*l);
    } else if (!is_non_moral(tag)) {
      spdlog::warn("llm response names unknown tag '{}'", tag);
      r.parse_ok = false;
    }
  };
  auto take_list = [&](const json& list) {
    for (const json& e : list) {
      if (e.is_string()) {
        take(e.get<std::string>());
      } else {
        r.parse_ok = false;
      }
    }
  };
  if (j->is_array()) {
    take_list(*j);
  } else {
    for (const auto& [key, value] : j->items()) {
      if (value.is_array()) {
        take_list(value);
      } else if (closed_tag(key)) {
        if (truthy(value)) r.parsed_labels.insert(*closed_tag(key));
      } else if (value.is_string() && (closed_tag(value.get<std::string>()) || is_non_moral(value.get<std::string>()))) {
        take(value.get<std::string>());
      } else if (!is_non_moral(key)) {
        spdlog::warn("llm response has unexpected key '{}'", key);
        r.parse_ok = false;
      }
    }
  }
  return r;
}

int llm_prediction(const LLMResponse& response, MoralLabel label) {
  if (label == MoralLabel::NonMoral) return response.parsed_labels.empty() ? 1 : 0;
  return response.parsed_labels.contains(label) ? 1 : 0;
}

std::vector<corpus::UnifiedPost> llm_subsample(std::span<const corpus::UnifiedPost> posts, double fraction,
                                               std::uint64_t seed, const std::map<Domain, std::size_t>& per_domain) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("llm_subsample: fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  std::vector<char> keep(posts.size(), 0);
  for (Domain d : kAllDomains) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (posts[i].domain == d) idx.push_back(i);
    }
    if (idx.empty()) continue;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return posts[a].post_id < posts[b].post_id; });
    std::size_t target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    if (auto it = per_domain.find(d); it != per_domain.end()) target = it->second;
    target = std::min(target, idx.size());
    Rng rng = Rng(seed).fork(index(d));
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < target; ++k) keep[idx[k]] = 1;
  }
  std::vector<corpus::UnifiedPost> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (keep[i]) out.push_back(posts[i]);
  }
  return out;
}

bool is_retryable(const HttpResult& r) noexcept {
  return r.status == 0 || r.status == 408 || r.status == 429 || r.status >= 500;
}

json chat_request(const LlmClientOptions& options, const std::string& prompt) {
  return {{"model", options.model},
          {"temperature", options.temperature},
          {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
}

std::string chat_content(const std::string& response_body) {
  const json j = json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw LlmError("llm: response body is not JSON", false);
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw LlmError(std::string("llm: unexpected response shape: ") + e.what(), false);
  }
}

LlmCache::LlmCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("post_id") || !j.contains("prompt_hash") || !j.contains("content")) {
      spdlog::warn("llm cache {}: skipping malformed line {}", path_.string(), n);
      continue;
    }
    entries_[{j["post_id"].get<std::string>(), j["prompt_hash"].get<std::string>()}] = j["content"].get<std::string>();
  }
}

std::optional<std::string> LlmCache::get(const std::string& post_id, const std::string& prompt_hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({post_id, prompt_hash});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LlmCache::put(const std::string& post_id, const std::string& prompt_hash, const json& request,
                   const std::string& content) {
  json j = {{"post_id", post_id}, {"prompt_hash", prompt_hash}, {"request", request}, {"content", content}};
  const std::string line = j.dump() + "\n";
  std::lock_guard lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) throw std::runtime_error("llm cache: cannot append to " + path_.string());
  entries_[{post_id, prompt_hash}] = content;
}

std::size_t LlmCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::map<std::string, LLMResponse> llm_classify(std::span<const corpus::UnifiedPost> posts, const PromptTemplate& tmpl,
                                                const LlmClientOptions& options, const Transport& transport,
                                                LlmCache& cache, LlmRunStats* stats,
                                                const std::function<void(std::chrono::milliseconds)>& sleep) {
  tmpl.validate();
  struct Job {
    const corpus::UnifiedPost* post;
    std::string prompt, hash;
  };
  std::vector<Job> jobs;
  std::map<std::string, LLMResponse> out;
  LlmRunStats local;
  for (const auto& p : posts) {
    const std::string text[] = {p.text_clean};
    Job job{&p, render_prompt(text, tmpl), {}};
    job.hash = sha256_hex(options.model + '\n' + job.prompt);
    if (auto hit = cache.get(p.post_id, job.hash)) {
      out[p.post_id] = parse_llm_response(*hit);
      ++local.cached;
    } else {
      jobs.push_back(std::move(job));
    }
  }

  auto pause = [&](std::chrono::milliseconds d) {
    if (sleep) {
      sleep(d);
    } else {
      std::this_thread::sleep_for(d);
    }
  };
  std::vector<std::optional<std::string>> contents(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      {
        std::lock_guard lock(err_mu);
        if (error) return;
      }
      try {
        const json request = chat_request(options, jobs[i].prompt);
        const std::string body = request.dump();
        auto backoff = options.initial_backoff;
        for (int attempt = 0;; ++attempt) {
          const HttpResult r = transport(body);
          if (r.status >= 200 && r.status < 300) {
            contents[i] = chat_content(r.body);
            cache.put(jobs[i].post->post_id, jobs[i].hash, request, *contents[i]);
            break;
          }
          const std::string what = "llm request for post " + jobs[i].post->post_id + " failed (status " +
                                   std::to_string(r.status) + "): " + (r.error.empty() ? r.body.substr(0, 200) : r.error);
          if (!is_retryable(r)) throw LlmError(what, false);
          if (attempt >= options.max_retries) throw LlmError(what + "; retries exhausted", true);
          spdlog::warn("{}; retrying in {} ms", what, backoff.count());
          pause(backoff);
          backoff = std::min(backoff * 2, options.max_backoff);
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(options.concurrency, static_cast<int>(jobs.size())));
  if (!jobs.empty()) {
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  for (std::size_t i = 0; i < jobs.size(); ++i) out[jobs[i].post->post_id] = parse_llm_response(*contents[i]);
  local.requested = jobs.size();
  for (const auto& [id, r] : out) local.parse_failures += r.parse_ok ? 0 : 1;
  if (stats) *stats = local;
  return out;
}

}  // namespace moral::baselines
