#include "moral/corpus/jsonl.hpp"

#include <stdexcept>

#include "moral/hash.hpp"

namespace moral::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const UnifiedPost& post) {
  ordered_json gold = ordered_json::object();
  for (MoralLabel l : kAllLabels) {
    const Gold g = post.gold.get(l);
    gold[std::string(slug(l))] = g == Gold::Unannotated ? ordered_json(nullptr) : ordered_json(g == Gold::Present ? 1 : 0);
  }
  ordered_json j;
  j["post_id"] = post.post_id;
  j["text_raw"] = post.text_raw;
  j["text_clean"] = post.text_clean;
  j["domain"] = std::string(slug(post.domain));
  j["subcorpus"] = post.subcorpus;
  j["gold"] = std::move(gold);
  j["sentiment_score"] = post.sentiment_score ? ordered_json(*post.sentiment_score) : ordered_json(nullptr);
  j["split"] = std::string(name(post.split));
  return j;
}

UnifiedPost post_from_json(const json& j) {
  UnifiedPost post;
  post.post_id = j.at("post_id").get<std::string>();
  post.text_raw = j.at("text_raw").get<std::string>();
  post.text_clean = j.at("text_clean").get<std::string>();
  post.domain = domain_from_string(j.at("domain").get<std::string>());
  post.subcorpus = j.value("subcorpus", std::string{});
  const json& gold = j.at("gold");
  for (MoralLabel l : kAllLabels) {
    auto it = gold.find(std::string(slug(l)));
    if (it == gold.end() || it->is_null()) {
      post.gold.set(l, Gold::Unannotated);
    } else {
      const int v = it->get<int>();
      if (v != 0 && v != 1) throw std::invalid_argument("gold." + std::string(slug(l)) + " must be 0, 1 or null");
      post.gold.set(l, v == 1);
    }
  }
  if (auto it = j.find("sentiment_score"); it != j.end() && !it->is_null()) post.sentiment_score = it->get<double>();
  post.split = split_from_string(j.value("split", std::string{"unassigned"}));
  validate(post);
  return post;
}

std::string to_jsonl(std::span<const UnifiedPost> posts) {
  std::string out;
  for (const UnifiedPost& p : posts) {
    out += to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<UnifiedPost> parse_jsonl(std::string_view text) {
  std::vector<UnifiedPost> posts;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      posts.push_back(post_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return posts;
}

void write_jsonl(const std::filesystem::path& path, std::span<const UnifiedPost> posts) {
  write_file_atomic(path, to_jsonl(posts));
}

std::vector<UnifiedPost> read_jsonl(const std::filesystem::path& path) {
  try {
    return parse_jsonl(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace moral::corpus
