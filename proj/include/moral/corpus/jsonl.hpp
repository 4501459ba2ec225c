#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/corpus/types.hpp"

namespace moral::corpus {

/// Canonical interchange record. Field order is fixed; `gold` lists all
/// thirteen label slugs with 1, 0 or null (unannotated); `sentiment_score`
/// is null when absent.
nlohmann::ordered_json to_json(const UnifiedPost& post);
UnifiedPost post_from_json(const nlohmann::json& j);

/// One record per line, '\n'-terminated.
std::string to_jsonl(std::span<const UnifiedPost> posts);
std::vector<UnifiedPost> parse_jsonl(std::string_view text);

void write_jsonl(const std::filesystem::path& path, std::span<const UnifiedPost> posts);
std::vector<UnifiedPost> read_jsonl(const std::filesystem::path& path);

}  // namespace moral::corpus
