#include "moral/preprocess/clean.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace moral::preprocess {
namespace {

bool is_word(char c) {
  auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u == '_';
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_with_icase(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = text[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

bool word_before(std::string_view text, std::size_t pos) { return pos > 0 && is_word(text[pos - 1]); }

std::string remove_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool scheme = starts_with_icase(text, i, "http://") || starts_with_icase(text, i, "https://");
    const bool bare = !word_before(text, i) && starts_with_icase(text, i, "www.");
    if (scheme || bare) {
      while (i < text.size() && !is_space(text[i])) ++i;
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string replace_mentions(std::string_view text, std::string_view token) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '@' && !word_before(text, i) && i + 1 < text.size() && is_word(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word(text[j])) ++j;
      out += token;
      i = j;
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string strip_hashtags(std::string_view text, bool drop_word) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '#' && !word_before(text, i) && i + 1 < text.size() && is_word(text[i + 1])) {
      ++i;
      if (drop_word) {
        while (i < text.size() && is_word(text[i])) ++i;
      }
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string replace_emoji(std::string_view text, const EmojiMap& emoji) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (static_cast<unsigned char>(text[i]) >= 0x80) {
      if (std::size_t len = emoji.match(text, i); len > 0) {
        out.push_back(' ');
        out += emoji.describe(text.substr(i, len));
        out.push_back(' ');
        i += len;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string drop_non_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (static_cast<unsigned char>(c) < 0x80) out.push_back(c);
  }
  return out;
}

std::string normalize_space(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending = false;
  for (char c : text) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string ascii_description(std::string_view desc) {
  std::string out;
  for (char c : desc) {
    auto u = static_cast<unsigned char>(c);
    // Descriptions must not introduce patterns the earlier steps act on.
    if (u < 0x80 && u != '@' && u != '#' && u != ':') out.push_back(c);
    else out.push_back(' ');
  }
  return normalize_space(out);
}

}  // namespace

EmojiMap::EmojiMap(std::map<std::string, std::string> entries) {
  for (auto& [seq, desc] : entries) {
    if (seq.empty()) continue;
    max_len_ = std::max(max_len_, seq.size());
    entries_.emplace(seq, ascii_description(desc));
  }
}

std::shared_ptr<const EmojiMap> EmojiMap::builtin() {
  static const std::shared_ptr<const EmojiMap> table = [] {
    static constexpr std::pair<const char*, const char*> kTable[] = {
#include "emoji_table.inc"
    };
    std::map<std::string, std::string> entries;
    for (const auto& [seq, desc] : kTable) entries.emplace(seq, desc);
    return std::make_shared<const EmojiMap>(std::move(entries));
  }();
  return table;
}

std::shared_ptr<const EmojiMap> EmojiMap::from_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open emoji map '" + path.string() + "'");
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("emoji map '" + path.string() + "': missing tab in line '" + line + "'");
    }
    entries[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return std::make_shared<const EmojiMap>(std::move(entries));
}

std::size_t EmojiMap::match(std::string_view text, std::size_t pos) const {
  const std::size_t longest = std::min(max_len_, text.size() - pos);
  for (std::size_t len = longest; len > 0; --len) {
    if (entries_.find(text.substr(pos, len)) != entries_.end()) return len;
  }
  return 0;
}

std::string_view EmojiMap::describe(std::string_view sequence) const {
  auto it = entries_.find(sequence);
  return it == entries_.end() ? std::string_view{} : std::string_view{it->second};
}

std::string clean_pass(std::string_view text_raw, const CleanConfig& config) {
  std::string text = remove_urls(text_raw);
  text = replace_mentions(text, config.mention_token);
  text = strip_hashtags(text, config.strip_hashtag_words);
  if (config.emoji) text = replace_emoji(text, *config.emoji);
  text = drop_non_ascii(text);
  return normalize_space(text);
}

std::string clean_text(std::string_view text_raw, const CleanConfig& config) {
  std::string current = clean_pass(text_raw, config);
  // Every pass after the first works on ASCII text and only deletes markers
  // or rewrites mentions to the fixed token, so this terminates quickly.
  for (std::size_t pass = 1; pass <= text_raw.size() + 1; ++pass) {
    std::string next = clean_pass(current, config);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace moral::preprocess
