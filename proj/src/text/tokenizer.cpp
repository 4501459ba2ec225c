#include "moral/text/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "moral/hash.hpp"

namespace moral::text {
namespace {

constexpr std::size_t kMaxWordChars = 100;

bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

WordPiece::WordPiece(std::vector<std::string> vocab, bool lowercase) : vocab_(std::move(vocab)), lowercase_(lowercase) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], static_cast<int>(i));
  auto need = [&](std::string_view t) {
    auto it = index_.find(std::string(t));
    if (it == index_.end()) throw std::invalid_argument("vocabulary lacks special token " + std::string(t));
    return it->second;
  };
  unk_ = need(kUnk);
  cls_ = need(kCls);
  sep_ = need(kSep);
}

WordPiece WordPiece::from_file(const std::filesystem::path& vocab_txt, bool lowercase) {
  std::istringstream in(read_file(vocab_txt));
  std::vector<std::string> vocab;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPiece(std::move(vocab), lowercase);
}

WordPiece WordPiece::build(std::span<const std::string> texts, int min_count, std::size_t max_words) {
  WordPiece basic({std::string(kPad), std::string(kUnk), std::string(kCls), std::string(kSep)});
  std::map<std::string, int> counts;
  std::set<char> chars;
  for (char c = '!'; c <= '~'; ++c) {
    if (!(c >= 'A' && c <= 'Z')) chars.insert(c);
  }
  for (const std::string& t : texts) {
    for (std::string& w : basic.basic_tokenize(t)) {
      for (char c : w) chars.insert(c);
      ++counts[std::move(w)];
    }
  }
  std::vector<std::pair<std::string, int>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> vocab{std::string(kPad), std::string(kUnk), std::string(kCls), std::string(kSep),
                                 std::string(kMask)};
  std::set<std::string> seen(vocab.begin(), vocab.end());
  auto add = [&](std::string t) {
    if (seen.insert(t).second) vocab.push_back(std::move(t));
  };
  std::size_t taken = 0;
  for (auto& [w, n] : words) {
    if (n < min_count || taken >= max_words) break;
    add(w);
    ++taken;
  }
  for (char c : chars) add(std::string(1, c));
  for (char c : chars) add("##" + std::string(1, c));
  return WordPiece(std::move(vocab));
}

std::vector<std::string> WordPiece::basic_tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (c < 32 || c == 127) {
      continue;
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(lowercase_ && c < 128 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::vector<std::string> WordPiece::wordpiece(std::string_view word) const {
  if (word.size() > kMaxWordChars) return {std::string(kUnk)};
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (start < end) {
      std::string sub(word.substr(start, end - start));
      if (start > 0) sub = "##" + sub;
      if (index_.count(sub)) {
        match = std::move(sub);
        break;
      }
      --end;
    }
    if (match.empty()) return {std::string(kUnk)};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

std::vector<std::string> WordPiece::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (const std::string& w : basic_tokenize(text)) {
    for (std::string& p : wordpiece(w)) out.push_back(std::move(p));
  }
  return out;
}

std::vector<int> WordPiece::encode(std::string_view text, int max_tokens) const {
  if (max_tokens < 2) throw std::invalid_argument("max_tokens must be at least 2");
  std::vector<int> ids{cls_};
  const auto budget = static_cast<std::size_t>(max_tokens - 1);
  for (const std::string& w : basic_tokenize(text)) {
    for (const std::string& p : wordpiece(w)) {
      if (ids.size() == budget) break;
      ids.push_back(id(p));
    }
    if (ids.size() == budget) break;
  }
  ids.push_back(sep_);
  return ids;
}

int WordPiece::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

std::string WordPiece::fingerprint() const {
  std::string blob = lowercase_ ? "lower\n" : "cased\n";
  for (const std::string& t : vocab_) blob += t + '\n';
  return sha256_hex(blob);
}

void WordPiece::save(const std::filesystem::path& vocab_txt) const {
  std::string blob;
  for (const std::string& t : vocab_) blob += t + '\n';
  write_file_atomic(vocab_txt, blob);
}

}  // namespace moral::text
