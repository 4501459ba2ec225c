#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace moral::text {

/// Lowercasing WordPiece tokenizer compatible with bert-base-uncased
/// vocab.txt files. encode() wraps pieces in [CLS] ... [SEP].
class WordPiece {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kMask = "[MASK]";

  WordPiece() = default;
  /// Token at line i gets id i. Requires [UNK], [CLS] and [SEP].
  explicit WordPiece(std::vector<std::string> vocab, bool lowercase = true);

  static WordPiece from_file(const std::filesystem::path& vocab_txt, bool lowercase = true);
  /// Builds a vocabulary from a corpus: special tokens, then every word seen
  /// at least `min_count` times (most frequent first, capped at `max_words`),
  /// then all single characters in both word-initial and ## forms so any
  /// ASCII text tokenizes without [UNK].
  static WordPiece build(std::span<const std::string> texts, int min_count = 2, std::size_t max_words = 20000);

  /// Whitespace + punctuation split with optional lowercasing.
  std::vector<std::string> basic_tokenize(std::string_view text) const;
  /// Greedy longest-match-first subword split of one word.
  std::vector<std::string> wordpiece(std::string_view word) const;
  std::vector<std::string> tokenize(std::string_view text) const;

  /// [CLS] pieces [SEP], truncated so the result has at most max_tokens ids.
  std::vector<int> encode(std::string_view text, int max_tokens) const;

  int id(std::string_view token) const;
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return vocab_.size(); }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  bool lowercase() const noexcept { return lowercase_; }
  int cls_id() const noexcept { return cls_; }
  int sep_id() const noexcept { return sep_; }
  int unk_id() const noexcept { return unk_; }

  /// SHA-256 over the vocabulary and options.
  std::string fingerprint() const;

  void save(const std::filesystem::path& vocab_txt) const;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool lowercase_ = true;
  int unk_ = -1, cls_ = -1, sep_ = -1;
};

}  // namespace moral::text
