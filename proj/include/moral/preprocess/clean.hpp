#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace moral::preprocess {

/// Emoji sequence (UTF-8) to plain-ASCII description, matched longest-first.
class EmojiMap {
 public:
  /// The bundled table generated from the Unicode emoji names.
  static std::shared_ptr<const EmojiMap> builtin();
  /// Tab-separated `sequence<TAB>description` lines; `#` starts a comment line.
  static std::shared_ptr<const EmojiMap> from_tsv(const std::filesystem::path& path);

  explicit EmojiMap(std::map<std::string, std::string> entries);

  /// Length in bytes of the longest emoji sequence starting at `pos`, or 0.
  std::size_t match(std::string_view text, std::size_t pos) const;
  std::string_view describe(std::string_view sequence) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::size_t max_len_ = 0;
};

struct CleanConfig {
  std::string mention_token = "@user";
  /// Drop the whole `#tag` token instead of only the '#' marker.
  bool strip_hashtag_words = false;
  std::shared_ptr<const EmojiMap> emoji = EmojiMap::builtin();
};

/// Cleaning pipeline, in this fixed order:
///   1. remove URLs (`http://`, `https://`, bare `www.` hosts)
///   2. replace @mentions with `mention_token`
///   3. remove the '#' marker of hashtags (or the whole tag, see config)
///   4. replace emoji with their space-delimited description
///   5. drop every remaining non-ASCII byte
///   6. collapse whitespace runs to one space and trim
/// Deleting non-ASCII bytes can join fragments into a new URL, mention or
/// hashtag, so the steps are repeated until the text stops changing. The
/// result is therefore idempotent.
std::string clean_text(std::string_view text_raw, const CleanConfig& config = {});

/// Single pass of the six steps without the fixed-point loop.
std::string clean_pass(std::string_view text_raw, const CleanConfig& config);

}  // namespace moral::preprocess
