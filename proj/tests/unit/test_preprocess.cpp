#include <doctest.h>

#include <nlohmann/json.hpp>

#include "moral/hash.hpp"
#include "moral/preprocess/clean.hpp"
#include "moral/rng.hpp"
#include "moral/text/tokenizer.hpp"
#include "temp_dir.hpp"

using namespace moral;
using namespace moral::preprocess;

namespace {

std::string random_text(Rng& rng) {
  static const std::vector<std::string> parts = {
      "word", " ", "  ", "@bob", "@", "#tag", "#", "http://x.co/a", "www.site.org", "😂", "❤️", "é", "日",
      "\t", "\n", "!", "a@b", "x#1", "“", "👍🏽", "https://", "\xF0\x9F", "AbC"};
  std::string s;
  for (std::uint64_t k = rng.below(15); k > 0; --k) s += parts[rng.below(parts.size())];
  return s;
}

}  // namespace

TEST_CASE("clean golden pairs") {
  const auto cases = nlohmann::json::parse(read_file(std::string(MORAL_TEST_DATA) + "/clean_golden.json"));
  REQUIRE(cases.size() == 50);
  for (const auto& c : cases) {
    const std::string raw = c.at("raw");
    CAPTURE(raw);
    CHECK(clean_text(raw) == c.at("clean").get<std::string>());
  }
}

TEST_CASE("cleaning is idempotent and leaves ASCII without URLs") {
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const std::string raw = random_text(rng);
    const std::string once = clean_text(raw);
    CAPTURE(raw);
    CHECK(clean_text(once) == once);
    for (char c : once) CHECK(static_cast<unsigned char>(c) < 0x80);
    CHECK(once.find("http://") == std::string::npos);
    CHECK(once.find("  ") == std::string::npos);
    if (!once.empty()) {
      CHECK(once.front() != ' ');
      CHECK(once.back() != ' ');
    }
  }
}

TEST_CASE("clean configuration") {
  CleanConfig c;
  c.mention_token = "USER";
  c.strip_hashtag_words = true;
  CHECK(clean_text("@amy likes #cats a lot", c) == "USER likes a lot");
  c.emoji = nullptr;
  CHECK(clean_text("fun 😂 times", c) == "fun times");

  testing::TempDir dir;
  const auto tsv = dir.write("emoji.tsv", "# comment\n😂\tlol\n");
  c.emoji = EmojiMap::from_tsv(tsv);
  CHECK(c.emoji->size() == 1);
  CHECK(clean_text("fun 😂 times", c) == "fun lol times");
  CHECK_THROWS(EmojiMap::from_tsv(dir.write("bad.tsv", "no tab here\n")));
}

TEST_CASE("emoji map prefers the longest sequence") {
  const auto m = EmojiMap::builtin();
  CHECK(m->size() > 1000);
  const std::string s = "👍🏽";
  CHECK(m->match(s, 0) == s.size());
  CHECK(m->describe(s) == "thumbs up medium skin tone");
}

TEST_CASE("wordpiece greedy longest match") {
  const text::WordPiece wp({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "un", "##aff", "##able", "runn", "##ing", ",",
                            "want", "##s"});
  CHECK(wp.wordpiece("unaffable") == std::vector<std::string>{"un", "##aff", "##able"});
  CHECK(wp.wordpiece("wants") == std::vector<std::string>{"want", "##s"});
  CHECK(wp.wordpiece("xyz") == std::vector<std::string>{"[UNK]"});
  CHECK(wp.tokenize("UnAffable, running!") ==
        std::vector<std::string>{"un", "##aff", "##able", ",", "runn", "##ing", "[UNK]"});
  CHECK(wp.encode("wants", 10) == std::vector<int>{2, 11, 12, 3});
  CHECK(wp.encode("unaffable unaffable", 4) == std::vector<int>{2, 5, 6, 3});
  CHECK_THROWS(text::WordPiece({"[PAD]", "a"}));
}

TEST_CASE("built vocabulary covers any ASCII text") {
  const std::vector<std::string> texts = {"the cat sat", "the dog sat", "a cat ran"};
  const auto wp = text::WordPiece::build(texts, 2);
  CHECK(wp.id("the") >= 0);
  CHECK(wp.id("cat") >= 0);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    for (std::uint64_t k = rng.below(20); k > 0; --k) s.push_back(static_cast<char>(33 + rng.below(94)));
    for (int id : wp.encode(s, 64)) CHECK(id != wp.unk_id());
  }
  testing::TempDir dir;
  wp.save(dir.path() / "vocab.txt");
  const auto back = text::WordPiece::from_file(dir.path() / "vocab.txt");
  CHECK(back.vocab() == wp.vocab());
  CHECK(back.fingerprint() == wp.fingerprint());
}

TEST_CASE("cleaning worked examples") {
  CHECK(clean_text("see https://t.co/x now") == "see now");
  CHECK(clean_text("@JohnDoe agrees") == "@user agrees");
  CHECK(clean_text("great day 😀 #blessed") == "great day grinning face blessed");
}

TEST_CASE("encoding edge cases") {
  const auto wp = text::WordPiece::build(std::vector<std::string>{"a b c"}, 1);
  CHECK(wp.encode("", 10) == std::vector<int>{wp.cls_id(), wp.sep_id()});
  std::string long_text;
  for (int i = 0; i < 2000; ++i) long_text += "b ";
  const auto ids = wp.encode(long_text, 150);
  CHECK(ids.size() == 150);
  CHECK(ids.front() == wp.cls_id());
  CHECK(ids.back() == wp.sep_id());
  CHECK(wp.encode("a c b", 10) == wp.encode("a c b", 10));
}
