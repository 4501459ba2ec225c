#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>

#include "moral/baselines/embed.hpp"
#include "moral/baselines/forest.hpp"
#include "moral/baselines/lexicon.hpp"
#include "moral/baselines/llm.hpp"
#include "moral/hash.hpp"
#include "moral/rng.hpp"
#include "temp_dir.hpp"

using namespace moral;
using namespace moral::baselines;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MoralLexicon small_lexicon() {
  return MoralLexicon::parse(
      "LEMMA,CARE,FAIRNESS,LOYALTY,AUTHORITY,PURITY\n"
      "protect,8,,,,\n"
      "kill,1.5,,,,\n"
      "cheat,,1,,,\n"
      "fair,,8.5,,,\n"
      "city,-1,,,,\n"
      "nation,,,7,,\n");
}

corpus::UnifiedPost post(std::string id, Domain d, std::string text, bool care) {
  corpus::UnifiedPost p;
  p.post_id = std::move(id);
  p.text_raw = p.text_clean = std::move(text);
  p.domain = d;
  p.gold.set(MoralLabel::Care, care);
  p.gold.set(MoralLabel::NonMoral, !care);
  return p;
}

std::string chat_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

}  // namespace

TEST_CASE("lexicon parsing and lookup") {
  const auto lex = small_lexicon();
  CHECK(lex.size() == 5);  // city has no usable score
  CHECK(lex.score("Protect", Foundation::Care) == 8.0);
  CHECK_FALSE(lex.score("protect", Foundation::Fairness));
  CHECK_FALSE(lex.score("city", Foundation::Care));
  CHECK(lex.covers(Foundation::Purity) == false);
  CHECK(lex.covers(Foundation::Loyalty));
  CHECK_FALSE(lex.covers(Foundation::Liberty));
  MoralLexicon m;
  CHECK_THROWS_AS(m.add("x", Foundation::Care, 9.5), std::invalid_argument);
  CHECK_THROWS_AS(m.add("x", Foundation::Care, 0.5), std::invalid_argument);

  testing::TempDir dir;
  const auto tsv = dir.write("lex.tsv", "LEMMA\tCARE\nhelp\t7\n");
  CHECK(MoralLexicon::load(tsv).score("help", Foundation::Care) == 7.0);
}

TEST_CASE("lemma candidates") {
  auto has = [](std::string_view token, const std::string& lemma) {
    const auto c = lemma_candidates(token);
    return std::find(c.begin(), c.end(), lemma) != c.end();
  };
  CHECK(has("cities", "city"));
  CHECK(has("protected", "protect"));
  CHECK(has("cheating", "cheat"));
  CHECK(has("killed", "kill"));
  CHECK(has("nation's", "nation"));
  CHECK(has("stopped", "stop"));
  CHECK(has("hoping", "hope"));
  CHECK(lexicon_tokens("Don't KILL 3 people!") == std::vector<std::string>{"don't", "kill", "people"});
}

TEST_CASE("lexicon classification examples") {
  const auto lex = small_lexicon();
  // Mean of protect (8) and kill (1.5) is 4.75: below the midpoint.
  CHECK(foundation_aggregate("they protected and killed", Foundation::Care, lex) == doctest::Approx(4.75));
  CHECK(lexicon_classify("they protected and killed", MoralLabel::Harm, lex) == 1);
  CHECK(lexicon_classify("they protected and killed", MoralLabel::Care, lex) == 0);
  CHECK(lexicon_classify("we protect our nation", MoralLabel::Care, lex) == 1);
  CHECK(lexicon_classify("we protect our nation", MoralLabel::Loyalty, lex) == 1);
  CHECK(lexicon_classify("we protect our nation", MoralLabel::Betrayal, lex) == 0);
  CHECK(lexicon_classify("we protect our nation", MoralLabel::NonMoral, lex) == 0);
  for (MoralLabel l : kAllLabels) CHECK(lexicon_classify("nothing to see", l, lex) == 0);
  CHECK(lexicon_classify("protect", MoralLabel::Care, lex) == 1);
  MoralLexicon neutral = lex;
  neutral.add("meh", Foundation::Care, 5.0);
  CHECK(lexicon_classify("meh", MoralLabel::NonMoral, neutral) == 1);
  CHECK(lexicon_classify("meh", MoralLabel::Care, neutral) == 0);
  CHECK(foundation_aggregate("kill kill kill kill kill", Foundation::Care, lex) ==
        foundation_aggregate("kill", Foundation::Care, lex));
  CHECK_FALSE(foundation_aggregate("nothing to see", Foundation::Care, lex));
}

TEST_CASE("lexicon predictions are invariant to repeating the text") {
  const auto lex = small_lexicon();
  const std::vector<std::string> words = {"protect", "kill", "cheat", "fair", "nation", "the", "cities", "killing"};
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    for (std::uint64_t k = 1 + rng.below(8); k > 0; --k) text += words[rng.below(words.size())] + " ";
    for (MoralLabel l : kAllLabels) {
      CHECK(lexicon_classify(text, l, lex) == lexicon_classify(text + text, l, lex));
    }
  }
}

TEST_CASE("random forest") {
  Rng rng(8);
  const int n = 200;
  MatrixXd x(n, 5);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = x(i, 0) + 0.5 * x(i, 1) > 0.0;
  }
  ForestOptions o;
  o.n_trees = 30;
  o.seed = 5;
  RandomForest a(o), b(o);
  a.fit(x, y);
  b.fit(x, y);
  CHECK(a.size() == 30);
  CHECK(a.to_json() == b.to_json());
  const auto pred = a.predict(x);
  int correct = 0;
  for (int i = 0; i < n; ++i) correct += pred[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)];
  CHECK(correct >= 190);

  const auto back = RandomForest::from_json(a.to_json());
  CHECK(back.predict(x) == pred);
  for (int i = 0; i < 10; ++i) {
    const double p = a.predict_proba(x.row(i));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  ForestOptions other = o;
  other.seed = 6;
  RandomForest c(other);
  c.fit(x, y);
  CHECK(c.to_json() != a.to_json());

  std::vector<int> bad = y;
  bad[0] = 2;
  CHECK_THROWS(RandomForest(o).fit(x, bad));
  CHECK_THROWS(RandomForest(o).fit(x, std::vector<int>(3, 0)));
}

TEST_CASE("a single tree fits separable data exactly") {
  MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  ForestOptions o;
  Rng rng(1);
  DecisionTree t;
  t.fit(x, y, {0, 1, 2, 3, 4, 5}, o, rng);
  CHECK(t.node_count() == 3);
  CHECK(t.depth() == 1);
  CHECK(t.predict_proba(x.row(2)) == 0.0);
  CHECK(t.predict_proba(x.row(3)) == 1.0);
}

TEST_CASE("document vectors") {
  const auto emb = WordEmbeddings::parse_text("3 2\ncat 1 0\ndog 0 1\nBird 2 2\n");
  CHECK(emb.dim() == 2);
  CHECK(emb.size() == 3);
  CHECK(emb.find("CAT") != nullptr);
  const auto d = document_vector("cat dog unknown", emb);
  CHECK(d.in_vocab == 2);
  CHECK(d.v.isApprox(VectorXd::Constant(2, 0.5)));
  CHECK(document_vector("nothing here", emb).empty());
  CHECK(document_vector("nothing here", emb).v.isZero());
  CHECK(WordEmbeddings::parse_text("cat 1 0\ndog 0 1\n").size() == 2);
  CHECK_THROWS(WordEmbeddings::parse_text("cat 1 0\ndog 0\n"));

  // Order of tokens does not matter.
  Rng rng(3);
  std::vector<std::string> words = {"cat", "dog", "bird", "cat", "fish", "dog"};
  const auto base = document_vector("cat dog bird cat fish dog", emb);
  for (int i = 0; i < 20; ++i) {
    rng.shuffle(std::span<std::string>(words));
    std::string text;
    for (const auto& w : words) text += w + " ";
    CHECK(document_vector(text, emb).v.isApprox(base.v));
  }
}

TEST_CASE("embedding baseline trains and predicts") {
  const auto emb = WordEmbeddings::parse_text("help 1 0\nhurt 0 1\nthe 0.5 0.5\n");
  std::vector<corpus::UnifiedPost> posts;
  for (int i = 0; i < 20; ++i) posts.push_back(post("p" + std::to_string(i), Domain::FB, i % 2 ? "help the" : "hurt the", i % 2));
  posts.push_back(post("empty", Domain::FB, "zzz", false));
  ForestOptions o;
  o.n_trees = 10;
  const auto model = embed_classify_train(posts, MoralLabel::Care, emb, o);
  CHECK(model.empty_docs == 1);
  const std::vector<std::string> texts = {"help", "hurt"};
  CHECK(embed_classify_predict(model, texts, emb) == std::vector<int>{1, 0});
}

TEST_CASE("prompt rendering") {
  const auto tmpl = PromptTemplate::standard();
  CHECK(tmpl.moral_foundation_tags.size() == 12);
  CHECK(tmpl.tags_text().rfind("Care, Harm, Fairness", 0) == 0);
  const std::vector<std::string> posts = {"a", "b"};
  const std::string p = render_prompt(posts);
  CHECK(p.find("{Moral Foundations Tags}") == std::string::npos);
  CHECK(p.ends_with("\n\n####\na\n####\n\n####\nb\n####\n"));
  CHECK(prompt_preamble().find("{Description tags}") != std::string_view::npos);

  PromptTemplate broken = tmpl;
  broken.description_tags.erase("Care");
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = tmpl;
  broken.preamble = "no slots";
  CHECK_THROWS_AS(broken.instructions(), std::invalid_argument);
}

TEST_CASE("prompt golden") {
  const std::string golden = read_file(std::string(MORAL_TEST_DATA) + "/prompt_golden.txt");
  const std::vector<std::string> posts = {
      "Vaccines protect the children we love, and refusing them puts everyone at risk.",
      "The council rigged the vote again and nobody respects the rules anymore."};
  CHECK(render_prompt(posts) == golden);
}

TEST_CASE("LLM response parsing") {
  using L = std::set<MoralLabel>;
  auto r = parse_llm_response(R"(["Care", "Harm"])");
  CHECK(r.parse_ok);
  CHECK(r.parsed_labels == L{MoralLabel::Care, MoralLabel::Harm});

  r = parse_llm_response(R"(Here you go: {"moral_values": ["fairness", "Cheating"]} Hope it helps.)");
  CHECK(r.parse_ok);
  CHECK(r.parsed_labels == L{MoralLabel::Fairness, MoralLabel::Cheating});

  r = parse_llm_response(R"({"Loyalty": true, "Betrayal": false, "Purity": 1})");
  CHECK(r.parsed_labels == L{MoralLabel::Loyalty, MoralLabel::Purity});

  r = parse_llm_response(R"(["Fariness", "Care"])");
  CHECK_FALSE(r.parse_ok);
  CHECK(r.parsed_labels == L{MoralLabel::Care});

  r = parse_llm_response(R"(["Non-Moral"])");
  CHECK(r.parse_ok);
  CHECK(r.parsed_labels.empty());
  CHECK(llm_prediction(r, MoralLabel::NonMoral) == 1);
  CHECK(llm_prediction(r, MoralLabel::Care) == 0);

  r = parse_llm_response("I cannot classify this.");
  CHECK_FALSE(r.parse_ok);
  CHECK(r.parsed_labels.empty());
  CHECK(llm_prediction(r, MoralLabel::Care) == 0);
  CHECK(r.raw == "I cannot classify this.");
}

TEST_CASE("LLM subsample") {
  std::vector<corpus::UnifiedPost> posts;
  for (Domain d : kAllDomains) {
    for (int i = 0; i < 10; ++i) posts.push_back(post(std::string(slug(d)) + std::to_string(i), d, "t", i % 2));
  }
  const auto half = llm_subsample(posts, 0.5);
  CHECK(half.size() == 15);
  std::map<Domain, int> per;
  for (const auto& p : half) ++per[p.domain];
  for (Domain d : kAllDomains) CHECK(per[d] == 5);
  // Input order is kept.
  std::vector<std::size_t> pos;
  for (const auto& p : half) {
    pos.push_back(static_cast<std::size_t>(
        std::find_if(posts.begin(), posts.end(), [&](const auto& q) { return q.post_id == p.post_id; }) - posts.begin()));
  }
  CHECK(std::is_sorted(pos.begin(), pos.end()));
  CHECK(llm_subsample(posts, 0.5) == half);

  std::vector<corpus::UnifiedPost> reversed(posts.rbegin(), posts.rend());
  std::set<std::string> a, b;
  for (const auto& p : half) a.insert(p.post_id);
  for (const auto& p : llm_subsample(reversed, 0.5)) b.insert(p.post_id);
  CHECK(a == b);

  CHECK(llm_subsample(posts, 1.0).size() == 30);
  CHECK(llm_subsample(posts, 0.5, 42, {{Domain::FB, 2}, {Domain::MFTC, 50}}).size() == 2 + 10 + 5);
  CHECK_THROWS_AS(llm_subsample(posts, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(llm_subsample(posts, 1.5), std::invalid_argument);
}

TEST_CASE("LLM cache persists and skips malformed lines") {
  testing::TempDir dir;
  const auto path = dir.path() / "cache.jsonl";
  {
    LlmCache cache(path);
    CHECK(cache.size() == 0);
    cache.put("p1", "h1", nlohmann::json{{"x", 1}}, "[\"Care\"]");
    CHECK(cache.get("p1", "h1") == "[\"Care\"]");
    CHECK_FALSE(cache.get("p1", "h2"));
  }
  {
    std::ofstream(path, std::ios::app) << "{ truncated\n";
  }
  LlmCache reloaded(path);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.get("p1", "h1") == "[\"Care\"]");
}

TEST_CASE("chat request and response") {
  LlmClientOptions o;
  const auto req = chat_request(o, "hello");
  CHECK(req.at("model") == "gpt-4");
  CHECK(req.at("temperature") == 0.0);
  CHECK(req.at("messages").size() == 1);
  CHECK(req.at("messages")[0].at("content") == "hello");
  CHECK(chat_content(chat_body("[\"Care\"]")) == "[\"Care\"]");
  CHECK_THROWS(chat_content("{}"));
  CHECK(is_retryable({429, "", ""}));
  CHECK(is_retryable({0, "", "timeout"}));
  CHECK(is_retryable({503, "", ""}));
  CHECK_FALSE(is_retryable({401, "", ""}));
  CHECK_FALSE(is_retryable({400, "", ""}));
}

TEST_CASE("llm_classify retries, caches and fails on fatal errors") {
  std::vector<corpus::UnifiedPost> posts = {post("a", Domain::FB, "protect the kids", true),
                                            post("b", Domain::MFRC, "lovely weather", false)};
  LlmClientOptions o;
  o.max_retries = 3;
  o.concurrency = 2;
  testing::TempDir dir;
  LlmCache cache(dir.path() / "cache.jsonl");
  std::vector<std::chrono::milliseconds> sleeps;
  std::mutex mu;
  auto no_sleep = [&](std::chrono::milliseconds d) {
    std::lock_guard lock(mu);
    sleeps.push_back(d);
  };

  std::atomic<int> calls{0};
  std::map<std::string, int> seen;
  Transport flaky = [&](const std::string& body) -> HttpResult {
    const auto prompt = nlohmann::json::parse(body).at("messages")[0].at("content").get<std::string>();
    std::lock_guard lock(mu);
    ++calls;
    const bool is_a = prompt.find("protect the kids") != std::string::npos;
    if (is_a && seen["a"]++ == 0) return {429, "slow down", ""};
    return {200, chat_body(is_a ? R"({"labels": ["Care"]})" : "[]"), ""};
  };
  LlmRunStats stats;
  const auto out = llm_classify(posts, PromptTemplate::standard(), o, flaky, cache, &stats, no_sleep);
  CHECK(calls == 3);
  CHECK(stats.requested == 2);
  CHECK(stats.cached == 0);
  CHECK(out.at("a").parsed_labels == std::set<MoralLabel>{MoralLabel::Care});
  CHECK(llm_prediction(out.at("b"), MoralLabel::NonMoral) == 1);
  CHECK(sleeps.size() == 1);
  CHECK(cache.size() == 2);

  LlmRunStats again;
  Transport unused = [&](const std::string&) -> HttpResult { FAIL("cache miss"); return {}; };
  const auto cached = llm_classify(posts, PromptTemplate::standard(), o, unused, cache, &again, no_sleep);
  CHECK(again.cached == 2);
  CHECK(again.requested == 0);
  CHECK(cached.at("a").parsed_labels == out.at("a").parsed_labels);

  // A different model means a different prompt hash.
  LlmClientOptions other = o;
  other.model = "another-model";
  Transport fatal = [](const std::string&) -> HttpResult { return {401, "bad key", ""}; };
  try {
    llm_classify(posts, PromptTemplate::standard(), other, fatal, cache, nullptr, no_sleep);
    FAIL("expected LlmError");
  } catch (const LlmError& e) {
    CHECK_FALSE(e.retryable());
  }

  Transport down = [](const std::string&) -> HttpResult { return {503, "", ""}; };
  sleeps.clear();
  try {
    llm_classify(posts, PromptTemplate::standard(), other, down, cache, nullptr, no_sleep);
    FAIL("expected LlmError");
  } catch (const LlmError& e) {
    CHECK(e.retryable());
  }
  // Backoff doubles and stays within the bound.
  for (auto d : sleeps) CHECK(d <= o.max_backoff);
}
