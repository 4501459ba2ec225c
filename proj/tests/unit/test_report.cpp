#include <doctest.h>

#include "moral/eval/report.hpp"
#include "moral/rng.hpp"

using namespace moral;
using namespace moral::eval;

namespace {

std::vector<corpus::UnifiedPost> scored_posts(int n) {
  std::vector<corpus::UnifiedPost> posts;
  for (int i = 0; i < n; ++i) {
    corpus::UnifiedPost p;
    p.post_id = "p" + std::to_string(i);
    p.text_raw = p.text_clean = "t";
    p.domain = Domain::FB;
    const bool care = i % 3 == 0, harm = i % 4 == 1;
    p.gold.set(MoralLabel::Care, care);
    p.gold.set(MoralLabel::Harm, harm);
    p.gold.set(MoralLabel::NonMoral, !care && !harm);
    p.split = i % 2 ? corpus::Split::Test : corpus::Split::Train;
    posts.push_back(p);
  }
  return posts;
}

EvalReport fixed_report(System s, double care_b, double care_m) {
  EvalReport r;
  r.design = "in_domain";
  r.system = s;
  r.per_label[MoralLabel::Care].scores = Scores{care_b, 0.02, care_m, 0.01};
  r.per_label[MoralLabel::Harm].scores = Scores{0.30, 0.04, 0.60, 0.03};
  r.per_label[MoralLabel::Fairness].error = "degenerate label";
  r.finalize();
  return r;
}

}  // namespace

TEST_CASE("score formatting") {
  CHECK(format_score(0.4815, 0.0213) == ".48 ± .02");
  CHECK(format_score(1.0, 0.0) == "1.00 ± .00");
  CHECK(format_score(0.005, 0.004) == ".01 ± .00");
}

TEST_CASE("a perfect predictor scores 1 with zero spread") {
  const auto posts = scored_posts(60);
  const std::vector<System> systems = {System::MoralBert};
  const std::vector<MoralLabel> labels = {MoralLabel::Care, MoralLabel::Harm};
  PredictionProvider oracle = [](System, MoralLabel l, std::span<const corpus::UnifiedPost> test) {
    std::vector<int> out;
    for (const auto& p : test) out.push_back(p.gold.target(l));
    return out;
  };
  const auto reports = run_experiment("in_domain", systems, labels, posts, oracle);
  REQUIRE(reports.size() == 1);
  const auto& care = reports[0].per_label.at(MoralLabel::Care);
  REQUIRE(care.scores);
  CHECK(care.scores->f1_binary == 1.0);
  CHECK(care.scores->f1_macro == 1.0);
  CHECK(care.scores->f1_binary_std == 0.0);
  CHECK(care.n_test == 30);
  CHECK(care.n_positive == 10);
  CHECK(reports[0].averages->f1_binary == 1.0);
}

TEST_CASE("provider failures and exclusions") {
  const auto posts = scored_posts(40);
  const std::vector<System> systems = {System::Lexicon, System::LlmZeroShot};
  const std::vector<MoralLabel> labels = {MoralLabel::Care, MoralLabel::Harm};
  PredictionProvider provider = [](System s, MoralLabel l, std::span<const corpus::UnifiedPost> test) {
    if (s == System::Lexicon && l == MoralLabel::Harm) throw std::runtime_error("no column");
    std::vector<int> out;
    for (std::size_t i = 0; i < test.size(); ++i) out.push_back(i < 10 ? test[i].gold.target(l) : -1);
    return out;
  };
  const auto reports = run_experiment("in_domain", systems, labels, posts, provider);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].per_label.at(MoralLabel::Harm).error == "no column");
  CHECK_FALSE(reports[0].per_label.at(MoralLabel::Harm).scores);
  CHECK(reports[1].per_label.at(MoralLabel::Care).n_test == 10);
  // The average covers only cells with scores.
  CHECK(reports[0].averages->f1_binary == reports[0].per_label.at(MoralLabel::Care).scores->f1_binary);

  PredictionProvider wrong_size = [](System, MoralLabel, std::span<const corpus::UnifiedPost>) {
    return std::vector<int>{1};
  };
  const auto bad = run_experiment("in_domain", systems, labels, posts, wrong_size);
  CHECK_FALSE(bad[0].per_label.at(MoralLabel::Care).error.empty());
}

TEST_CASE("averages are unweighted means over scored labels") {
  const auto r = fixed_report(System::MoralBert, 0.5, 0.7);
  REQUIRE(r.averages);
  CHECK(r.averages->f1_binary == doctest::Approx(0.4));
  CHECK(r.averages->f1_macro == doctest::Approx(0.65));
  EvalReport empty;
  empty.design = "in_domain";
  empty.finalize();
  CHECK_FALSE(empty.averages);
}

TEST_CASE("report json and csv round-trip") {
  const std::vector<EvalReport> reports = {fixed_report(System::MoralBert, 0.5, 0.7),
                                           fixed_report(System::MoralBertAdv, 0.6, 0.8)};
  const auto j = reports_to_json(reports);
  const auto back = reports_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.size() == 2);
  CHECK(reports_to_json(back) == j);
  const std::string csv = reports_to_csv(reports);
  CHECK(csv.rfind("design,system,label,n_test,n_positive,f1_binary,f1_binary_std,f1_macro,f1_macro_std,error\n", 0) == 0);
  CHECK(csv.find("degenerate label") != std::string::npos);
}

TEST_CASE("table2 export golden") {
  const std::vector<EvalReport> reports = {fixed_report(System::MoralBert, 0.5, 0.7),
                                           fixed_report(System::MoralBertAdv, 0.6, 0.8)};
  const std::string expected =
      "| Label | F1 Binary MoralBERT | F1 Binary MoralBERT_adv | F1 Macro MoralBERT | F1 Macro MoralBERT_adv |\n"
      "|---|---|---|---|---|\n"
      "| Care | .50 ± .02 | .60 ± .02 | .70 ± .01 | .80 ± .01 |\n"
      "| Harm | .30 ± .04 | .30 ± .04 | .60 ± .03 | .60 ± .03 |\n"
      "| Fairness | — | — | — | — |\n"
      "| Cheating | — | — | — | — |\n"
      "| Loyalty | — | — | — | — |\n"
      "| Betrayal | — | — | — | — |\n"
      "| Authority | — | — | — | — |\n"
      "| Subversion | — | — | — | — |\n"
      "| Purity | — | — | — | — |\n"
      "| Degradation | — | — | — | — |\n"
      "| *Avg.* | .40 ± .03 | .45 ± .03 | .65 ± .02 | .70 ± .02 |\n";
  CHECK(export_table(reports, TableStyle::Table2) == expected);
}

TEST_CASE("table exports reject mismatched reports") {
  CHECK(export_table({}, TableStyle::Table2) == "| Label |\n|---|\n");
  CHECK(export_table({}, TableStyle::Table3BarsCsv) == "test_dataset,system,label,metric,value,std\n");

  auto liberty = fixed_report(System::MoralBert, 0.5, 0.7);
  CHECK_THROWS_AS(export_table(std::vector{liberty}, TableStyle::Table5), std::invalid_argument);
  CHECK_THROWS_AS(export_table(std::vector{liberty}, TableStyle::Table3BarsCsv), std::invalid_argument);

  EvalReport lib;
  lib.design = "liberty_cross:fb";
  lib.system = System::MoralBertAdv;
  lib.per_label[MoralLabel::Liberty].scores = Scores{0.66, 0.01, 0.8, 0.01};
  lib.finalize();
  CHECK_THROWS_AS(export_table(std::vector{lib}, TableStyle::Table2), std::invalid_argument);
  const std::string t5 = export_table(std::vector{lib}, TableStyle::Table5);
  CHECK(t5.find("| *out-of-domain experiments, test dataset is FB* | | |\n") != std::string::npos);
  CHECK(t5.find("| Liberty | .66 ± .01 | .80 ± .01 |\n") != std::string::npos);
  CHECK(t5.find("| Oppression | — | — |\n") != std::string::npos);

  auto other = fixed_report(System::Lexicon, 0.1, 0.2);
  other.design = "leave_one_out:fb";
  CHECK_THROWS_AS(export_table(std::vector{liberty, other}, TableStyle::Table2), std::invalid_argument);
  const std::string bars = export_table(std::vector{other}, TableStyle::Table3BarsCsv);
  CHECK(bars.find("FB,lexicon,Care,f1_binary,") != std::string::npos);
  CHECK(bars.find("FB,lexicon,Avg,f1_macro,") != std::string::npos);
}

TEST_CASE("system names") {
  for (System s : kAllSystems) {
    CHECK(system_from_string(slug(s)) == s);
  }
  CHECK(system_from_string("adv") == System::MoralBertAdv);
  CHECK(display_name(System::EmbedForest) == "Word2Vec+RF");
  CHECK_THROWS(system_from_string("bert2"));
  CHECK(table_style_from_string("table5") == TableStyle::Table5);
  CHECK_THROWS(table_style_from_string("table9"));
}
