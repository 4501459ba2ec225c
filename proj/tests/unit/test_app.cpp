#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>

#include "checks.hpp"
#include "moral/app/config.hpp"
#include "moral/app/fixture.hpp"
#include "moral/app/pipeline.hpp"
#include "moral/hash.hpp"
#include "temp_dir.hpp"

using namespace moral;
using namespace moral::app;

namespace {

const char* kMinimal =
    "corpora:\n"
    "  mftc: data/mftc.json\n"
    "  mfrc: /abs/mfrc.csv\n"
    "  fb: fb.csv\n";

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ExperimentConfig small_pipeline_config(const std::filesystem::path& out) {
  ExperimentConfig c = checks::fixture_config();
  c.output_dir = out;
  c.experiment = "t";
  c.designs = {corpus::SplitDesign::in_domain()};
  c.labels = {MoralLabel::Care};
  c.systems = {eval::System::Lexicon, eval::System::EmbedForest, eval::System::MoralBert};
  c.train.epochs = 2;
  c.baselines.forest.n_trees = 10;
  return c;
}

}  // namespace

TEST_CASE("config defaults and path resolution") {
  ::unsetenv(kCorpusRootEnv);
  const auto c = parse_config(kMinimal, "/base");
  CHECK(c.corpora.at(Domain::MFTC) == "/base/data/mftc.json");
  CHECK(c.corpora.at(Domain::MFRC) == "/abs/mfrc.csv");
  CHECK(c.train.learning_rate == 5e-5);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.epochs == 5);
  CHECK(c.train.max_tokens == 150);
  CHECK(c.train.lambda_grl == 1.0);
  CHECK(c.split.train_frac == 0.8);
  CHECK(c.labels.size() == 10);
  CHECK(c.evaluation.n_bootstrap == 1000);
  CHECK(c.baselines.llm.fraction == 1.0);
  CHECK(c.run_dir() == std::filesystem::path("/base/runs/default"));

  ::setenv(kCorpusRootEnv, "/corpora", 1);
  const auto e = parse_config(kMinimal, "/base");
  ::unsetenv(kCorpusRootEnv);
  CHECK(e.corpora.at(Domain::FB) == "/corpora/fb.csv");
  CHECK(e.corpora.at(Domain::MFRC) == "/abs/mfrc.csv");
}

TEST_CASE("config errors name every offending key") {
  const std::string yaml = std::string(kMinimal) +
                           "train:\n  lerning_rate: 0.1\n  batch_size: 0\n"
                           "designs: [in_domain, sideways]\n"
                           "colour: blue\n";
  try {
    parse_config(yaml, "/base");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& k = e.keys();
    auto has = [&](const std::string& key) { return std::find(k.begin(), k.end(), key) != k.end(); };
    CHECK(has("train.lerning_rate"));
    CHECK(has("colour"));
    CHECK(has("train"));
    CHECK(has("designs"));
  }
  CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "labels: [non-moral]\n", "/base"), ConfigError);
  CHECK_THROWS_AS(parse_config("corpora: {}\n", "/base"), ConfigError);
  CHECK_THROWS_AS(parse_config("corpora: [\n", "/base"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("config parses every section") {
  const std::string yaml = std::string(kMinimal) +
                           "experiment: e1\n"
                           "designs: [leave_one_out:fb, liberty_cross:mftc]\n"
                           "labels: [care, Harm]\n"
                           "systems: [lexicon, llm]\n"
                           "train: {lambda_grl: 0.5, encoder: {hidden_size: 16, num_heads: 2}}\n"
                           "baselines:\n  forest: {n_trees: 7}\n  llm: {model: m, fraction: 0.25, per_domain: {fb: 3}}\n"
                           "evaluation: {n_bootstrap: 10, seed: 4}\n";
  const auto c = parse_config(yaml, "/base");
  CHECK(c.experiment == "e1");
  CHECK(c.designs.size() == 2);
  CHECK(c.labels == std::vector<MoralLabel>{MoralLabel::Care, MoralLabel::Harm});
  CHECK(c.systems == std::vector<eval::System>{eval::System::Lexicon, eval::System::LlmZeroShot});
  CHECK(c.train.lambda_grl == 0.5);
  CHECK(c.train.encoder.hidden_size == 16);
  CHECK(c.baselines.forest.n_trees == 7);
  CHECK(c.baselines.llm.client.model == "m");
  CHECK(c.baselines.llm.per_domain.at(Domain::FB) == 3);
  CHECK(c.evaluation.seed == 4);
  CHECK(c.to_json().at("experiment") == "e1");
}

TEST_CASE("fixture generation is deterministic") {
  const auto a = generate_fixture();
  const auto b = generate_fixture();
  CHECK(a.mftc_json == b.mftc_json);
  CHECK(a.mfrc_csv == b.mfrc_csv);
  FixtureOptions o;
  o.seed = 1;
  CHECK(generate_fixture(o).fb_csv != a.fb_csv);
}

TEST_CASE("pipeline runs end to end and reruns are no-ops") {
  testing::TempDir dir;
  const auto cfg = small_pipeline_config(dir.path());
  {
    Pipeline p(cfg);
    CHECK(p.run() == 0);
    p.finish_manifest();
  }
  const auto run_dir = cfg.run_dir();
  for (const char* f : {"corpus/posts.jsonl", "corpus/distribution.csv", "in_domain/splits.jsonl",
                        "in_domain/report.json", "in_domain/report.md", "report.md", "manifest.jsonl"}) {
    CHECK(std::filesystem::exists(run_dir / f));
  }
  CHECK(std::filesystem::exists(run_dir / "in_domain/models/moralbert_care.ckpt"));
  const std::string report = read_file(run_dir / "in_domain/report.json");
  const auto j = nlohmann::json::parse(report);
  CHECK(j.at("design") == "in_domain");
  CHECK(j.at("reports").size() == 3);

  {
    Pipeline p(cfg);
    CHECK(p.run() == 0);
    p.finish_manifest();
    for (const auto& s : p.manifest().stages) {
      CAPTURE(s.stage);
      CHECK(s.status == "skipped");
    }
  }
  CHECK(read_file(run_dir / "in_domain/report.json") == report);
  const auto manifest = lines(run_dir / "manifest.jsonl");
  REQUIRE(manifest.size() == 2);
  const auto m0 = nlohmann::json::parse(manifest[0]);
  const auto m1 = nlohmann::json::parse(manifest[1]);
  CHECK(m0.at("config_hash") == m1.at("config_hash"));
  CHECK(m0.at("run_id") != m1.at("run_id"));
  CHECK(m0.at("corpus_hashes").size() == 3);
  CHECK(m0.contains("version"));

  // Changing a training setting invalidates the model but not the corpus.
  auto changed = cfg;
  changed.train.learning_rate = 0.001;
  Pipeline p(changed);
  CHECK(p.run() == 0);
  bool retrained = false, reingested = false;
  for (const auto& s : p.manifest().stages) {
    if (s.stage.rfind("train", 0) == 0 && s.status == "ran") retrained = true;
    if (s.stage.rfind("ingest", 0) == 0 && s.status == "ran") reingested = true;
  }
  CHECK(retrained);
  CHECK_FALSE(reingested);
}

TEST_CASE("pipeline keeps going when a cell fails") {
  testing::TempDir dir;
  auto cfg = small_pipeline_config(dir.path());
  cfg.systems = {eval::System::Lexicon, eval::System::MoralBert};
  cfg.labels = {MoralLabel::Care, MoralLabel::NonMoral};
  cfg.designs = {corpus::SplitDesign::liberty_in_domain()};
  cfg.liberty_labels = {MoralLabel::Liberty};
  Pipeline p(cfg);
  // The fixture lexicon has no Liberty column, so that cell is unsupported.
  CHECK(p.run() == 0);
  const auto reports = p.evaluate(corpus::SplitDesign::liberty_in_domain(), cfg.systems);
  REQUIRE(reports.size() == 2);
  CHECK_FALSE(reports[0].per_label.at(MoralLabel::Liberty).error.empty());
  CHECK(reports[1].per_label.at(MoralLabel::Liberty).scores);
}

TEST_CASE("prediction files round-trip") {
  testing::TempDir dir;
  PredictionFile f{"lexicon", MoralLabel::Harm, {"a", "b"}, {1, 0}, true};
  f.save(dir.path() / "p.json");
  const auto g = PredictionFile::load(dir.path() / "p.json");
  CHECK(g.system == "lexicon");
  CHECK(g.label == MoralLabel::Harm);
  CHECK(g.post_ids == f.post_ids);
  CHECK(g.predictions == f.predictions);
  CHECK(g.subsample);
}
