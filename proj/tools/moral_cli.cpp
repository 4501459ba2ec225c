#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

#include "moral/app/config.hpp"
#include "moral/app/fixture.hpp"
#include "moral/app/pipeline.hpp"
#include "moral/corpus/distribution.hpp"
#include "moral/corpus/jsonl.hpp"
#include "moral/hash.hpp"
#include "moral/model/classifier.hpp"
#include "moral/preprocess/clean.hpp"

namespace fs = std::filesystem;
using namespace moral;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

/// Loads the config and narrows designs to `--design` when given.
app::ExperimentConfig load(const std::string& path, const std::string& design) {
  auto c = app::load_config(path);
  if (!design.empty()) c.designs = {corpus::SplitDesign::parse(design)};
  return c;
}

int finish(app::Pipeline& p, int status) {
  p.finish_manifest();
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Moral foundation classifiers: ingestion, training, baselines and evaluation"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", app::version_string());
  bool verbose = false, quiet = false;
  cli.add_flag("-v,--verbose", verbose, "Debug logging");
  cli.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::string config_path, design, label, systems, in_path, out_path, style, text, checkpoint, expected_hash;
  bool force = false, adversarial = false;
  std::uint64_t seed = 2024;

  auto* fixture = cli.add_subcommand("fixture", "Write the synthetic fixture corpus and its config");
  fixture->add_option("--out", out_path, "Output directory")->default_val("data/fixture");
  fixture->add_option("--seed", seed, "Generator seed")->default_val(2024);

  auto* ingest = cli.add_subcommand("ingest", "Ingest and clean the configured corpora");
  ingest->add_option("-c,--config", config_path, "Experiment config (YAML)")->required();
  ingest->add_flag("--force", force, "Ignore existing artifacts");

  auto* clean = cli.add_subcommand("clean", "Re-clean text_raw of a JSONL corpus, or clean one --text");
  clean->add_option("--in", in_path, "Input JSONL");
  clean->add_option("--out", out_path, "Output JSONL (default: stdout)");
  clean->add_option("--text", text, "Clean a single string");

  auto* train = cli.add_subcommand("train", "Train one classifier for one design and label");
  train->add_option("-c,--config", config_path)->required();
  train->add_option("--design", design, "e.g. in_domain, leave_one_out:fb")->required();
  train->add_option("--label", label, "e.g. care")->required();
  train->add_flag("--adversarial", adversarial, "Domain-adversarial variant");
  train->add_flag("--force", force);

  auto* baseline = cli.add_subcommand("baseline", "Run a baseline system");
  std::string which;
  baseline->add_option("system", which, "lexicon | embed | llm")->required()->check(CLI::IsMember({"lexicon", "embed", "llm"}));
  baseline->add_option("-c,--config", config_path)->required();
  baseline->add_option("--design", design)->required();
  baseline->add_option("--label", label)->required();
  baseline->add_flag("--force", force);

  auto* evaluate = cli.add_subcommand("evaluate", "Evaluate stored predictions of a design");
  evaluate->add_option("-c,--config", config_path)->required();
  evaluate->add_option("--design", design)->required();
  evaluate->add_option("--systems", systems, "Comma-separated systems (default: from config)");
  evaluate->add_flag("--force", force);

  auto* report = cli.add_subcommand("report", "Render a report.json as a paper-style table");
  report->add_option("--in", in_path, "report.json")->required();
  report->add_option("--style", style, "table2 | table3_bars_csv | table5")->required();
  report->add_option("--out", out_path, "Output file (default: stdout)");

  auto* run = cli.add_subcommand("run", "Run every stage of an experiment");
  run->add_option("-c,--config", config_path)->required();
  run->add_flag("--force", force);

  auto* predict = cli.add_subcommand("predict", "Classify texts with a checkpoint");
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--text", text, "Text to classify (default: one text per stdin line)");
  predict->add_option("--expected-hash", expected_hash, "Refuse a checkpoint with another config hash");

  CLI11_PARSE(cli, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (fixture->parsed()) {
      app::FixtureOptions opt;
      opt.seed = seed;
      app::write_fixture(out_path, opt);
      std::cout << "fixture written to " << out_path << "\n";
      return 0;
    }
    if (clean->parsed()) {
      if (!text.empty()) {
        std::cout << preprocess::clean_text(text) << "\n";
        return 0;
      }
      if (in_path.empty()) throw std::invalid_argument("clean needs --in or --text");
      auto posts = corpus::read_jsonl(in_path);
      for (auto& p : posts) p.text_clean = preprocess::clean_text(p.text_raw);
      if (out_path.empty()) {
        std::cout << corpus::to_jsonl(posts);
      } else {
        corpus::write_jsonl(out_path, posts);
      }
      return 0;
    }
    if (report->parsed()) {
      const auto j = nlohmann::json::parse(read_file(in_path));
      const auto reports = eval::reports_from_json(j.is_array() ? j : j.at("reports"));
      const std::string table = eval::export_table(reports, eval::table_style_from_string(style));
      if (out_path.empty()) {
        std::cout << table;
      } else {
        write_file_atomic(out_path, table);
      }
      return 0;
    }
    if (predict->parsed()) {
      const auto ckpt = model::Checkpoint::load(checkpoint);
      std::vector<std::string> texts;
      if (!text.empty()) {
        texts.push_back(text);
      } else {
        for (std::string line; std::getline(std::cin, line);) texts.push_back(line);
      }
      for (auto& t : texts) t = preprocess::clean_text(t);
      const auto preds = model::predict(ckpt, texts, expected_hash.empty() ? std::nullopt : std::optional(expected_hash));
      for (std::size_t i = 0; i < preds.size(); ++i) {
        std::cout << slug(ckpt.label) << "\t" << preds[i].predicted << "\t" << preds[i].probability << "\n";
      }
      return 0;
    }

    app::Pipeline p(load(config_path, design), force);
    if (ingest->parsed()) {
      const auto path = p.ingest();
      std::cout << read_file(path.parent_path() / "distribution.md");
      return finish(p, 0);
    }
    if (run->parsed()) return p.run();
    const auto d = corpus::SplitDesign::parse(design);
    if (train->parsed()) {
      std::cout << p.train(d, label_from_string(label), adversarial).string() << "\n";
      return finish(p, 0);
    }
    if (baseline->parsed()) {
      const eval::System s = eval::system_from_string(which);
      std::cout << p.baseline(d, s, label_from_string(label)).string() << "\n";
      return finish(p, 0);
    }
    if (evaluate->parsed()) {
      std::vector<eval::System> sys = p.config().systems;
      if (!systems.empty()) {
        sys.clear();
        for (const auto& s : split_list(systems)) sys.push_back(eval::system_from_string(s));
      }
      const auto reports = p.evaluate(d, sys);
      std::cout << read_file(p.design_dir(d) / "report.md");
      bool any_error = false;
      for (const auto& r : reports) {
        for (const auto& [l, c] : r.per_label) any_error = any_error || !c.scores;
      }
      return finish(p, any_error ? 1 : 0);
    }
  } catch (const app::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
