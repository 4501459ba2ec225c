#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/corpus/splits.hpp"
#include "moral/corpus/types.hpp"
#include "moral/labels.hpp"

namespace moral::eval {

enum class System { Lexicon, EmbedForest, LlmZeroShot, MoralBert, MoralBertAdv };

inline constexpr std::array<System, 5> kAllSystems = {System::Lexicon, System::EmbedForest, System::LlmZeroShot,
                                                      System::MoralBert, System::MoralBertAdv};

/// "lexicon", "embed_forest", "llm_zero_shot", "moralbert", "moralbert_adv".
std::string_view slug(System s) noexcept;
/// Column heading used in rendered tables.
std::string_view display_name(System s) noexcept;
/// Accepts slugs plus the aliases "llm", "embed" and "adv".
System system_from_string(std::string_view text);

struct Scores {
  double f1_binary = 0.0;
  double f1_binary_std = 0.0;
  double f1_macro = 0.0;
  double f1_macro_std = 0.0;
};

/// One (system, label) evaluation. Exactly one of scores / error is set.
struct Cell {
  std::optional<Scores> scores;
  std::string error;
  std::size_t n_test = 0;
  std::size_t n_positive = 0;
};

struct EvalReport {
  std::string design;
  System system = System::MoralBert;
  std::map<MoralLabel, Cell> per_label;
  /// Unweighted means over labels that have scores; unset when none do.
  std::optional<Scores> averages;
  int n_bootstrap = 1000;

  /// Recompute `averages` from per_label.
  void finalize();
  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

struct EvalOptions {
  int n_bootstrap = 1000;
  std::uint64_t seed = 0;
};

/// Point estimates and bootstrap std for one aligned gold/pred pair.
Scores score(std::span<const int> gold, std::span<const int> pred, const EvalOptions& options = {});

/// Predictions for `test` (aligned) from one system for one label; -1 leaves
/// a post out of that cell (e.g. outside an LLM subsample). Throwing marks the
/// cell as failed without stopping the run.
using PredictionProvider =
    std::function<std::vector<int>(System, MoralLabel, std::span<const corpus::UnifiedPost> test)>;

/// Test posts for `label`: split Test and gold annotated.
std::vector<corpus::UnifiedPost> test_posts(std::span<const corpus::UnifiedPost> posts, MoralLabel label);

/// Evaluates every (system, label) on the Test split of `posts`.
std::vector<EvalReport> run_experiment(std::string design, std::span<const System> systems,
                                       std::span<const MoralLabel> labels, std::span<const corpus::UnifiedPost> posts,
                                       const PredictionProvider& provider, const EvalOptions& options = {});

nlohmann::ordered_json reports_to_json(std::span<const EvalReport> reports);
std::vector<EvalReport> reports_from_json(const nlohmann::json& j);
/// Long format: design,system,label,n_test,n_positive,f1_binary,f1_binary_std,f1_macro,f1_macro_std,error.
std::string reports_to_csv(std::span<const EvalReport> reports);

enum class TableStyle { Table2, Table3BarsCsv, Table5 };
TableStyle table_style_from_string(std::string_view text);

/// Renders reports in a fixed layout. Missing cells show as "—".
///   table2: markdown, rows = core labels then Avg., columns = F1 Binary per
///           system then F1 Macro per system; one design only.
///   table3_bars_csv: CSV of bar heights and error bars, leave-one-out
///           designs only.
///   table5: markdown, Liberty and Oppression rows in one section per design.
/// Throws std::invalid_argument on a style/report mismatch.
std::string export_table(std::span<const EvalReport> reports, TableStyle style);

/// ".48 ± .02" style: two decimals, leading zero dropped.
std::string format_score(double value, double std);

}  // namespace moral::eval
