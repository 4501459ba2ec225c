#include "moral/eval/report.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "moral/csv.hpp"
#include "moral/eval/metrics.hpp"

namespace moral::eval {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kMissing = "—";

ordered_json scores_json(const Scores& s) {
  return {{"f1_binary", s.f1_binary}, {"f1_binary_std", s.f1_binary_std}, {"f1_macro", s.f1_macro},
          {"f1_macro_std", s.f1_macro_std}};
}

Scores scores_from(const json& j) {
  return {j.at("f1_binary").get<double>(), j.at("f1_binary_std").get<double>(), j.at("f1_macro").get<double>(),
          j.at("f1_macro_std").get<double>()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell_text(const EvalReport* r, std::optional<MoralLabel> label, bool binary) {
  if (r == nullptr) return std::string(kMissing);
  const Scores* s = nullptr;
  if (label) {
    auto it = r->per_label.find(*label);
    if (it != r->per_label.end() && it->second.scores) s = &*it->second.scores;
  } else if (r->averages) {
    s = &*r->averages;
  }
  if (s == nullptr) return std::string(kMissing);
  return binary ? format_score(s->f1_binary, s->f1_binary_std) : format_score(s->f1_macro, s->f1_macro_std);
}

/// Systems in first-appearance order.
std::vector<System> systems_of(std::span<const EvalReport> reports) {
  std::vector<System> out;
  for (const auto& r : reports) {
    if (std::find(out.begin(), out.end(), r.system) == out.end()) out.push_back(r.system);
  }
  return out;
}

const EvalReport* find_report(std::span<const EvalReport> reports, const std::string& design, System s) {
  for (const auto& r : reports) {
    if (r.design == design && r.system == s) return &r;
  }
  return nullptr;
}

std::string header(const std::vector<System>& systems) {
  std::string h = "| Label |";
  std::string rule = "|---|";
  for (const char* metric : {"F1 Binary", "F1 Macro"}) {
    for (System s : systems) {
      h += std::string(" ") + metric + " " + std::string(display_name(s)) + " |";
      rule += "---|";
    }
  }
  return h + "\n" + rule + "\n";
}

std::string row(std::string_view title, std::span<const EvalReport> reports, const std::string& design,
                const std::vector<System>& systems, std::optional<MoralLabel> label) {
  std::string line = "| " + std::string(title) + " |";
  for (bool binary : {true, false}) {
    for (System s : systems) line += " " + cell_text(find_report(reports, design, s), label, binary) + " |";
  }
  return line + "\n";
}

std::string section_title(const std::string& design_id) {
  corpus::SplitDesign d;
  try {
    d = corpus::SplitDesign::parse(design_id);
  } catch (const std::invalid_argument&) {
    return design_id;
  }
  switch (d.kind) {
    case corpus::SplitDesign::Kind::InDomain:
    case corpus::SplitDesign::Kind::LibertyInDomain:
      return "in-domain experiments";
    case corpus::SplitDesign::Kind::LeaveOneOut:
    case corpus::SplitDesign::Kind::LibertyCross:
      return "out-of-domain experiments, test dataset is " + std::string(name(*d.domain));
  }
  return design_id;
}

std::string table2(std::span<const EvalReport> reports) {
  const auto systems = systems_of(reports);
  std::string out = header(systems);
  if (reports.empty()) return out;
  const std::string& design = reports.front().design;
  for (const auto& r : reports) {
    if (r.design != design) throw std::invalid_argument("table2: reports mix designs " + design + " and " + r.design);
    if (corpus::SplitDesign::parse(r.design).is_liberty()) {
      throw std::invalid_argument("table2: design " + r.design + " belongs in table5");
    }
    for (const auto& [label, cell] : r.per_label) {
      if (std::find(kCoreLabels.begin(), kCoreLabels.end(), label) == kCoreLabels.end()) {
        throw std::invalid_argument("table2: label " + std::string(name(label)) + " is not one of the ten core labels");
      }
    }
  }
  for (MoralLabel l : kCoreLabels) out += row(name(l), reports, design, systems, l);
  out += row("*Avg.*", reports, design, systems, std::nullopt);
  return out;
}

std::string table5(std::span<const EvalReport> reports) {
  const auto systems = systems_of(reports);
  std::string out = header(systems);
  std::vector<std::string> designs;
  for (const auto& r : reports) {
    for (const auto& [label, cell] : r.per_label) {
      if (!is_partial_coverage(label)) {
        throw std::invalid_argument("table5: only Liberty and Oppression rows allowed, found " +
                                    std::string(name(label)));
      }
    }
    if (std::find(designs.begin(), designs.end(), r.design) == designs.end()) designs.push_back(r.design);
  }
  const std::string blanks = [&] {
    std::string s;
    for (std::size_t i = 0; i < 2 * systems.size(); ++i) s += " |";
    return s;
  }();
  for (const auto& design : designs) {
    out += "| *" + section_title(design) + "* |" + blanks + "\n";
    for (MoralLabel l : {MoralLabel::Liberty, MoralLabel::Oppression}) out += row(name(l), reports, design, systems, l);
  }
  return out;
}

std::string table3_bars(std::span<const EvalReport> reports) {
  std::string out = "test_dataset,system,label,metric,value,std\n";
  for (const auto& r : reports) {
    const auto d = corpus::SplitDesign::parse(r.design);
    if (d.kind != corpus::SplitDesign::Kind::LeaveOneOut) {
      throw std::invalid_argument("table3_bars_csv: design " + r.design + " is not leave-one-out");
    }
    const std::string test = std::string(name(*d.domain));
    auto emit = [&](std::string_view label, const Scores& s) {
      out += test + "," + std::string(slug(r.system)) + "," + std::string(label) + ",f1_binary," + fmt(s.f1_binary) +
             "," + fmt(s.f1_binary_std) + "\n";
      out += test + "," + std::string(slug(r.system)) + "," + std::string(label) + ",f1_macro," + fmt(s.f1_macro) +
             "," + fmt(s.f1_macro_std) + "\n";
    };
    for (const auto& [label, cell] : r.per_label) {
      if (cell.scores) emit(name(label), *cell.scores);
    }
    if (r.averages) emit("Avg", *r.averages);
  }
  return out;
}

}  // namespace

std::string_view slug(System s) noexcept {
  switch (s) {
    case System::Lexicon: return "lexicon";
    case System::EmbedForest: return "embed_forest";
    case System::LlmZeroShot: return "llm_zero_shot";
    case System::MoralBert: return "moralbert";
    case System::MoralBertAdv: return "moralbert_adv";
  }
  return "?";
}

std::string_view display_name(System s) noexcept {
  switch (s) {
    case System::Lexicon: return "MoralStrength";
    case System::EmbedForest: return "Word2Vec+RF";
    case System::LlmZeroShot: return "LLM";
    case System::MoralBert: return "MoralBERT";
    case System::MoralBertAdv: return "MoralBERT_adv";
  }
  return "?";
}

System system_from_string(std::string_view text) {
  for (System s : kAllSystems) {
    if (text == slug(s)) return s;
  }
  if (text == "llm") return System::LlmZeroShot;
  if (text == "embed") return System::EmbedForest;
  if (text == "adv") return System::MoralBertAdv;
  throw std::invalid_argument("unknown system '" + std::string(text) +
                              "' (expected lexicon, embed_forest, llm_zero_shot, moralbert or moralbert_adv)");
}

void EvalReport::finalize() {
  Scores sum;
  std::size_t n = 0;
  for (const auto& [label, cell] : per_label) {
    if (!cell.scores) continue;
    sum.f1_binary += cell.scores->f1_binary;
    sum.f1_binary_std += cell.scores->f1_binary_std;
    sum.f1_macro += cell.scores->f1_macro;
    sum.f1_macro_std += cell.scores->f1_macro_std;
    ++n;
  }
  if (n == 0) {
    averages.reset();
    return;
  }
  const auto k = static_cast<double>(n);
  averages = Scores{sum.f1_binary / k, sum.f1_binary_std / k, sum.f1_macro / k, sum.f1_macro_std / k};
}

ordered_json EvalReport::to_json() const {
  ordered_json labels = ordered_json::object();
  for (const auto& [label, cell] : per_label) {
    ordered_json c = {{"n_test", cell.n_test}, {"n_positive", cell.n_positive}};
    if (cell.scores) {
      c.update(scores_json(*cell.scores));
    } else {
      c["error"] = cell.error;
    }
    labels[std::string(slug(label))] = c;
  }
  return {{"design", design},
          {"system", slug(system)},
          {"n_bootstrap", n_bootstrap},
          {"per_label", labels},
          {"averages", averages ? ordered_json(scores_json(*averages)) : ordered_json(nullptr)}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.design = j.at("design").get<std::string>();
  r.system = system_from_string(j.at("system").get<std::string>());
  r.n_bootstrap = j.value("n_bootstrap", 1000);
  for (const auto& [key, c] : j.at("per_label").items()) {
    Cell cell;
    cell.n_test = c.value("n_test", std::size_t{0});
    cell.n_positive = c.value("n_positive", std::size_t{0});
    if (c.contains("error")) {
      cell.error = c.at("error").get<std::string>();
    } else {
      cell.scores = scores_from(c);
    }
    r.per_label[label_from_string(key)] = std::move(cell);
  }
  if (j.contains("averages") && !j.at("averages").is_null()) r.averages = scores_from(j.at("averages"));
  return r;
}

Scores score(std::span<const int> gold, std::span<const int> pred, const EvalOptions& options) {
  const auto c = ConfusionCounts::from(gold, pred);
  return {f1_binary(c), bootstrap_std(gold, pred, Metric::F1Binary, options.n_bootstrap, options.seed), f1_macro(c),
          bootstrap_std(gold, pred, Metric::F1Macro, options.n_bootstrap, options.seed)};
}

std::vector<corpus::UnifiedPost> test_posts(std::span<const corpus::UnifiedPost> posts, MoralLabel label) {
  std::vector<corpus::UnifiedPost> out;
  for (const auto& p : posts) {
    if (p.split == corpus::Split::Test && p.gold.annotated(label)) out.push_back(p);
  }
  return out;
}

std::vector<EvalReport> run_experiment(std::string design, std::span<const System> systems,
                                       std::span<const MoralLabel> labels, std::span<const corpus::UnifiedPost> posts,
                                       const PredictionProvider& provider, const EvalOptions& options) {
  std::vector<EvalReport> reports;
  for (System s : systems) {
    EvalReport report;
    report.design = design;
    report.system = s;
    report.n_bootstrap = options.n_bootstrap;
    for (MoralLabel l : labels) {
      Cell cell;
      const auto test = test_posts(posts, l);
      try {
        if (test.empty()) throw std::runtime_error("no annotated test posts");
        const std::vector<int> raw = provider(s, l, test);
        if (raw.size() != test.size()) {
          throw std::runtime_error("provider returned " + std::to_string(raw.size()) + " predictions for " +
                                   std::to_string(test.size()) + " posts");
        }
        std::vector<int> gold, pred;
        for (std::size_t i = 0; i < test.size(); ++i) {
          if (raw[i] < 0) continue;
          gold.push_back(test[i].gold.target(l));
          pred.push_back(raw[i] > 0 ? 1 : 0);
        }
        cell.n_test = gold.size();
        cell.n_positive = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), 1));
        if (gold.empty()) throw std::runtime_error("no test post was predicted");
        cell.scores = score(gold, pred, options);
      } catch (const std::exception& e) {
        cell.error = e.what();
        spdlog::warn("{} / {} / {}: {}", design, slug(s), name(l), e.what());
      }
      report.per_label[l] = std::move(cell);
    }
    report.finalize();
    reports.push_back(std::move(report));
  }
  return reports;
}

ordered_json reports_to_json(std::span<const EvalReport> reports) {
  ordered_json out = ordered_json::array();
  for (const auto& r : reports) out.push_back(r.to_json());
  return out;
}

std::vector<EvalReport> reports_from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("report json: expected an array of reports");
  std::vector<EvalReport> out;
  for (const auto& r : j) out.push_back(EvalReport::from_json(r));
  return out;
}

std::string reports_to_csv(std::span<const EvalReport> reports) {
  std::string out = "design,system,label,n_test,n_positive,f1_binary,f1_binary_std,f1_macro,f1_macro_std,error\n";
  for (const auto& r : reports) {
    auto line = [&](std::string_view label, const Cell* cell, const std::optional<Scores>& s) {
      out += csv_escape(r.design) + "," + std::string(slug(r.system)) + "," + std::string(label) + ",";
      out += cell ? std::to_string(cell->n_test) + "," + std::to_string(cell->n_positive) : std::string(",");
      if (s) {
        out += "," + fmt(s->f1_binary) + "," + fmt(s->f1_binary_std) + "," + fmt(s->f1_macro) + "," +
               fmt(s->f1_macro_std) + ",";
      } else {
        out += ",,,,,";
      }
      out += cell ? csv_escape(cell->error) : std::string{};
      out += "\n";
    };
    for (const auto& [label, cell] : r.per_label) line(slug(label), &cell, cell.scores);
    line("average", nullptr, r.averages);
  }
  return out;
}

TableStyle table_style_from_string(std::string_view text) {
  if (text == "table2") return TableStyle::Table2;
  if (text == "table3_bars_csv") return TableStyle::Table3BarsCsv;
  if (text == "table5") return TableStyle::Table5;
  throw std::invalid_argument("unknown table style '" + std::string(text) +
                              "' (expected table2, table3_bars_csv or table5)");
}

std::string export_table(std::span<const EvalReport> reports, TableStyle style) {
  switch (style) {
    case TableStyle::Table2: return table2(reports);
    case TableStyle::Table3BarsCsv: return table3_bars(reports);
    case TableStyle::Table5: return table5(reports);
  }
  throw std::logic_error("unreachable table style");
}

std::string format_score(double value, double std) {
  auto two = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    return s;
  };
  return two(value) + " ± " + two(std);
}

}  // namespace moral::eval
