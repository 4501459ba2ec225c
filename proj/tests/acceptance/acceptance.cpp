#include <spdlog/spdlog.h>

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "checks.hpp"

namespace {

struct Criterion {
  std::string name;
  std::function<moral::checks::Outcome()> run;
};

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::string data = MORAL_TEST_DATA;
  const std::string root = MORAL_SOURCE_DIR;
  using namespace moral::checks;
  const std::vector<Criterion> criteria = {
      {"math_oracles", [] { return math_oracles(); }},
      {"gradient_reversal", [] { return gradient_reversal(); }},
      {"reduction_to_plain_classifier", [] { return reduction_property(); }},
      {"fixture_learning", [] { return fixture_learning(); }},
      {"adversarial_domain_probe", [] { return adversarial_effect(); }},
      {"bootstrap_std", [] { return bootstrap(); }},
      {"clean_golden", [&] { return clean_golden(data + "/clean_golden.json"); }},
      {"prompt_golden", [&] { return prompt_golden(data + "/prompt_golden.txt"); }},
      {"reproduction", [&] {
         return reproduction(root + "/data/paper/config.yaml", data + "/reference_distribution.csv");
       }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("error: ") + e.what();
    }
    const char* status = o.skipped ? "SKIPPED" : (o.passed ? "PASS" : "FAIL");
    if (!o.skipped && !o.passed) ++failed;
    std::printf("%-7s %-30s %6.1fs  %s\n", status, c.name.c_str(), o.seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
