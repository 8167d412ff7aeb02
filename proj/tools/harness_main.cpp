// SPDX-License-Identifier: Apache-2.0
// Runs the evasion scenarios and prints TAP.

#include <algorithm>
#include <iostream>

#include <CLI11.hpp>

#include "ja4ml/error.hpp"
#include "ja4ml/harness.hpp"

int main(int argc, char **argv) {
  CLI::App app{"ja4ml-harness: JA4 evasion scenario suite"};
  std::string scenarios = std::string(JA4ML_DATA_DIR) + "/harness/scenarios.json";
  app.add_option("--scenarios", scenarios, "Scenario JSON file")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<ja4ml::ScenarioResult> results;
    for (const auto &sc : ja4ml::load_scenarios(scenarios)) results.push_back(ja4ml::run_scenario(sc));
    std::cout << ja4ml::tap_report(results);
    const bool failed = std::any_of(results.begin(), results.end(),
                                    [](const auto &r) { return r.verdict == ja4ml::Verdict::Fail; });
    return failed ? 1 : 0;
  } catch (const ja4ml::Error &e) {
    std::cerr << "ja4ml-harness: " << e.what() << '\n';
    return 1;
  }
}
