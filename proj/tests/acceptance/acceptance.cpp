// SPDX-License-Identifier: Apache-2.0
// Acceptance checks, one PASS/FAIL/SKIP/WARN line per criterion.
//
// Criteria 3 and 4 need a JA4DB export; point JA4DB_SNAPSHOT at one to run them.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "oracles.hpp"
#include "pcap_writer.hpp"
#include "test_paths.hpp"

#include "ja4ml/cli.hpp"
#include "ja4ml/error.hpp"
#include "ja4ml/harness.hpp"
#include "ja4ml/ja4.hpp"
#include "ja4ml/metrics.hpp"
#include "ja4ml/pcap_ingest.hpp"
#include "ja4ml/prng.hpp"

using namespace ja4ml;
using namespace ja4ml::testing;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, Skip, Warn };

struct Line {
  Outcome outcome;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string &title, const std::function<Line()> &check) {
  const auto start = std::chrono::steady_clock::now();
  Line line;
  try {
    line = check();
  } catch (const std::exception &e) {
    line = {Outcome::Fail, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char *tag = line.outcome == Outcome::Pass ? "PASS" : line.outcome == Outcome::Fail ? "FAIL"
                                                  : line.outcome == Outcome::Skip ? "SKIP" : "WARN";
  if (line.outcome == Outcome::Fail) ++failures;
  std::cout << fmt::format("{} [{}] {}: {} ({:.2f}s)", tag, id, title, line.detail, secs) << std::endl;
}

Line fingerprint_exactness() {
  const auto doc = expected_fingerprints();
  const std::set<std::string> required = {"chrome_like.pcap", "scripted_curl_like.pcap", "no_sni_ip_literal.pcap",
                                          "python_no_alpn.pcap", "grease_heavy.pcap"};
  std::set<std::string> matched;
  std::size_t compared = 0;
  for (const auto &cap : doc["captures"]) {
    const auto file = cap["file"].get<std::string>();
    std::vector<std::string> got;
    for (const auto &c : read_candidates(CaptureSource::pcap_file(test_data("captures/" + file).string()))) {
      got.push_back(compute_ja4(parse_clienthello(extract_clienthello_bytes(c), c.transport)).full);
    }
    const auto want = cap["ja4"].get<std::vector<std::string>>();
    if (got != want) {
      return {Outcome::Fail, fmt::format("{}: got [{}], reference [{}]", file, fmt::join(got, " "), fmt::join(want, " "))};
    }
    compared += got.size();
    if (required.count(file)) matched.insert(file);
  }
  if (matched != required) return {Outcome::Fail, "required capture kinds missing from the fixture set"};
  return {Outcome::Pass, fmt::format("{} captures, {} fingerprints identical to the reference tooling",
                                     doc["captures"].size(), compared)};
}

Line metric_regression() {
  struct Case {
    ConfusionMatrix cm;
    double p, r, f1, acc;
  };
  const Case cases[] = {{{28699, 338, 203, 9840}, 0.9668, 0.9798, 0.9732, 0.9862},
                        {{28701, 336, 201, 9842}, 0.9670, 0.9800, 0.9734, 0.9863}};
  std::string detail;
  for (const auto &c : cases) {
    const auto m = prf1(c.cm);
    const double got[] = {m.positive.precision, m.positive.recall, m.positive.f1, m.accuracy};
    const double want[] = {c.p, c.r, c.f1, c.acc};
    for (int i = 0; i < 4; ++i) {
      if (std::abs(std::round(got[i] * 1e4) / 1e4 - want[i]) > 5e-5) {
        return {Outcome::Fail, fmt::format("value {} is {:.6f}, expected {:.4f}", i, got[i], want[i])};
      }
    }
    detail += fmt::format("{}{:.4f}/{:.4f}/{:.4f}/{:.4f}", detail.empty() ? "" : "; ", got[0], got[1], got[2], got[3]);
  }
  return {Outcome::Pass, detail};
}

struct FullRun {
  bool available = false;
  std::string why;
  nlohmann::json stats, report, train_echo;
  std::vector<std::string> ranking;
  double seconds = 0.0;
};

FullRun full_run() {
  FullRun run;
  const char *snapshot = std::getenv("JA4DB_SNAPSHOT");
  if (!snapshot || !*snapshot) {
    run.why = "JA4DB_SNAPSHOT not set; no JA4DB export available offline";
    return run;
  }
  run.available = true;
  const auto start = std::chrono::steady_clock::now();
  const auto dir = temp_dir("acceptance_full");
  std::ostringstream out, err;
  cli::IngestOptions ing;
  ing.input = snapshot;
  ing.out_dir = (dir / "data").string();
  if (cli::cmd_ingest(ing, out, err) != cli::kExitOk) throw Error("ingest produced no labeled rows");
  std::cout << out.str();
  cli::TrainOptions tr;
  tr.dataset = (dir / "data/dataset.csv").string();
  tr.manifest = (dir / "data/split.json").string();
  tr.out_dir = (dir / "model").string();
  tr.include_application = true;
  tr.config.threads = 0;
  cli::cmd_train(tr, out, err);
  cli::EvalOptions ev{(dir / "model/model.json").string(), "", tr.dataset, tr.manifest, (dir / "eval").string()};
  cli::cmd_eval(ev, out, err);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.stats = load_json(dir / "data/stats.json");
  run.report = load_json(dir / "eval/report.json");
  run.train_echo = load_json(dir / "model/train.config.json");
  for (const auto &i : run.report["importances"]) run.ranking.push_back(i["feature"].get<std::string>());
  return run;
}

Line full_scale(const FullRun &run) {
  if (!run.available) return {Outcome::Skip, run.why};
  const double acc = run.report["accuracy"].get<double>();
  const double auc = run.report["auc"].get<double>();
  const auto &d = run.stats["delta_vs_reference"];
  const auto detail = fmt::format("accuracy {:.4f}, AUC {:.4f}, {} trees on {} rows in {:.0f}s; deltas vs reference total {:+} bad_bot {:+} benign {:+} "
                                  "good_bot {:+}",
                                  acc, auc, run.train_echo["settings"]["config"]["n_trees"].get<int>(),
                                  run.train_echo["results"]["train_rows"].get<long>(), run.seconds, d["total_records"].get<long>(), d["bad_bot"].get<long>(),
                                  d["benign"].get<long>(), d["good_bot_excluded"].get<long>());
  if (run.seconds > 15 * 60) return {Outcome::Fail, detail + " (over the 15 minute budget)"};
  return {acc >= 0.97 && auc >= 0.99 ? Outcome::Pass : Outcome::Fail, detail};
}

Line importance_sanity(const FullRun &run) {
  if (!run.available) return {Outcome::Skip, run.why};
  const auto top5 = std::vector<std::string>(run.ranking.begin(), run.ranking.begin() + std::min<std::size_t>(5, run.ranking.size()));
  const bool first = !top5.empty() && top5[0] == "ja4_b";
  const bool counts = std::count(top5.begin(), top5.end(), "cipher_count") && std::count(top5.begin(), top5.end(), "ext_count");
  return {first && counts ? Outcome::Pass : Outcome::Warn, fmt::format("top 5 by gain: {}", fmt::join(top5, ", "))};
}

Line gbdt_oracle() {
  SplitMix64 rng(20240501);
  std::size_t splits = 0, leaves = 0;
  for (int d = 0; d < 20; ++d) {
    const std::size_t n = 20 + rng.below(281);
    const std::size_t f = 1 + rng.below(6);
    Matrix x(n, f);
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < f; ++c) {
        // mix of continuous and heavily tied columns
        x(r, c) = (c % 2) ? static_cast<double>(rng.below(5)) : std::round(rng.uniform() * 1000.0) / 10.0;
      }
      y[r] = rng.uniform() < 1.0 / (1.0 + std::exp(-(x(r, 0) / 25.0 - 2.0))) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    TrainConfig cfg;
    cfg.n_trees = 3;
    cfg.max_depth = 1 + static_cast<int>(rng.below(2));
    cfg.learning_rate = 0.3;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    const auto model = train(x, y, cfg);
    const auto rep = verify_against_brute_force(model, x, y, 1e-9);
    if (!rep.mismatches.empty()) return {Outcome::Fail, fmt::format("dataset {}: {}", d, rep.mismatches.front())};
    splits += rep.splits_checked;
    leaves += rep.leaves_checked;
  }
  return {Outcome::Pass, fmt::format("20 datasets, {} splits and {} leaves match the brute-force search", splits, leaves)};
}

Line auc_oracle() {
  SplitMix64 rng(77);
  std::size_t with_ties = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = rng.uniform();
    }
    y[0] = 1;
    y[1] = 0;
    // inject ties, including across classes
    for (std::size_t k = 0, m = rng.below(n); k < m; ++k) s[rng.below(n)] = s[rng.below(n)];
    if (t % 10 == 0) s[1] = s[0];
    with_ties += std::set<double>(s.begin(), s.end()).size() < n;
    const auto got = roc_auc(y, s);
    const double want = pairwise_auc(y, s);
    if (got.auc != want) return {Outcome::Fail, fmt::format("vector {}: {} vs oracle {}", t, got.auc, want)};
  }
  return {Outcome::Pass, fmt::format("100 vectors ({} with ties) equal the pairwise oracle exactly", with_ties)};
}

Line property_suites() {
  const std::string cmd = std::string(JA4ML_UNIT_TESTS_PATH) +
                          " --gtest_brief=1 --gtest_filter='Properties.*:ClientHello.Reserializes*:Gbdt.RespectsDepthBound:"
                          "Gbdt.DeterministicAndThreadIndependent:Split.*' > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {Outcome::Fail, "property suite reported failures"};
  return {Outcome::Pass, "invariance, round-trip, 1e5-input fuzzing, determinism and depth-bound suites green"};
}

Line threat_harness() {
  const auto scenarios = load_scenarios(fs::path(JA4ML_DATA_DIR) / "harness/scenarios.json");
  std::set<std::string> rows;
  bool mimic_blind_spot = false, rotation_blind_spot = false;
  for (const auto &sc : scenarios) {
    const auto r = run_scenario(sc);
    if (r.verdict != Verdict::Pass) {
      return {Outcome::Fail, fmt::format("'{}' ({}): {}", sc.name, to_string(r.verdict), r.detail)};
    }
    rows.insert(sc.threat_row);
    if (sc.mutation == Mutation::BitwiseMimic && sc.expected == Expectation::FingerprintEqualsTarget) {
      mimic_blind_spot |= r.after == r.target;
    }
    if (sc.mutation == Mutation::RotateUserAgentMetadata || sc.mutation == Mutation::RotateIpMetadata) {
      rotation_blind_spot |= r.after == r.before;
    }
  }
  const std::set<std::string> table = {"Automated Scripts and Web Scrapers", "Header Spoofing (User-Agent/IP Rotation)",
                                       "Full Stack Emulation via Browser Automation",
                                       "Sophisticated TLS Fingerprint Spoofing"};
  if (rows != table) return {Outcome::Fail, "scenario set does not cover every threat-model row"};
  if (!mimic_blind_spot || !rotation_blind_spot) return {Outcome::Fail, "blind-spot scenarios missing"};
  return {Outcome::Pass, fmt::format("{} scenarios over 4 threat rows, blind spots confirmed", scenarios.size())};
}

} // namespace

int main() {
  report(1, "fingerprint bit-exactness", fingerprint_exactness);
  report(2, "metric arithmetic regression", metric_regression);
  FullRun run;
  try {
    run = full_run();
  } catch (const std::exception &e) {
    run.available = true;
    run.why = e.what();
  }
  report(3, "full-scale JA4DB reproduction", [&] {
    if (run.available && run.report.is_null()) return Line{Outcome::Fail, run.why};
    return full_scale(run);
  });
  report(4, "feature-importance sanity", [&] {
    if (run.available && run.report.is_null()) return Line{Outcome::Fail, run.why};
    return importance_sanity(run);
  });
  report(5, "GBDT oracle equivalence", gbdt_oracle);
  report(6, "AUC oracle equivalence", auc_oracle);
  report(7, "property suites", property_suites);
  report(8, "threat-model harness", threat_harness);
  return failures == 0 ? 0 : 1;
}
