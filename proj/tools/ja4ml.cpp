// SPDX-License-Identifier: Apache-2.0
// ja4ml: JA4 fingerprinting and bot classification pipeline.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ja4ml/cli.hpp"
#include "ja4ml/error.hpp"

namespace cli = ja4ml::cli;

int main(int argc, char **argv) {
  CLI::App app{"ja4ml: JA4 TLS fingerprints and a gradient-boosted bot classifier"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;

  cli::FingerprintOptions fp;
  auto *fp_cmd = app.add_subcommand("fingerprint", "Print JA4 fingerprints of captured or hex ClientHellos");
  fp_cmd->add_option("--pcap", fp.pcaps, "Classic pcap file (repeatable)")->check(CLI::ExistingFile);
  fp_cmd->add_option("--hex", fp.hex, "Hex ClientHello handshake message or TLS record (repeatable)");
  fp_cmd->add_option("--transport", fp.transport, "Transport for --hex inputs")
      ->check(CLI::IsMember({"tcp", "quic"}))
      ->capture_default_str();
  fp_cmd->add_option("-o,--output", fp.output, "Write the listing here instead of stdout");
  fp_cmd->add_option("--echo", fp.echo, "Config echo path (default: <output>.config.json)");

  cli::IngestOptions ing;
  auto *ing_cmd = app.add_subcommand("ingest", "Label a JA4DB export and write the dataset and split manifest");
  ing_cmd->add_option("input", ing.input, "JA4DB JSON export")->required()->check(CLI::ExistingFile);
  ing_cmd->add_option("--out-dir", ing.out_dir, "Output directory")->required();
  ing_cmd->add_option("--ratio", ing.ratio, "Training fraction")->capture_default_str();
  ing_cmd->add_option("--good-bot", ing.good_bots, "Good-bot identifier (repeatable; replaces the defaults)");
  ing_cmd->add_option("--seed", seed_flag, "Split seed (default: $JA4ML_SEED or 42)");

  cli::TrainOptions tr;
  auto *tr_cmd = app.add_subcommand("train", "Train the classifier on the training split");
  tr_cmd->add_option("--dataset", tr.dataset, "dataset.csv from ingest")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--manifest", tr.manifest, "split.json from ingest")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--out-dir", tr.out_dir, "Output directory")->required();
  tr_cmd->add_option("--trees", tr.config.n_trees, "Boosting rounds")->capture_default_str();
  tr_cmd->add_option("--depth", tr.config.max_depth, "Maximum tree depth")->capture_default_str();
  tr_cmd->add_option("--learning-rate", tr.config.learning_rate, "Shrinkage")->capture_default_str();
  tr_cmd->add_option("--subsample", tr.config.subsample, "Row sampling rate per round")->capture_default_str();
  tr_cmd->add_option("--colsample", tr.config.colsample, "Column sampling rate per tree")->capture_default_str();
  tr_cmd->add_option("--l2", tr.config.l2_leaf_reg, "L2 leaf regularization")->capture_default_str();
  tr_cmd->add_option("--min-split-gain", tr.config.min_split_gain, "Minimum gain to split")->capture_default_str();
  tr_cmd->add_option("--threads", tr.config.threads, "Split-search threads (0 = all cores)")->capture_default_str();
  tr_cmd->add_flag("--include-application", tr.include_application, "Include the application column as a feature");
  tr_cmd->add_option("--seed", seed_flag, "Sampling seed (default: $JA4ML_SEED or 42)");

  cli::EvalOptions ev;
  auto *ev_cmd = app.add_subcommand("eval", "Evaluate a model on the test split");
  ev_cmd->add_option("--model", ev.model, "model.json")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--encoder", ev.encoder, "encoder.json (default: next to the model)");
  ev_cmd->add_option("--dataset", ev.dataset, "dataset.csv")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--manifest", ev.manifest, "split.json")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--out-dir", ev.out_dir, "Output directory")->required();

  cli::ScoreOptions sc;
  auto *sc_cmd = app.add_subcommand("score", "Score JA4 strings or captures");
  sc_cmd->add_option("--model", sc.model, "model.json")->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--encoder", sc.encoder, "encoder.json (default: next to the model)");
  sc_cmd->add_option("ja4", sc.ja4, "JA4 strings");
  sc_cmd->add_option("--pcap", sc.pcaps, "Capture files to fingerprint and score")->check(CLI::ExistingFile);
  sc_cmd->add_option("-o,--output", sc.output, "Write results here instead of stdout");
  sc_cmd->add_option("--echo", sc.echo, "Config echo path (default: <output>.config.json)");

  std::string replay_path, replay_dir;
  auto *rp_cmd = app.add_subcommand("replay", "Re-run a command from its config echo file");
  rp_cmd->add_option("echo", replay_path, "Config echo file")->required()->check(CLI::ExistingFile);
  rp_cmd->add_option("--out-dir", replay_dir, "Redirect outputs into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitError;
  }

  try {
    if (*fp_cmd) return cli::cmd_fingerprint(fp, std::cout, std::cerr);
    if (*ing_cmd) {
      ing.seed = cli::resolve_seed(seed_flag);
      return cli::cmd_ingest(ing, std::cout, std::cerr);
    }
    if (*tr_cmd) {
      tr.config.seed = cli::resolve_seed(seed_flag);
      return cli::cmd_train(tr, std::cout, std::cerr);
    }
    if (*ev_cmd) return cli::cmd_eval(ev, std::cout, std::cerr);
    if (*sc_cmd) return cli::cmd_score(sc, std::cout, std::cerr);
    if (*rp_cmd) return cli::cmd_replay(replay_path, replay_dir, std::cout, std::cerr);
  } catch (const ja4ml::Error &e) {
    std::cerr << "ja4ml: " << e.what() << '\n';
    return cli::kExitError;
  } catch (const std::exception &e) {
    std::cerr << "ja4ml: unexpected error: " << e.what() << '\n';
    return cli::kExitError;
  }
  return cli::kExitError;
}
