// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ja4ml/dataset.hpp"
#include "ja4ml/error.hpp"
#include "ja4ml/features.hpp"
#include "ja4ml/ja4.hpp"
#include "ja4ml/metrics.hpp"
#include "ja4ml/pcap_ingest.hpp"

namespace fs = std::filesystem;

namespace ja4ml::cli {

namespace {

constexpr char kEchoFormat[] = "ja4ml-config-echo";

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", p.string()));
  out << text;
  if (!out) throw DataError(fmt::format("write to '{}' failed", p.string()));
}

nlohmann::json read_json(const fs::path &p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(fmt::format("'{}' is not valid JSON: {}", p.string(), e.what()));
  }
}

void write_echo(const fs::path &path, std::string_view subcommand, const nlohmann::json &settings,
                const nlohmann::json &results) {
  nlohmann::json doc = {{"format", kEchoFormat}, {"version", 1},      {"subcommand", subcommand},
                        {"settings", settings},  {"results", results}};
  write_file(path, doc.dump(2) + "\n");
}

fs::path echo_path(const std::string &explicit_path, const std::string &output, std::string_view sub) {
  if (!explicit_path.empty()) return explicit_path;
  if (!output.empty()) return output + ".config.json";
  return fmt::format("ja4ml-{}.config.json", sub);
}

Transport parse_transport(std::string_view t) {
  if (t == "tcp") return Transport::Tcp;
  if (t == "quic" || t == "udp-quic") return Transport::UdpQuic;
  throw DataError(fmt::format("unknown transport '{}' (expected tcp or quic)", t));
}

struct Fingerprinted {
  std::string flow;
  std::string ja4;
};

// Fingerprints every candidate of a source. Candidates that fail to parse are
// reported and skipped when `tolerant`; otherwise the error propagates.
std::vector<Fingerprinted> fingerprint_source(CaptureSource source, bool tolerant, std::ostream &err) {
  std::vector<Fingerprinted> out;
  const auto origin = source.origin;
  auto reader = open_capture(std::move(source));
  while (auto cand = reader.next()) {
    try {
      const auto bytes = extract_clienthello_bytes(*cand);
      const auto hello = parse_clienthello(bytes, cand->transport);
      out.push_back({cand->flow.to_string(), compute_ja4(hello).full});
    } catch (const ParseError &e) {
      if (!tolerant) throw;
      err << fmt::format("warning: {}: skipping {}: {}\n", origin, cand->flow.to_string(), e.what());
    }
  }
  return out;
}

/// Hands out dataset rows and counts reads on each side of the split.
class SplitAccess {
public:
  SplitAccess(const std::vector<LabeledRecord> &rows, const SplitManifest &m) : rows_(rows), is_test_(rows.size(), 0) {
    if (m.n != rows.size()) {
      throw DataError(fmt::format("manifest covers {} rows but the dataset has {}", m.n, rows.size()));
    }
    std::vector<char> seen(rows.size(), 0);
    auto mark = [&](std::uint32_t i, bool test) {
      if (i >= rows.size() || seen[i]) throw DataError(fmt::format("manifest index {} is out of range or repeated", i));
      seen[i] = 1;
      is_test_[i] = test;
    };
    for (auto i : m.train_indices) mark(i, false);
    for (auto i : m.test_indices) mark(i, true);
  }

  const LabeledRecord &at(std::uint32_t i) {
    (is_test_[i] ? counts_.test_reads : counts_.train_reads) += 1;
    return rows_[i];
  }

  const RowAccessCounts &counts() const noexcept { return counts_; }

private:
  const std::vector<LabeledRecord> &rows_;
  std::vector<char> is_test_;
  RowAccessCounts counts_;
};

struct EncodedRows {
  Matrix x;
  std::vector<int> y;
  std::vector<std::uint64_t> source_index;
};

EncodedRows encode_rows(const std::vector<const LabeledRecord *> &rows, const CategoryEncoder &encoder,
                        const std::vector<std::string> &columns) {
  EncodedRows out;
  out.x = Matrix(rows.size(), columns.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = encode(rows[r]->features, encoder, columns);
    std::copy(v.begin(), v.end(), out.x.values.begin() + static_cast<std::ptrdiff_t>(r * columns.size()));
    out.y.push_back(rows[r]->label == Label::BadBot ? 1 : 0);
    out.source_index.push_back(rows[r]->source_index);
  }
  return out;
}

void check_columns(const std::vector<std::string> &names) {
  const auto known = feature_columns(true);
  for (const auto &n : names) {
    if (std::find(known.begin(), known.end(), n) == known.end()) {
      throw DataError(fmt::format("model feature '{}' is not a known column", n));
    }
  }
}

std::vector<std::string> categorical_subset(const std::vector<std::string> &columns) {
  std::vector<std::string> out;
  for (const auto &c : columns) {
    if (is_categorical(c)) out.push_back(c);
  }
  return out;
}

fs::path default_encoder(const std::string &model, const std::string &encoder) {
  return encoder.empty() ? fs::path(model).parent_path() / "encoder.json" : fs::path(encoder);
}

std::string rebase(const std::string &path, const std::string &dir) {
  if (path.empty() || dir.empty()) return path;
  return (fs::path(dir) / fs::path(path).filename()).string();
}

} // namespace

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char *env = std::getenv("JA4ML_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used, 10);
      if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception &) {
      throw DataError(fmt::format("JA4ML_SEED='{}' is not an unsigned integer", env));
    }
  }
  return kDefaultSeed;
}

// ---- option (de)serialization ----

nlohmann::json FingerprintOptions::to_json() const {
  return {{"pcaps", pcaps}, {"hex", hex}, {"transport", transport}, {"output", output}, {"echo", echo}};
}
FingerprintOptions FingerprintOptions::from_json(const nlohmann::json &j) {
  FingerprintOptions o;
  o.pcaps = j.at("pcaps").get<std::vector<std::string>>();
  o.hex = j.at("hex").get<std::vector<std::string>>();
  o.transport = j.at("transport").get<std::string>();
  o.output = j.at("output").get<std::string>();
  o.echo = j.at("echo").get<std::string>();
  return o;
}

nlohmann::json IngestOptions::to_json() const {
  return {{"input", input}, {"out_dir", out_dir}, {"seed", seed}, {"ratio", ratio}, {"good_bots", good_bots}};
}
IngestOptions IngestOptions::from_json(const nlohmann::json &j) {
  IngestOptions o;
  o.input = j.at("input").get<std::string>();
  o.out_dir = j.at("out_dir").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.ratio = j.at("ratio").get<double>();
  o.good_bots = j.at("good_bots").get<std::vector<std::string>>();
  return o;
}

nlohmann::json TrainOptions::to_json() const {
  auto cfg = config.to_json();
  cfg["threads"] = config.threads;
  return {{"dataset", dataset}, {"manifest", manifest}, {"out_dir", out_dir}, {"config", cfg},
          {"include_application", include_application}};
}
TrainOptions TrainOptions::from_json(const nlohmann::json &j) {
  TrainOptions o;
  o.dataset = j.at("dataset").get<std::string>();
  o.manifest = j.at("manifest").get<std::string>();
  o.out_dir = j.at("out_dir").get<std::string>();
  o.config = TrainConfig::from_json(j.at("config"));
  o.config.threads = j.at("config").value("threads", 1u);
  o.include_application = j.at("include_application").get<bool>();
  return o;
}

nlohmann::json EvalOptions::to_json() const {
  return {{"model", model}, {"encoder", encoder}, {"dataset", dataset}, {"manifest", manifest}, {"out_dir", out_dir}};
}
EvalOptions EvalOptions::from_json(const nlohmann::json &j) {
  EvalOptions o;
  o.model = j.at("model").get<std::string>();
  o.encoder = j.at("encoder").get<std::string>();
  o.dataset = j.at("dataset").get<std::string>();
  o.manifest = j.at("manifest").get<std::string>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

nlohmann::json ScoreOptions::to_json() const {
  return {{"model", model}, {"encoder", encoder}, {"ja4", ja4}, {"pcaps", pcaps}, {"output", output}, {"echo", echo}};
}
ScoreOptions ScoreOptions::from_json(const nlohmann::json &j) {
  ScoreOptions o;
  o.model = j.at("model").get<std::string>();
  o.encoder = j.at("encoder").get<std::string>();
  o.ja4 = j.at("ja4").get<std::vector<std::string>>();
  o.pcaps = j.at("pcaps").get<std::vector<std::string>>();
  o.output = j.at("output").get<std::string>();
  o.echo = j.at("echo").get<std::string>();
  return o;
}

// ---- subcommands ----

int cmd_fingerprint(const FingerprintOptions &opts, std::ostream &out, std::ostream &err) {
  if (opts.pcaps.empty() && opts.hex.empty()) throw DataError("fingerprint: give at least one --pcap or --hex input");
  const auto transport = parse_transport(opts.transport);
  std::vector<Fingerprinted> rows;
  for (const auto &p : opts.pcaps) {
    auto got = fingerprint_source(CaptureSource::pcap_file(p), true, err);
    rows.insert(rows.end(), got.begin(), got.end());
  }
  for (const auto &h : opts.hex) {
    auto got = fingerprint_source(CaptureSource::hex_string(h, transport), false, err);
    rows.insert(rows.end(), got.begin(), got.end());
  }
  std::string listing;
  for (const auto &r : rows) listing += fmt::format("{}\t{}\n", r.flow, r.ja4);
  if (opts.output.empty()) out << listing;
  else write_file(opts.output, listing);
  write_echo(echo_path(opts.echo, opts.output, "fingerprint"), "fingerprint", opts.to_json(),
             {{"fingerprints", rows.size()}});
  return rows.empty() ? kExitEmpty : kExitOk;
}

int cmd_ingest(const IngestOptions &opts, std::ostream &out, std::ostream &) {
  if (opts.out_dir.empty()) throw DataError("ingest: --out-dir is required");
  ja4ml::IngestOptions io;
  if (!opts.good_bots.empty()) io.good_bots = opts.good_bots;
  const auto result = ingest(opts.input, io);
  const fs::path dir = opts.out_dir;
  fs::create_directories(dir);
  write_dataset_csv(dir / "dataset.csv", result.labeled);
  write_file(dir / "stats.json", result.stats.to_json().dump(2) + "\n");
  if (result.labeled.empty()) {
    write_echo(dir / "ingest.config.json", "ingest", opts.to_json(), {{"labeled", 0}});
    out << "no labeled records\n";
    return kExitEmpty;
  }
  const auto manifest = split(result.labeled.size(), opts.seed, opts.ratio);
  const auto manifest_text = manifest.to_json().dump() + "\n";
  write_file(dir / "split.json", manifest_text);
  const auto balance = split_balance(result.labeled, manifest);
  write_file(dir / "balance.json", balance.dump(2) + "\n");

  const auto &s = result.stats;
  using R = ReferenceComposition;
  out << fmt::format("{:<22}{:>10}{:>12}{:>10}\n", "", "count", "reference", "delta");
  out << fmt::format("{:<22}{:>10}{:>12}{:>+10}\n", "total records", s.total_records, R::total, s.total_records - R::total);
  out << fmt::format("{:<22}{:>10}{:>12}{:>+10}\n", "bad_bot", s.bad_bot, R::bad_bot, s.bad_bot - R::bad_bot);
  out << fmt::format("{:<22}{:>10}{:>12}{:>+10}\n", "benign", s.benign, R::benign, s.benign - R::benign);
  out << fmt::format("{:<22}{:>10}{:>12}{:>+10}\n", "good bots excluded", s.good_bot_excluded, R::good_bot_excluded,
                     s.good_bot_excluded - R::good_bot_excluded);
  out << fmt::format("{:<22}{:>10}\n", "missing fingerprint", s.missing_fingerprint);
  out << fmt::format("{:<22}{:>10}\n", "malformed fingerprint", s.malformed_fingerprint);
  for (const char *side : {"train", "test"}) {
    const auto &b = balance[side];
    out << fmt::format("{:<6} rows {:>8}  bad_bot {:>8} ({:.2f}%)  benign {:>8}\n", side, b["rows"].get<std::int64_t>(),
                       b["bad_bot"].get<std::int64_t>(), b["bad_bot_percent"].get<double>(),
                       b["benign"].get<std::int64_t>());
  }
  write_echo(dir / "ingest.config.json", "ingest", opts.to_json(),
             {{"labeled", result.labeled.size()}, {"manifest_sha256", sha256_hex(manifest_text)}});
  return kExitOk;
}

int cmd_train(const TrainOptions &opts, std::ostream &out, std::ostream &) {
  if (opts.out_dir.empty()) throw DataError("train: --out-dir is required");
  const auto rows = read_dataset_csv(opts.dataset);
  const auto manifest = SplitManifest::from_json(read_json(opts.manifest));
  SplitAccess access(rows, manifest);

  std::vector<const LabeledRecord *> train_rows;
  std::vector<FeatureVector> train_features;
  for (auto i : manifest.train_indices) {
    const auto &r = access.at(i);
    train_rows.push_back(&r);
    train_features.push_back(r.features);
  }
  const auto columns = feature_columns(opts.include_application);
  const auto encoder = fit_encoder(train_features, categorical_subset(columns));
  auto data = encode_rows(train_rows, encoder, columns);

  const fs::path dir = opts.out_dir;
  fs::create_directories(dir);
  std::string log;
  TrainHooks hooks;
  double last_loss = 0.0;
  hooks.on_round = [&](int round, double loss) {
    log += fmt::format("[{}]\ttrain-logloss:{:.6f}\n", round, loss);
    last_loss = loss;
  };
  const auto model = train(data.x, data.y, opts.config, columns, hooks);
  const auto model_text = serialize_model(model);
  write_file(dir / "model.json", model_text);
  write_file(dir / "encoder.json", encoder.to_json().dump(2) + "\n");
  write_file(dir / "train.log", log);

  const auto &counts = access.counts();
  out << fmt::format("trained {} trees on {} rows ({} features); final train-logloss {:.6f}\n", model.trees.size(),
                     data.y.size(), columns.size(), last_loss);
  out << fmt::format("row reads: train {} test {}\n", counts.train_reads, counts.test_reads);
  write_echo(dir / "train.config.json", "train", opts.to_json(),
             {{"train_rows", data.y.size()},
              {"train_row_reads", counts.train_reads},
              {"test_row_reads", counts.test_reads},
              {"final_train_logloss", last_loss},
              {"model_sha256", sha256_hex(model_text)}});
  return kExitOk;
}

int cmd_eval(const EvalOptions &opts, std::ostream &out, std::ostream &) {
  if (opts.out_dir.empty()) throw DataError("eval: --out-dir is required");
  const auto model = load_model(opts.model);
  check_columns(model.feature_names);
  const auto encoder = CategoryEncoder::from_json(read_json(default_encoder(opts.model, opts.encoder)));
  const auto rows = read_dataset_csv(opts.dataset);
  const auto manifest = SplitManifest::from_json(read_json(opts.manifest));
  SplitAccess access(rows, manifest);

  std::vector<const LabeledRecord *> test_rows;
  for (auto i : manifest.test_indices) test_rows.push_back(&access.at(i));
  if (test_rows.empty()) throw DataError("eval: manifest has no test rows");
  const auto data = encode_rows(test_rows, encoder, model.feature_names);
  const auto scores = predict_proba(model, data.x);
  const auto report = evaluate(data.y, scores, feature_importance(model));

  const fs::path dir = opts.out_dir;
  fs::create_directories(dir);
  const auto json_text = render_report(report, ReportFormat::Json);
  const auto text = render_report(report, ReportFormat::Text);
  write_file(dir / "report.json", json_text);
  write_file(dir / "report.txt", text);
  write_file(dir / "roc.csv", render_report(report, ReportFormat::RocCsv));
  double total_gain = 0.0;
  for (const auto &[_, g] : report.importances) total_gain += g;
  std::string imp = "feature,gain,share\n";
  for (const auto &[name, g] : report.importances) {
    imp += fmt::format("{},{:.17g},{:.6f}\n", name, g, total_gain > 0 ? g / total_gain : 0.0);
  }
  write_file(dir / "importances.csv", imp);
  std::string preds = "source_index,label,probability\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    preds += fmt::format("{},{},{:.17g}\n", data.source_index[i], data.y[i] ? "bad_bot" : "benign", scores[i]);
  }
  write_file(dir / "predictions.csv", preds);
  out << text;
  write_echo(dir / "eval.config.json", "eval", opts.to_json(),
             {{"test_rows", data.y.size()},
              {"train_row_reads", access.counts().train_reads},
              {"accuracy", report.metrics.accuracy},
              {"auc", report.auc},
              {"report_sha256", sha256_hex(json_text)}});
  return kExitOk;
}

int cmd_score(const ScoreOptions &opts, std::ostream &out, std::ostream &err) {
  if (opts.ja4.empty() && opts.pcaps.empty()) throw DataError("score: give at least one JA4 string or --pcap");
  const auto model = load_model(opts.model);
  check_columns(model.feature_names);
  const auto encoder = CategoryEncoder::from_json(read_json(default_encoder(opts.model, opts.encoder)));

  std::string listing;
  std::size_t scored = 0;
  auto score_one = [&](const std::string &label, const std::string &ja4) {
    const auto fv = FeatureVector::from_parts(parse_ja4_string(ja4));
    const auto row = encode(fv, encoder, model.feature_names);
    Matrix x(1, row.size());
    x.values = row;
    const double p = predict_proba(model, x).front();
    listing += fmt::format("{}\t{}\t{:.6f}\t{}\n", label, ja4, p, p > kDecisionThreshold ? "bad_bot" : "benign");
    ++scored;
  };
  for (const auto &s : opts.ja4) score_one("ja4", s);
  for (const auto &p : opts.pcaps) {
    for (const auto &f : fingerprint_source(CaptureSource::pcap_file(p), true, err)) score_one(f.flow, f.ja4);
  }
  if (opts.output.empty()) out << listing;
  else write_file(opts.output, listing);
  write_echo(echo_path(opts.echo, opts.output, "score"), "score", opts.to_json(), {{"scored", scored}});
  return scored == 0 ? kExitEmpty : kExitOk;
}

int cmd_replay(const std::string &echo, const std::string &out_dir, std::ostream &out, std::ostream &err) {
  const auto doc = read_json(echo);
  if (doc.value("format", "") != kEchoFormat || doc.value("version", 0) != 1) {
    throw DataError(fmt::format("'{}' is not a config echo file", echo));
  }
  const auto sub = doc.at("subcommand").get<std::string>();
  const auto &settings = doc.at("settings");
  if (sub == "fingerprint") {
    auto o = FingerprintOptions::from_json(settings);
    if (!out_dir.empty()) {
      o.echo = rebase(echo_path(o.echo, o.output, "fingerprint").string(), out_dir);
      o.output = rebase(o.output, out_dir);
    }
    return cmd_fingerprint(o, out, err);
  }
  if (sub == "ingest") {
    auto o = IngestOptions::from_json(settings);
    if (!out_dir.empty()) o.out_dir = out_dir;
    return cmd_ingest(o, out, err);
  }
  if (sub == "train") {
    auto o = TrainOptions::from_json(settings);
    if (!out_dir.empty()) o.out_dir = out_dir;
    return cmd_train(o, out, err);
  }
  if (sub == "eval") {
    auto o = EvalOptions::from_json(settings);
    if (!out_dir.empty()) o.out_dir = out_dir;
    return cmd_eval(o, out, err);
  }
  if (sub == "score") {
    auto o = ScoreOptions::from_json(settings);
    if (!out_dir.empty()) {
      o.echo = rebase(echo_path(o.echo, o.output, "score").string(), out_dir);
      o.output = rebase(o.output, out_dir);
    }
    return cmd_score(o, out, err);
  }
  throw DataError(fmt::format("cannot replay subcommand '{}'", sub));
}

} // namespace ja4ml::cli
