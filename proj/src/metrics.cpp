// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ja4ml/error.hpp"

namespace ja4ml {

namespace {

double ratio(std::int64_t num, std::int64_t den, bool &flag) {
  if (den == 0) {
    flag = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, bool &flag) {
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp, flag);
  m.recall = ratio(tp, tp + fn, flag);
  const double denom = m.precision + m.recall;
  if (denom == 0.0) {
    flag = true;
    m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / denom;
  }
  m.support = tp + fn;
  return m;
}

void check_binary(const std::vector<int> &v, const char *what) {
  for (int x : v) {
    if (x != 0 && x != 1) throw DataError(fmt::format("{} must be 0/1", what));
  }
}

std::string threshold_text(double t) { return std::isinf(t) ? "inf" : fmt::format("{:.17g}", t); }

} // namespace

ConfusionMatrix confusion(const std::vector<int> &y_true, const std::vector<int> &y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError(fmt::format("confusion: {} labels vs {} predictions", y_true.size(), y_pred.size()));
  }
  check_binary(y_true, "y_true");
  check_binary(y_pred, "y_pred");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) (y_pred[i] ? cm.tp : cm.fn) += 1;
    else (y_pred[i] ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

Prf1 prf1(const ConfusionMatrix &cm) {
  Prf1 out;
  out.positive = class_metrics(cm.tp, cm.fp, cm.fn, out.zero_division);
  out.negative = class_metrics(cm.tn, cm.fn, cm.fp, out.zero_division);
  out.accuracy = ratio(cm.tp + cm.tn, cm.total(), out.zero_division);
  return out;
}

std::vector<int> apply_threshold(const std::vector<double> &scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

RocResult roc_auc(const std::vector<int> &y_true, const std::vector<double> &scores) {
  if (y_true.size() != scores.size()) throw DataError("roc_auc: labels and scores differ in length");
  check_binary(y_true, "y_true");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("roc_auc: NaN score");
  }
  const std::size_t n = y_true.size();
  const auto pos = static_cast<std::uint64_t>(std::count(y_true.begin(), y_true.end(), 1));
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Rank statistic: twice the summed (1-based, ascending, tie-averaged) ranks
  // of the positives stays an integer.
  std::uint64_t twice_rank_sum = 0;
  // Trapezoid: sum over steps of d_fp * (tp_prev + tp_cur), also an integer.
  std::uint64_t trapezoid = 0;
  RocResult out;
  out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::uint64_t gp = 0, gn = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (y_true[order[j]] ? gp : gn) += 1;
      ++j;
    }
    // Descending positions i..j-1 are ascending ranks n-j+1 .. n-i.
    twice_rank_sum += gp * ((n - j + 1) + (n - i));
    trapezoid += gn * (2 * tp + gp);
    tp += gp;
    fp += gn;
    out.points.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
    i = j;
  }
  const double denom = 2.0 * static_cast<double>(pos) * static_cast<double>(neg);
  out.auc = static_cast<double>(twice_rank_sum - pos * (pos + 1)) / denom;
  out.trapezoid_auc = static_cast<double>(trapezoid) / denom;
  return out;
}

EvalReport evaluate(const std::vector<int> &y_true, const std::vector<double> &scores,
                    std::vector<std::pair<std::string, double>> importances) {
  EvalReport r;
  r.confusion = confusion(y_true, apply_threshold(scores, r.threshold));
  r.metrics = prf1(r.confusion);
  auto roc = roc_auc(y_true, scores);
  r.auc = roc.auc;
  r.roc_points = std::move(roc.points);
  r.importances = std::move(importances);
  return r;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "text") return ReportFormat::Text;
  if (name == "csv" || name == "roc-csv") return ReportFormat::RocCsv;
  throw DataError(fmt::format("unknown report format '{}'", name));
}

nlohmann::json report_to_json(const EvalReport &r) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto &p : r.roc_points) {
    roc.push_back({{"threshold", std::isinf(p.threshold) ? nlohmann::json("inf") : nlohmann::json(p.threshold)},
                   {"fpr", p.fpr},
                   {"tpr", p.tpr}});
  }
  nlohmann::json imp = nlohmann::json::array();
  for (const auto &[name, gain] : r.importances) imp.push_back({{"feature", name}, {"gain", gain}});
  return {{"confusion", {{"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tp", r.confusion.tp}}},
          {"positive_class", "bad_bot"},
          {"threshold", r.threshold},
          {"precision", {{"bad_bot", r.metrics.positive.precision}, {"benign", r.metrics.negative.precision}}},
          {"recall", {{"bad_bot", r.metrics.positive.recall}, {"benign", r.metrics.negative.recall}}},
          {"f1", {{"bad_bot", r.metrics.positive.f1}, {"benign", r.metrics.negative.f1}}},
          {"support", {{"bad_bot", r.metrics.positive.support}, {"benign", r.metrics.negative.support}}},
          {"accuracy", r.metrics.accuracy},
          {"zero_division", r.metrics.zero_division},
          {"auc", r.auc},
          {"roc_points", std::move(roc)},
          {"importances", std::move(imp)}};
}

std::string render_report(const EvalReport &r, ReportFormat format) {
  switch (format) {
  case ReportFormat::Json:
    return report_to_json(r).dump(2) + "\n";
  case ReportFormat::RocCsv: {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto &p : r.roc_points) out += fmt::format("{},{:.17g},{:.17g}\n", threshold_text(p.threshold), p.fpr, p.tpr);
    return out;
  }
  case ReportFormat::Text: {
    const auto &cm = r.confusion;
    const auto &m = r.metrics;
    std::string out;
    out += "Confusion matrix (positive class: bad_bot)\n";
    out += fmt::format("{:<16}{:>14}{:>14}{:>10}\n", "", "Pred benign", "Pred bad_bot", "Total");
    out += fmt::format("{:<16}{:>14}{:>14}{:>10}\n", "Actual benign", cm.tn, cm.fp, cm.tn + cm.fp);
    out += fmt::format("{:<16}{:>14}{:>14}{:>10}\n", "Actual bad_bot", cm.fn, cm.tp, cm.fn + cm.tp);
    out += fmt::format("{:<16}{:>14}{:>14}{:>10}\n\n", "Total", cm.tn + cm.fn, cm.fp + cm.tp, cm.total());
    out += fmt::format("{:<10}{:>11}{:>9}{:>9}{:>10}\n", "class", "precision", "recall", "f1", "support");
    out += fmt::format("{:<10}{:>11.4f}{:>9.4f}{:>9.4f}{:>10}\n", "benign", m.negative.precision, m.negative.recall,
                       m.negative.f1, m.negative.support);
    out += fmt::format("{:<10}{:>11.4f}{:>9.4f}{:>9.4f}{:>10}\n\n", "bad_bot", m.positive.precision, m.positive.recall,
                       m.positive.f1, m.positive.support);
    out += fmt::format("accuracy {:.4f}\n", m.accuracy);
    out += fmt::format("auc {:.4f}\n", r.auc);
    if (m.zero_division) out += "warning: some ratios were 0/0 and are reported as 0\n";
    if (!r.importances.empty()) {
      out += "\nFeature importance (total gain)\n";
      for (const auto &[name, gain] : r.importances) out += fmt::format("  {:<20}{:.6g}\n", name, gain);
    }
    return out;
  }
  }
  throw DataError("unknown report format");
}

} // namespace ja4ml
