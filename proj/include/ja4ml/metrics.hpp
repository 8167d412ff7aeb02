// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ja4ml {

/// Positive class is bad_bot (label 1).
struct ConfusionMatrix {
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tp = 0;

  std::int64_t total() const noexcept { return tn + fp + fn + tp; }
  friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct Prf1 {
  ClassMetrics positive; // bad_bot
  ClassMetrics negative; // benign
  double accuracy = 0.0;
  /// Set when any ratio hit 0/0 and was reported as 0.
  bool zero_division = false;
};

ConfusionMatrix confusion(const std::vector<int> &y_true, const std::vector<int> &y_pred);
Prf1 prf1(const ConfusionMatrix &cm);

/// Hard predictions at the fixed 0.5 threshold (p > 0.5 is bad_bot).
inline constexpr double kDecisionThreshold = 0.5;
std::vector<int> apply_threshold(const std::vector<double> &scores, double threshold = kDecisionThreshold);

struct RocPoint {
  double threshold; // +inf for the origin
  double fpr;
  double tpr;
};

struct RocResult {
  double auc = 0.0;
  /// Trapezoid area under `points`, computed from integer counts.
  double trapezoid_auc = 0.0;
  std::vector<RocPoint> points;
};

/// AUC by the rank statistic (ties count one half) and the ROC curve from a
/// sweep over distinct scores, highest first, starting at (0, 0).
RocResult roc_auc(const std::vector<int> &y_true, const std::vector<double> &scores);

struct EvalReport {
  ConfusionMatrix confusion;
  Prf1 metrics;
  double auc = 0.0;
  std::vector<RocPoint> roc_points;
  std::vector<std::pair<std::string, double>> importances;
  double threshold = kDecisionThreshold;
};

EvalReport evaluate(const std::vector<int> &y_true, const std::vector<double> &scores,
                    std::vector<std::pair<std::string, double>> importances = {});

enum class ReportFormat { Json, Text, RocCsv };
ReportFormat parse_report_format(std::string_view name);

std::string render_report(const EvalReport &report, ReportFormat format);
nlohmann::json report_to_json(const EvalReport &report);

} // namespace ja4ml
