// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ja4ml {

/// Dense row-major matrix of feature values.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double &operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const double *row(std::size_t r) const { return values.data() + r * cols; }

  static Matrix from_rows(const std::vector<std::vector<double>> &rows);
};

struct TrainConfig {
  int n_trees = 500;
  int max_depth = 8;
  double learning_rate = 0.05;
  double subsample = 0.8;
  double colsample = 0.8;
  double l2_leaf_reg = 1.0;
  double min_split_gain = 0.0;
  std::uint64_t seed = 42;
  /// Worker threads for split search (0 = hardware concurrency). Does not
  /// affect the trained model.
  unsigned threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json &doc);
};

/// Flat node storage; node 0 is the root. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0; // rows with value < threshold go left
  int left = -1;
  int right = -1;
  double weight = 0.0; // leaves only
  double gain = 0.0;   // internal nodes only
  double sum_grad = 0.0;
  double sum_hess = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double *row) const;
  /// Longest root-to-leaf path in edges; throws DataError if the structure
  /// is broken (dangling child, cycle).
  int depth() const;
};

struct GbdtModel {
  std::vector<Tree> trees;
  double base_score = 0.0;
  TrainConfig config;
  std::vector<std::string> feature_names;
  std::vector<double> gain_importance;

  std::size_t n_features() const noexcept { return feature_names.size(); }
  double margin(const double *row) const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json &doc);
};

struct TrainHooks {
  /// Called after each boosting round with the round index (0-based) and the
  /// training logloss over all rows.
  std::function<void(int, double)> on_round;
};

/// Second-order gain of splitting (G, H) into (gl, hl) / (G - gl, H - hl).
double split_gain(double gl, double hl, double g, double h, double lambda) noexcept;

/// Exact-greedy gradient boosting with logistic loss. y holds 0/1 labels.
GbdtModel train(const Matrix &x, const std::vector<int> &y, const TrainConfig &config,
                std::vector<std::string> feature_names = {}, const TrainHooks &hooks = {});

std::vector<double> predict_proba(const GbdtModel &model, const Matrix &x);

/// (feature name, accumulated gain), descending gain, ties by feature index.
std::vector<std::pair<std::string, double>> feature_importance(const GbdtModel &model);

double logloss(const std::vector<int> &y, const std::vector<double> &p);

void save_model(const GbdtModel &model, const std::filesystem::path &path);
GbdtModel load_model(const std::filesystem::path &path);

/// Canonical serialized text (what save_model writes).
std::string serialize_model(const GbdtModel &model);

} // namespace ja4ml
