// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "ja4ml/error.hpp"
#include "ja4ml/prng.hpp"

namespace ja4ml {

namespace {

constexpr char kFormat[] = "ja4ml-gbdt";
constexpr int kVersion = 1;
constexpr double kTieTolerance = 1e-12;
// Keeps probabilities strictly inside (0, 1) and hessians positive.
constexpr double kProbFloor = 0x1p-53;

double sigmoid(double m) noexcept {
  const double p = m >= 0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

bool strictly_better(double candidate, double incumbent) noexcept {
  const double scale = std::max(std::abs(candidate), std::abs(incumbent));
  return candidate - incumbent > kTieTolerance * scale;
}

double leaf_weight(double g, double h, double lambda) noexcept {
  const double denom = h + lambda;
  return denom > 0 ? -g / denom : 0.0;
}

struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  double threshold = 0.0;
  double gl = 0.0;
  double hl = 0.0;
};

struct SortedColumn {
  std::vector<double> values;
  std::vector<std::uint32_t> rows;
};

class TreeBuilder {
public:
  TreeBuilder(const Matrix &x, const std::vector<SortedColumn> &columns, const TrainConfig &cfg, unsigned threads)
      : x_(x), columns_(columns), cfg_(cfg), threads_(threads) {}

  Tree build(const std::vector<double> &grad, const std::vector<double> &hess, const std::vector<char> &in_sample,
             const std::vector<int> &features, std::vector<double> &importance) {
    Tree tree;
    const std::size_t n = x_.rows;
    pos_.assign(n, -1);
    TreeNode root;
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_sample[r]) continue;
      pos_[r] = 0;
      root.sum_grad += grad[r];
      root.sum_hess += hess[r];
    }
    tree.nodes.push_back(root);
    std::vector<int> frontier{0};

    for (int depth = 0; depth < cfg_.max_depth && !frontier.empty(); ++depth) {
      slot_of_.assign(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_[frontier[s]] = static_cast<int>(s);

      // best[k][slot] for the k-th selected feature
      std::vector<std::vector<SplitCandidate>> best(features.size());
      auto scan_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) best[k] = scan(features[k], tree, frontier, grad, hess);
      };
      run_parallel(features.size(), scan_range);

      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const int node_id = frontier[s];
        int chosen_k = -1;
        for (std::size_t k = 0; k < features.size(); ++k) {
          const auto &c = best[k][s];
          if (!c.valid || !(c.gain > cfg_.min_split_gain)) continue;
          if (chosen_k < 0 || strictly_better(c.gain, best[chosen_k][s].gain)) chosen_k = static_cast<int>(k);
        }
        if (chosen_k < 0) continue;
        const auto &c = best[chosen_k][s];
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto &node = tree.nodes[node_id];
        node.feature = features[chosen_k];
        node.threshold = c.threshold;
        node.gain = c.gain;
        node.left = left;
        node.right = left + 1;
        importance[node.feature] += c.gain;
        next.push_back(left);
        next.push_back(left + 1);
      }

      // Route sampled rows into children; rows in unsplit nodes are done.
      for (std::size_t r = 0; r < n; ++r) {
        const int p = pos_[r];
        if (p < 0) continue;
        const auto &node = tree.nodes[p];
        if (node.is_leaf()) {
          pos_[r] = -1;
          continue;
        }
        const int child = x_(r, node.feature) < node.threshold ? node.left : node.right;
        pos_[r] = child;
        tree.nodes[child].sum_grad += grad[r];
        tree.nodes[child].sum_hess += hess[r];
      }
      frontier = std::move(next);
    }

    for (auto &node : tree.nodes) {
      if (node.is_leaf()) node.weight = leaf_weight(node.sum_grad, node.sum_hess, cfg_.l2_leaf_reg);
    }
    return tree;
  }

private:
  std::vector<SplitCandidate> scan(int feature, const Tree &tree, const std::vector<int> &frontier,
                                   const std::vector<double> &grad, const std::vector<double> &hess) const {
    struct Acc {
      double gl = 0.0, hl = 0.0, last = 0.0;
      bool seen = false;
    };
    std::vector<Acc> acc(frontier.size());
    std::vector<SplitCandidate> best(frontier.size());
    const auto &col = columns_[feature];
    const double lambda = cfg_.l2_leaf_reg;
    for (std::size_t i = 0; i < col.rows.size(); ++i) {
      const auto r = col.rows[i];
      const int p = pos_[r];
      if (p < 0) continue;
      const int s = slot_of_[p];
      if (s < 0) continue;
      const double v = col.values[i];
      auto &a = acc[s];
      if (a.seen && v != a.last) {
        const auto &node = tree.nodes[frontier[s]];
        const double gain = split_gain(a.gl, a.hl, node.sum_grad, node.sum_hess, lambda);
        auto &b = best[s];
        if (!b.valid || strictly_better(gain, b.gain)) {
          double thr = a.last + (v - a.last) / 2;
          if (!(thr > a.last)) thr = v;
          b = {true, gain, thr, a.gl, a.hl};
        }
      }
      a.gl += grad[r];
      a.hl += hess[r];
      a.last = v;
      a.seen = true;
    }
    return best;
  }

  template <class F> void run_parallel(std::size_t count, F &&fn) const {
    const std::size_t workers = std::min<std::size_t>(threads_, count);
    if (workers <= 1) {
      fn(0, count);
      return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t begin = 0; begin < count; begin += chunk) {
      pool.emplace_back([&fn, begin, end = std::min(count, begin + chunk)] { fn(begin, end); });
    }
    for (auto &t : pool) t.join();
  }

  const Matrix &x_;
  const std::vector<SortedColumn> &columns_;
  const TrainConfig &cfg_;
  unsigned threads_;
  std::vector<int> pos_;
  std::vector<int> slot_of_;
};

void check_finite(double v, const char *what) {
  if (!std::isfinite(v)) throw DataError(fmt::format("{} must be finite", what));
}

nlohmann::json tree_to_json(const Tree &tree, int id) {
  const auto &n = tree.nodes.at(id);
  if (n.is_leaf()) return {{"leaf", n.weight}, {"sum_grad", n.sum_grad}, {"sum_hess", n.sum_hess}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"gain", n.gain},
          {"sum_grad", n.sum_grad},
          {"sum_hess", n.sum_hess},
          {"left", tree_to_json(tree, n.left)},
          {"right", tree_to_json(tree, n.right)}};
}

int tree_from_json(const nlohmann::json &j, Tree &tree, int depth) {
  if (depth > 64) throw DataError("model tree nesting too deep");
  if (!j.is_object()) throw DataError("model tree node is not an object");
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode n;
  n.sum_grad = j.at("sum_grad").get<double>();
  n.sum_hess = j.at("sum_hess").get<double>();
  if (j.contains("leaf")) {
    n.weight = j.at("leaf").get<double>();
    tree.nodes[id] = n;
    return id;
  }
  n.feature = j.at("feature").get<int>();
  n.threshold = j.at("threshold").get<double>();
  n.gain = j.at("gain").get<double>();
  tree.nodes[id] = n;
  const int left = tree_from_json(j.at("left"), tree, depth + 1);
  const int right = tree_from_json(j.at("right"), tree, depth + 1);
  tree.nodes[id].left = left;
  tree.nodes[id].right = right;
  return id;
}

} // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw DataError(fmt::format("row {} has {} columns, expected {}", r, rows[r].size(), m.cols));
    std::copy(rows[r].begin(), rows[r].end(), m.values.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
  }
  return m;
}

void TrainConfig::validate() const {
  if (n_trees < 0) throw DataError("n_trees must be >= 0");
  if (max_depth < 1) throw DataError("max_depth must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw DataError("learning_rate must be > 0");
  if (!(subsample > 0 && subsample <= 1)) throw DataError("subsample must lie in (0, 1]");
  if (!(colsample > 0 && colsample <= 1)) throw DataError("colsample must lie in (0, 1]");
  if (!(l2_leaf_reg >= 0) || !std::isfinite(l2_leaf_reg)) throw DataError("l2_leaf_reg must be >= 0");
  if (!(min_split_gain >= 0) || !std::isfinite(min_split_gain)) throw DataError("min_split_gain must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"n_trees", n_trees},         {"max_depth", max_depth}, {"learning_rate", learning_rate},
          {"subsample", subsample},     {"colsample", colsample}, {"l2_leaf_reg", l2_leaf_reg},
          {"min_split_gain", min_split_gain}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json &doc) {
  TrainConfig c;
  c.n_trees = doc.at("n_trees").get<int>();
  c.max_depth = doc.at("max_depth").get<int>();
  c.learning_rate = doc.at("learning_rate").get<double>();
  c.subsample = doc.at("subsample").get<double>();
  c.colsample = doc.at("colsample").get<double>();
  c.l2_leaf_reg = doc.at("l2_leaf_reg").get<double>();
  c.min_split_gain = doc.at("min_split_gain").get<double>();
  c.seed = doc.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

double Tree::predict(const double *row) const {
  if (nodes.empty()) return 0.0;
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const auto &n = nodes[id];
    id = row[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[id].weight;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  int deepest = 0;
  std::size_t visited = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) throw DataError("tree has a dangling child index");
    if (++visited > nodes.size()) throw DataError("tree nodes do not form a tree");
    deepest = std::max(deepest, d);
    const auto &n = nodes[id];
    if (n.is_leaf()) continue;
    stack.emplace_back(n.left, d + 1);
    stack.emplace_back(n.right, d + 1);
  }
  return deepest;
}

double GbdtModel::margin(const double *row) const {
  double sum = 0.0;
  for (const auto &t : trees) sum += t.predict(row);
  return base_score + config.learning_rate * sum;
}

double split_gain(double gl, double hl, double g, double h, double lambda) noexcept {
  const double gr = g - gl;
  const double hr = h - hl;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

GbdtModel train(const Matrix &x, const std::vector<int> &y, const TrainConfig &config,
                std::vector<std::string> feature_names, const TrainHooks &hooks) {
  config.validate();
  const std::size_t n = x.rows;
  const std::size_t f_count = x.cols;
  if (y.size() != n) throw DataError(fmt::format("train: {} rows but {} labels", n, y.size()));
  if (n < 2) throw DataError("train: need at least 2 rows");
  if (f_count == 0) throw DataError("train: need at least 1 feature");
  if (x.values.size() != n * f_count) throw DataError("train: matrix storage does not match its shape");
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError("train: labels must be 0 or 1");
    positives += static_cast<std::size_t>(label);
  }
  if (positives == 0 || positives == n) throw DataError("train: labels contain a single class");
  for (double v : x.values) check_finite(v, "feature values");
  if (feature_names.empty()) {
    for (std::size_t f = 0; f < f_count; ++f) feature_names.push_back(fmt::format("f{}", f));
  }
  if (feature_names.size() != f_count) throw DataError("train: feature_names size does not match column count");

  std::vector<SortedColumn> columns(f_count);
  for (std::size_t f = 0; f < f_count; ++f) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    columns[f].rows = order;
    columns[f].values.resize(n);
    for (std::size_t i = 0; i < n; ++i) columns[f].values[i] = x(order[i], f);
  }

  GbdtModel model;
  model.config = config;
  model.feature_names = std::move(feature_names);
  model.gain_importance.assign(f_count, 0.0);
  const double pos_rate = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(pos_rate / (1.0 - pos_rate));

  const unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  TreeBuilder builder(x, columns, config, threads);
  SplitMix64 rng(config.seed);
  std::vector<double> margin(n, model.base_score), prob(n), grad(n), hess(n);
  std::vector<char> in_sample(n, 1);
  const auto k_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.colsample * static_cast<double>(f_count))));

  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      prob[r] = sigmoid(margin[r]);
      grad[r] = prob[r] - y[r];
      hess[r] = prob[r] * (1.0 - prob[r]);
    }
    if (config.subsample < 1.0) {
      for (std::size_t r = 0; r < n; ++r) in_sample[r] = rng.uniform() < config.subsample;
    }
    std::vector<int> features(f_count);
    std::iota(features.begin(), features.end(), 0);
    if (k_cols < f_count) {
      for (std::size_t i = 0; i < k_cols; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(f_count - i));
        std::swap(features[i], features[j]);
      }
      features.resize(k_cols);
      std::sort(features.begin(), features.end());
    }

    auto tree = builder.build(grad, hess, in_sample, features, model.gain_importance);
    for (std::size_t r = 0; r < n; ++r) margin[r] += config.learning_rate * tree.predict(x.row(r));
    model.trees.push_back(std::move(tree));

    if (hooks.on_round) {
      for (std::size_t r = 0; r < n; ++r) prob[r] = sigmoid(margin[r]);
      hooks.on_round(round, logloss(y, prob));
    }
  }
  return model;
}

std::vector<double> predict_proba(const GbdtModel &model, const Matrix &x) {
  if (x.cols != model.n_features()) {
    throw DataError(fmt::format("predict: input has {} columns, model expects {}", x.cols, model.n_features()));
  }
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = sigmoid(model.margin(x.row(r)));
  return out;
}

std::vector<std::pair<std::string, double>> feature_importance(const GbdtModel &model) {
  std::vector<std::size_t> order(model.feature_names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return model.gain_importance[a] > model.gain_importance[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (auto i : order) out.emplace_back(model.feature_names[i], model.gain_importance[i]);
  return out;
}

double logloss(const std::vector<int> &y, const std::vector<double> &p) {
  if (y.size() != p.size() || y.empty()) throw DataError("logloss: size mismatch or empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    sum -= y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return sum / static_cast<double>(y.size());
}

nlohmann::json GbdtModel::to_json() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto &t : trees) trees_json.push_back(t.nodes.empty() ? nlohmann::json::object() : tree_to_json(t, 0));
  return {{"format", kFormat},
          {"version", kVersion},
          {"config", config.to_json()},
          {"base_score", base_score},
          {"feature_names", feature_names},
          {"gain_importance", gain_importance},
          {"trees", std::move(trees_json)}};
}

GbdtModel GbdtModel::from_json(const nlohmann::json &doc) {
  if (!doc.is_object() || doc.value("format", "") != kFormat) throw DataError("not a ja4ml-gbdt model file");
  const int version = doc.value("version", -1);
  if (version != kVersion) throw DataError(fmt::format("unsupported model version {} (expected {})", version, kVersion));
  GbdtModel m;
  try {
    m.config = TrainConfig::from_json(doc.at("config"));
    m.base_score = doc.at("base_score").get<double>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.gain_importance = doc.at("gain_importance").get<std::vector<double>>();
    for (const auto &tj : doc.at("trees")) {
      Tree t;
      if (!tj.empty()) tree_from_json(tj, t, 0);
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(fmt::format("corrupt model: {}", e.what()));
  }
  if (m.gain_importance.size() != m.feature_names.size()) throw DataError("corrupt model: importance size mismatch");
  for (const auto &t : m.trees) {
    for (const auto &n : t.nodes) {
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= m.feature_names.size()) {
        throw DataError("corrupt model: split feature out of range");
      }
    }
    if (t.depth() > m.config.max_depth) throw DataError("corrupt model: tree exceeds max_depth");
  }
  return m;
}

std::string serialize_model(const GbdtModel &model) { return model.to_json().dump() + "\n"; }

void save_model(const GbdtModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << serialize_model(model);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

GbdtModel load_model(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(fmt::format("corrupt model file '{}': {}", path.string(), e.what()));
  }
  return GbdtModel::from_json(doc);
}

} // namespace ja4ml
