#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "guarnet/matrix.hpp"

namespace guarnet::gbdt {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// l(z, y) = -y log p - (1-y) log(1-p), p = sigmoid(z); stable at large |z|.
inline double logistic_loss(double logit, int label) {
  double softplus_neg = logit < 0.0 ? -logit + std::log1p(std::exp(logit))
                                    : std::log1p(std::exp(-logit));
  return softplus_neg + (1 - label) * logit;
}

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

inline GradHess grad_hess(double logit, int label) {
  double p = sigmoid(logit);
  return {p - static_cast<double>(label), p * (1.0 - p)};
}

inline double leaf_weight(double g_sum, double h_sum, double lambda) {
  return -g_sum / (h_sum + lambda);
}

// Objective reduction of a split under the second-order structure score.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };
  return 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma;
}

struct TrainParams {
  int rounds = 100;
  double eta = 0.1;
  int max_depth = 4;
  double gamma = 0.0;
  double lambda = 1.0;
  double min_child_hessian = 1.0;
  double base_score = 0.0;  // initial log-odds
};

inline void check_params(const TrainParams& p) {
  if (p.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (!(p.eta > 0.0) || p.eta > 1.0) throw std::invalid_argument("eta must be in (0,1]");
  if (p.gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  if (p.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (p.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (p.min_child_hessian < 0.0) throw std::invalid_argument("min_child_hessian must be >= 0");
}

struct SplitDecision {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exact greedy over every feature and every midpoint between consecutive
// distinct sorted values; rows go left iff value < threshold. Returns nothing
// unless some split has strictly positive gain and both children meet
// min_child_hessian. Ties: lowest feature index, then lowest threshold.
inline std::optional<SplitDecision> best_split(const std::vector<std::vector<double>>& rows,
                                               const std::vector<double>& g,
                                               const std::vector<double>& h,
                                               const TrainParams& params) {
  std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  std::size_t n_features = rows.front().size();
  double g_total = 0.0, h_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_total += g[i];
    h_total += h[i];
  }

  SplitDecision best;
  bool found = false;
  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rows[a][f] != rows[b][f] ? rows[a][f] < rows[b][f] : a < b;
    });
    double gl = 0.0, hl = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      gl += g[order[k]];
      hl += h[order[k]];
      double v = rows[order[k]][f];
      double next = rows[order[k + 1]][f];
      if (next == v) continue;
      double t = v + (next - v) / 2.0;
      if (!(t > v)) continue;  // adjacent floats can round the midpoint onto v
      if (hl < params.min_child_hessian || h_total - hl < params.min_child_hessian) continue;
      double gain = split_gain(gl, hl, g_total - gl, h_total - hl, params.lambda, params.gamma);
      if (gain > 0.0 && (!found || gain > best.gain)) {
        best = {static_cast<int>(f), t, gain};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double value_at(const std::vector<double>& x) const {
    int v = 0;
    while (nodes[v].feature >= 0)
      v = x[nodes[v].feature] < nodes[v].threshold ? nodes[v].left : nodes[v].right;
    return nodes[v].leaf;
  }

  int internal_count() const {
    int c = 0;
    for (const auto& n : nodes) c += n.feature >= 0;
    return c;
  }

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeEnsemble {
  TrainParams params;
  std::vector<std::string> dimension_names;
  std::vector<Tree> trees;
};

inline double predict_logit(const TreeEnsemble& model, const std::vector<double>& x) {
  if (x.size() != model.dimension_names.size())
    throw std::invalid_argument("predict: expected " +
                                std::to_string(model.dimension_names.size()) + " dimensions, got " +
                                std::to_string(x.size()));
  double z = model.params.base_score;
  for (const auto& t : model.trees) z += model.params.eta * t.value_at(x);
  return z;
}

inline double predict(const TreeEnsemble& model, const std::vector<double>& x) {
  return sigmoid(predict_logit(model, x));
}

// Scores a whole cohort; the matrix must already be aligned to the model's
// dimensions (see align_to).
inline std::vector<double> predict_all(const TreeEnsemble& model, const FeatureMatrix& m) {
  if (m.dimension_names != model.dimension_names)
    throw std::invalid_argument("predict: matrix dimensions differ from the model's");
  std::vector<double> out;
  out.reserve(m.n_rows());
  for (const auto& row : m.values) out.push_back(sigmoid(predict_logit(model, row)));
  return out;
}

struct TrainLog {
  double initial_loss = 0.0;
  std::vector<double> round_loss;  // total training loss after each kept round
  bool stopped_early = false;
};

// Newton boosting with exact greedy splits. Trees grow level by level over
// pre-sorted feature columns; each node's split depends only on its own rows,
// so the result equals depth-first growth. Gradient sums accumulate in global
// (value, row) sort order, making per-node decisions bit-identical to
// best_split on the extracted rows.
inline TreeEnsemble train(const FeatureMatrix& matrix, const TrainParams& params,
                          TrainLog* log = nullptr) {
  check_params(params);
  const std::size_t n = matrix.n_rows();
  const std::size_t n_features = matrix.n_dims();
  if (n == 0) throw std::invalid_argument("training matrix has no rows");
  if (n_features == 0) throw std::invalid_argument("training matrix has no dimensions");
  if (matrix.labels.size() != n) throw std::invalid_argument("labels/rows size mismatch");
  for (int y : matrix.labels)
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");

  std::vector<std::vector<std::uint32_t>> sorted(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& ord = sorted[f];
    ord.resize(n);
    for (std::size_t i = 0; i < n; ++i) ord[i] = static_cast<std::uint32_t>(i);
    std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      double va = matrix.values[a][f], vb = matrix.values[b][f];
      return va != vb ? va < vb : a < b;
    });
  }

  TreeEnsemble model;
  model.params = params;
  model.dimension_names = matrix.dimension_names;

  std::vector<double> margin(n, params.base_score);
  std::vector<double> g(n), h(n);
  std::vector<int> position(n);

  auto total_loss = [&](double shift) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += logistic_loss(margin[i] + shift, matrix.labels[i]);
    return s;
  };
  double current_loss = total_loss(0.0);
  if (log) {
    log->initial_loss = current_loss;
    log->round_loss.clear();
    log->stopped_early = false;
  }

  struct NodeStat {
    double g = 0.0, h = 0.0;
  };

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto gh = grad_hess(margin[i], matrix.labels[i]);
      g[i] = gh.g;
      h[i] = gh.h;
    }

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<NodeStat> stats(1);
    std::fill(position.begin(), position.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      stats[0].g += g[i];
      stats[0].h += h[i];
    }

    std::vector<int> frontier{0};
    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
      std::size_t n_nodes = tree.nodes.size();
      std::vector<SplitDecision> best(n_nodes);
      std::vector<char> has_best(n_nodes, 0), is_frontier(n_nodes, 0);
      std::vector<double> gl(n_nodes), hl(n_nodes), last_value(n_nodes);
      std::vector<std::int64_t> seen(n_nodes);
      for (int id : frontier) is_frontier[id] = 1;

      for (std::size_t f = 0; f < n_features; ++f) {
        for (int id : frontier) {
          gl[id] = 0.0;
          hl[id] = 0.0;
          seen[id] = 0;
        }
        for (std::uint32_t r : sorted[f]) {
          int id = position[r];
          if (!is_frontier[id]) continue;
          double v = matrix.values[r][f];
          if (seen[id] > 0 && v > last_value[id]) {
            double t = last_value[id] + (v - last_value[id]) / 2.0;
            if (t > last_value[id] && hl[id] >= params.min_child_hessian &&
                stats[id].h - hl[id] >= params.min_child_hessian) {
              double gain = split_gain(gl[id], hl[id], stats[id].g - gl[id], stats[id].h - hl[id],
                                       params.lambda, params.gamma);
              if (gain > 0.0 && (!has_best[id] || gain > best[id].gain)) {
                best[id] = {static_cast<int>(f), t, gain};
                has_best[id] = 1;
              }
            }
          }
          gl[id] += g[r];
          hl[id] += h[r];
          last_value[id] = v;
          ++seen[id];
        }
      }

      std::vector<int> next_frontier;
      for (int id : frontier) {
        if (!has_best[id]) continue;
        // Indices first: emplace_back below may reallocate the node storage.
        int left = static_cast<int>(tree.nodes.size());
        int right = left + 1;
        tree.nodes[id].feature = best[id].feature;
        tree.nodes[id].threshold = best[id].threshold;
        tree.nodes[id].left = left;
        tree.nodes[id].right = right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.emplace_back();
        stats.emplace_back();
        next_frontier.push_back(left);
        next_frontier.push_back(right);
      }
      if (!next_frontier.empty()) {
        for (std::size_t r = 0; r < n; ++r) {
          const auto& node = tree.nodes[position[r]];
          if (node.feature < 0) continue;
          int child = matrix.values[r][node.feature] < node.threshold ? node.left : node.right;
          position[r] = child;
          stats[child].g += g[r];
          stats[child].h += h[r];
        }
      }
      for (int id : frontier)
        if (tree.nodes[id].feature < 0)
          tree.nodes[id].leaf = leaf_weight(stats[id].g, stats[id].h, params.lambda);
      frontier = std::move(next_frontier);
    }
    for (int id : frontier)
      tree.nodes[id].leaf = leaf_weight(stats[id].g, stats[id].h, params.lambda);

    if (tree.nodes.size() == 1) {
      // Root refused every split. Keep the plain leaf step only while it
      // still reduces loss; otherwise training has converged.
      double shift = params.eta * tree.nodes[0].leaf;
      double candidate = total_loss(shift);
      if (!(candidate < current_loss)) {
        if (log) log->stopped_early = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) margin[i] += shift;
      current_loss = candidate;
    } else {
      for (std::size_t i = 0; i < n; ++i)
        margin[i] += params.eta * tree.nodes[position[i]].leaf;
      current_loss = total_loss(0.0);
    }
    model.trees.push_back(std::move(tree));
    if (log) log->round_loss.push_back(current_loss);
  }

  return model;
}

// ---------------------------------------------------------------------------
// Importance

struct ImportanceReport {
  std::vector<std::int64_t> split_count;              // per dimension
  std::int64_t total_splits = 0;
  std::array<double, kCategoryCount> category_share{};  // zeros when undefined
  bool defined = false;                               // false iff no internal nodes
};

inline ImportanceReport importance(const TreeEnsemble& model,
                                   const std::vector<FeatureCategory>& categories) {
  if (categories.size() != model.dimension_names.size())
    throw std::invalid_argument("importance: category map size mismatch");
  ImportanceReport rep;
  rep.split_count.assign(model.dimension_names.size(), 0);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (node.feature >= 0) {
        ++rep.split_count[node.feature];
        ++rep.total_splits;
      }
  rep.defined = rep.total_splits > 0;
  if (rep.defined) {
    for (std::size_t j = 0; j < categories.size(); ++j)
      rep.category_share[static_cast<int>(categories[j])] +=
          static_cast<double>(rep.split_count[j]);
    for (double& s : rep.category_share) s /= static_cast<double>(rep.total_splits);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization (single JSON document; nested nodes)

namespace detail {

inline nlohmann::json node_to_json(const Tree& t, int id) {
  const TreeNode& n = t.nodes[id];
  if (n.feature < 0) return nlohmann::json{{"leaf", n.leaf}};
  return nlohmann::json{{"feat", n.feature},
                        {"thr", n.threshold},
                        {"left", node_to_json(t, n.left)},
                        {"right", node_to_json(t, n.right)}};
}

inline int node_from_json(const nlohmann::json& j, Tree& t) {
  int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[id].leaf = j.at("leaf").get<double>();
    return id;
  }
  t.nodes[id].feature = j.at("feat").get<int>();
  t.nodes[id].threshold = j.at("thr").get<double>();
  int left = node_from_json(j.at("left"), t);
  int right = node_from_json(j.at("right"), t);
  t.nodes[id].left = left;
  t.nodes[id].right = right;
  return id;
}

}  // namespace detail

inline nlohmann::json to_json(const TreeEnsemble& model) {
  nlohmann::json j;
  j["params"] = {{"rounds", model.params.rounds},
                 {"eta", model.params.eta},
                 {"max_depth", model.params.max_depth},
                 {"gamma", model.params.gamma},
                 {"lambda", model.params.lambda},
                 {"min_child_hessian", model.params.min_child_hessian},
                 {"base_score", model.params.base_score}};
  j["dimensions"] = model.dimension_names;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(detail::node_to_json(t, 0));
  j["trees"] = std::move(trees);
  return j;
}

inline TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
  TreeEnsemble model;
  const auto& p = j.at("params");
  model.params.rounds = p.at("rounds").get<int>();
  model.params.eta = p.at("eta").get<double>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.gamma = p.at("gamma").get<double>();
  model.params.lambda = p.at("lambda").get<double>();
  model.params.min_child_hessian = p.at("min_child_hessian").get<double>();
  model.params.base_score = p.at("base_score").get<double>();
  model.dimension_names = j.at("dimensions").get<std::vector<std::string>>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    detail::node_from_json(tj, t);
    model.trees.push_back(std::move(t));
  }
  return model;
}

inline void save_model(const TreeEnsemble& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << to_json(model).dump(2) << "\n";
}

inline TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    return ensemble_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid model file: " + e.what());
  }
}

}  // namespace guarnet::gbdt
