#pragma once

// Rolling quarterly harness: reassembles the hybrid matrix each quarter,
// trains one booster per feature ablation, scores the next cohort, and rolls
// forward. Metric cells can be absent (degenerate labels) without aborting
// the run; the reason travels with the cell.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "guarnet/csv.hpp"
#include "guarnet/features.hpp"
#include "guarnet/gbdt.hpp"
#include "guarnet/matrix.hpp"

namespace guarnet {

// The four feature ablations compared across windows. NW is the node-wise
// baseline; the others add community behavior, network structure, or both.
enum class Ablation { NW, NW_CM, NW_N, H };

inline constexpr std::array<Ablation, 4> kAllAblations = {
    Ablation::NW, Ablation::NW_CM, Ablation::NW_N, Ablation::H};

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::NW: return "NW";
    case Ablation::NW_CM: return "NW+CM";
    case Ablation::NW_N: return "NW+N";
    case Ablation::H: return "H";
  }
  throw std::invalid_argument("unknown ablation");
}

inline Ablation parse_ablation(const std::string& s) {
  for (auto a : kAllAblations)
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown ablation '" + s + "'");
}

inline std::set<FeatureCategory> categories_of(Ablation a) {
  std::set<FeatureCategory> cats = {FeatureCategory::BP, FeatureCategory::CR,
                                    FeatureCategory::AL};
  if (a == Ablation::NW_CM || a == Ablation::H) cats.insert(FeatureCategory::CM);
  if (a == Ablation::NW_N || a == Ablation::H) cats.insert(FeatureCategory::NS);
  return cats;
}

struct RollingConfig {
  Quarter start{2013, 1};  // first train quarter
  int n_windows = 10;
  std::vector<Ablation> ablations{kAllAblations.begin(), kAllAblations.end()};
  double recall_threshold = 0.5;
  gbdt::TrainParams train;
  CommunityMethod community_method = CommunityMethod::edge_betweenness;
  int max_communities = kDefaultMaxCommunities;
};

// A metric that may legitimately not exist (single-class labels, empty
// cohort); absent cells carry the reason instead of a made-up number.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  bool defined() const { return value.has_value(); }

  bool operator==(const MetricValue&) const = default;
};

// Mann-Whitney AUC: (concordant + 0.5 * tied) / (P * N), computed with
// average ranks so ties cost half credit each.
inline MetricValue auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores/labels size mismatch");
  std::int64_t pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg) += 1;
  if (pos == 0) return {std::nullopt, "no positive labels"};
  if (neg == 0) return {std::nullopt, "no negative labels"};

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  double p = static_cast<double>(pos), n = static_cast<double>(neg);
  double u = rank_sum_pos - p * (p + 1.0) / 2.0;
  return {u / (p * n), ""};
}

// Share of actual positives scored at or above the threshold.
inline MetricValue recall(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("recall: scores/labels size mismatch");
  std::int64_t pos = 0, hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    ++pos;
    if (scores[i] >= threshold) ++hit;
  }
  if (pos == 0) return {std::nullopt, "no positive labels"};
  return {static_cast<double>(hit) / static_cast<double>(pos), ""};
}

// Consecutive rolling steps, one quarter apart.
inline std::vector<WindowQuad> schedule(Quarter start, int n) {
  if (n < 1) throw std::invalid_argument("schedule: need at least one window");
  std::vector<WindowQuad> quads;
  quads.reserve(n);
  for (int i = 0; i < n; ++i) quads.push_back(WindowQuad{next_quarter(start, i)});
  return quads;
}

struct AblationCell {
  MetricValue auc;
  MetricValue recall;
  std::int64_t n_instances = 0;  // evaluation cohort size
  std::int64_t n_positives = 0;  // evaluation cohort positives

  bool operator==(const AblationCell&) const = default;
};

struct WindowResult {
  WindowQuad window;               // the train quarter quad
  std::string evaluation_label;    // report row tag: the evaluation quarter
  std::vector<AblationCell> cells; // parallel to config ablations
  std::int64_t train_rows = 0;
  std::int64_t train_positives = 0;

  // Split-count importance of the full-feature model, as raw category shares
  // and rolled up into the three plotted groups.
  bool importance_defined = false;
  std::array<double, kCategoryCount> category_share{};
  double nodewise_share = 0.0;   // BP + CR + AL
  double network_share = 0.0;    // NS
  double community_share = 0.0;  // CM

  bool operator==(const WindowResult&) const = default;
};

struct RollingReport {
  Quarter start{2013, 1};
  std::vector<Ablation> ablations;
  double recall_threshold = 0.5;
  std::vector<WindowResult> windows;
  std::vector<MetricValue> mean_auc;     // per ablation, over defined cells
  std::vector<MetricValue> mean_recall;  // per ablation, over defined cells

  bool operator==(const RollingReport&) const = default;
};

namespace detail {

inline Date last_event_date(const LoanDataset& ds) {
  Date last = make_date(1, 1, 1);
  for (const auto& c : ds.customers) last = std::max(last, c.registration_date);
  for (const auto& k : ds.contracts) last = std::max(last, k.start_date);
  for (const auto& g : ds.guarantees) last = std::max(last, g.signed_date);
  for (const auto& r : ds.repayments) last = std::max(last, r.due_date);
  return last;
}

}  // namespace detail

inline RollingReport run_rolling(const LoanDataset& ds, const RollingConfig& cfg) {
  if (cfg.n_windows < 1) throw std::invalid_argument("run_rolling: n_windows >= 1");
  if (cfg.ablations.empty()) throw std::invalid_argument("run_rolling: no ablations");
  gbdt::check_params(cfg.train);

  // The last window needs outcomes two quarters past its train quarter; a
  // dataset that ends earlier cannot honour the schedule.
  Quarter last_eval = next_quarter(cfg.start, cfg.n_windows + 1);
  if (detail::last_event_date(ds) < quarter_start(last_eval))
    throw std::invalid_argument("run_rolling: dataset timeline ends before " +
                                to_string(last_eval));

  auto joined = join_records(ds);

  // Quarter q's matrix serves twice: as train matrix of the window anchored
  // at q and as the scored cohort of the window before it.
  std::vector<FeatureMatrix> matrices;
  matrices.reserve(cfg.n_windows + 1);
  for (int i = 0; i <= cfg.n_windows; ++i) {
    WindowQuad quad{next_quarter(cfg.start, i)};
    auto net = build_network(joined, quad.snapshot());
    auto analysis = analyze_snapshot(net, cfg.community_method, cfg.max_communities);
    matrices.push_back(assemble(ds, quad, net, analysis));
  }

  RollingReport report;
  report.start = cfg.start;
  report.ablations = cfg.ablations;
  report.recall_threshold = cfg.recall_threshold;

  for (int i = 0; i < cfg.n_windows; ++i) {
    const FeatureMatrix& train_m = matrices[i];
    const FeatureMatrix& test_m = matrices[i + 1];

    WindowResult wr;
    wr.window = WindowQuad{next_quarter(cfg.start, i)};
    wr.evaluation_label = to_string(wr.window.evaluation());
    wr.train_rows = static_cast<std::int64_t>(train_m.n_rows());
    for (int y : train_m.labels) wr.train_positives += y;

    bool single_class = train_m.labels.empty();
    if (!single_class) {
      single_class = true;
      for (int y : train_m.labels)
        if (y != train_m.labels.front()) { single_class = false; break; }
    }

    for (Ablation a : cfg.ablations) {
      AblationCell cell;
      auto test_sub = select_categories(test_m, categories_of(a));
      cell.n_instances = static_cast<std::int64_t>(test_sub.n_rows());
      for (int y : test_sub.labels) cell.n_positives += y;

      if (single_class) {
        cell.auc = {std::nullopt, "training labels are single-class"};
        cell.recall = {std::nullopt, "training labels are single-class"};
        wr.cells.push_back(std::move(cell));
        continue;
      }

      auto train_sub = select_categories(train_m, categories_of(a));
      auto model = gbdt::train(train_sub, cfg.train);
      auto aligned = align_to(test_sub, train_sub.dimension_names, train_sub.categories);
      auto scores = gbdt::predict_all(model, aligned);
      cell.auc = auc(scores, aligned.labels);
      cell.recall = recall(scores, aligned.labels, cfg.recall_threshold);
      wr.cells.push_back(std::move(cell));

      if (a == Ablation::H) {
        auto imp = gbdt::importance(model, train_sub.categories);
        wr.importance_defined = imp.defined;
        wr.category_share = imp.category_share;
        wr.nodewise_share = imp.category_share[static_cast<int>(FeatureCategory::BP)] +
                            imp.category_share[static_cast<int>(FeatureCategory::CR)] +
                            imp.category_share[static_cast<int>(FeatureCategory::AL)];
        wr.network_share = imp.category_share[static_cast<int>(FeatureCategory::NS)];
        wr.community_share = imp.category_share[static_cast<int>(FeatureCategory::CM)];
      }
    }
    report.windows.push_back(std::move(wr));
  }

  for (std::size_t a = 0; a < cfg.ablations.size(); ++a) {
    double auc_sum = 0.0, rec_sum = 0.0;
    int auc_n = 0, rec_n = 0;
    for (const auto& wr : report.windows) {
      if (wr.cells[a].auc.defined()) {
        auc_sum += *wr.cells[a].auc.value;
        ++auc_n;
      }
      if (wr.cells[a].recall.defined()) {
        rec_sum += *wr.cells[a].recall.value;
        ++rec_n;
      }
    }
    report.mean_auc.push_back(auc_n ? MetricValue{auc_sum / auc_n, ""}
                                    : MetricValue{std::nullopt, "no defined cells"});
    report.mean_recall.push_back(rec_n ? MetricValue{rec_sum / rec_n, ""}
                                       : MetricValue{std::nullopt, "no defined cells"});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace detail {

inline nlohmann::json metric_json(const MetricValue& m) {
  nlohmann::json j;
  if (m.defined())
    j["value"] = *m.value;
  else {
    j["value"] = nullptr;
    j["reason"] = m.reason;
  }
  return j;
}

}  // namespace detail

inline nlohmann::json rolling_to_json(const RollingReport& r) {
  nlohmann::json j;
  j["start"] = to_string(r.start);
  j["recall_threshold"] = r.recall_threshold;
  j["ablations"] = nlohmann::json::array();
  for (auto a : r.ablations) j["ablations"].push_back(to_string(a));
  j["windows"] = nlohmann::json::array();
  for (const auto& wr : r.windows) {
    nlohmann::json w;
    w["train_quarter"] = to_string(wr.window.train);
    w["observation_quarter"] = to_string(wr.window.observation());
    w["evaluation_quarter"] = wr.evaluation_label;
    w["train_rows"] = wr.train_rows;
    w["train_positives"] = wr.train_positives;
    w["cells"] = nlohmann::json::object();
    for (std::size_t a = 0; a < r.ablations.size(); ++a) {
      nlohmann::json c;
      c["auc"] = detail::metric_json(wr.cells[a].auc);
      c["recall"] = detail::metric_json(wr.cells[a].recall);
      c["n_instances"] = wr.cells[a].n_instances;
      c["n_positives"] = wr.cells[a].n_positives;
      w["cells"][to_string(r.ablations[a])] = std::move(c);
    }
    if (wr.importance_defined) {
      nlohmann::json imp;
      for (int c = 0; c < kCategoryCount; ++c)
        imp[to_string(kAllCategories[c])] = wr.category_share[c];
      imp["nodewise"] = wr.nodewise_share;
      imp["network"] = wr.network_share;
      imp["community"] = wr.community_share;
      w["importance"] = std::move(imp);
    } else {
      w["importance"] = nullptr;
    }
    j["windows"].push_back(std::move(w));
  }
  j["summary"] = nlohmann::json::object();
  for (std::size_t a = 0; a < r.ablations.size(); ++a) {
    nlohmann::json s;
    s["mean_auc"] = detail::metric_json(r.mean_auc[a]);
    s["mean_recall"] = detail::metric_json(r.mean_recall[a]);
    j["summary"][to_string(r.ablations[a])] = std::move(s);
  }
  return j;
}

namespace detail {

inline void write_metric_table(const RollingReport& r, const std::string& path,
                               const MetricValue AblationCell::*field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<std::string> header{"window"};
  for (auto a : r.ablations) header.push_back(to_string(a));
  csv::write_row(out, header);
  for (const auto& wr : r.windows) {
    std::vector<std::string> row{wr.evaluation_label};
    for (std::size_t a = 0; a < r.ablations.size(); ++a) {
      const MetricValue& m = wr.cells[a].*field;
      row.push_back(m.defined() ? csv::format_double(*m.value) : "");
    }
    csv::write_row(out, row);
  }
}

}  // namespace detail

inline void write_auc_csv(const RollingReport& r, const std::string& path) {
  detail::write_metric_table(r, path, &AblationCell::auc);
}

inline void write_recall_csv(const RollingReport& r, const std::string& path) {
  detail::write_metric_table(r, path, &AblationCell::recall);
}

inline void write_importance_csv(const RollingReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  csv::write_row(out, {"window", "nodewise", "network", "community"});
  for (const auto& wr : r.windows) {
    std::vector<std::string> row{wr.evaluation_label};
    if (wr.importance_defined) {
      row.push_back(csv::format_double(wr.nodewise_share));
      row.push_back(csv::format_double(wr.network_share));
      row.push_back(csv::format_double(wr.community_share));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    csv::write_row(out, row);
  }
}

}  // namespace guarnet
