#pragma once

// Report emitters over a loan dataset: the statistics summary as JSON plus
// plot-ready CSVs (loan periods, monthly default rate, default timing,
// component-size risk), the monthly complexity series, per-node centrality
// dumps with score-decile risk tables, and community risk JSON. Everything
// here is read-only over its inputs.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "guarnet/centrality.hpp"
#include "guarnet/community.hpp"
#include "guarnet/csv.hpp"
#include "guarnet/date.hpp"
#include "guarnet/graph.hpp"
#include "guarnet/loan_data.hpp"

namespace guarnet {

inline double default_rate_of(const SizeBucketStats& b) {
  return b.n_customers > 0 ? static_cast<double>(b.n_defaulted_customers) / b.n_customers : 0.0;
}

inline double default_rate_of(const MonthCount& m) {
  return m.n_due > 0 ? static_cast<double>(m.n_default) / m.n_due : 0.0;
}

inline nlohmann::json stats_to_json(const StatsReport& r) {
  nlohmann::json j;
  j["n_customers"] = r.n_customers;
  j["n_guarantee_relations"] = r.n_guarantee_relations;
  j["n_contracts"] = r.n_contracts;
  j["n_repayments"] = r.n_repayments;
  j["n_defaults"] = r.n_defaults;
  j["default_rate"] = r.default_rate;
  j["n_one_year"] = r.n_one_year;
  j["n_two_three_year"] = r.n_two_three_year;
  j["n_long"] = r.n_long;
  j["first_year_default_share"] = r.first_year_default_share;

  nlohmann::json periods = nlohmann::json::array();
  for (const auto& [months, count] : r.loan_period_histogram)
    periods.push_back(nlohmann::json{{"term_months", months}, {"n_contracts", count}});
  j["loan_period_histogram"] = periods;

  nlohmann::json monthly = nlohmann::json::array();
  for (const auto& pt : r.defaults_by_month)
    monthly.push_back(
        nlohmann::json{{"month", to_string(first_day_of_month_index(pt.month_index)).substr(0, 7)},
                       {"n_due", pt.n_due},
                       {"n_default", pt.n_default},
                       {"default_rate", default_rate_of(pt)}});
  j["defaults_by_month"] = monthly;

  nlohmann::json offsets = nlohmann::json::array();
  for (std::size_t m = 0; m < r.default_month_offset_histogram.size(); ++m)
    offsets.push_back(nlohmann::json{{"months_after_start", m},
                                     {"n_defaults", r.default_month_offset_histogram[m]}});
  j["default_month_offset_histogram"] = offsets;

  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : r.component_size_vs_default_rate)
    buckets.push_back(nlohmann::json{{"component_size", b.label},
                                     {"n_components", b.n_components},
                                     {"n_customers", b.n_customers},
                                     {"n_defaulted", b.n_defaulted_customers},
                                     {"default_rate", default_rate_of(b)}});
  j["component_size_vs_default_rate"] = buckets;
  return j;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace detail

inline void write_loan_period_csv(const StatsReport& r, const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"term_months", "n_contracts"});
  for (const auto& [months, count] : r.loan_period_histogram)
    csv::write_row(out, {std::to_string(months), std::to_string(count)});
}

inline void write_monthly_default_csv(const StatsReport& r, const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"month", "n_due", "n_default", "default_rate"});
  for (const auto& pt : r.defaults_by_month)
    csv::write_row(out, {to_string(first_day_of_month_index(pt.month_index)).substr(0, 7),
                         std::to_string(pt.n_due), std::to_string(pt.n_default),
                         csv::format_double(default_rate_of(pt))});
}

inline void write_default_offset_csv(const StatsReport& r, const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"months_after_start", "n_defaults"});
  for (std::size_t m = 0; m < r.default_month_offset_histogram.size(); ++m)
    csv::write_row(out, {std::to_string(m), std::to_string(r.default_month_offset_histogram[m])});
}

inline void write_component_bucket_csv(const StatsReport& r, const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out,
                 {"component_size", "n_components", "n_customers", "n_defaulted", "default_rate"});
  for (const auto& b : r.component_size_vs_default_rate)
    csv::write_row(out, {b.label, std::to_string(b.n_components), std::to_string(b.n_customers),
                         std::to_string(b.n_defaulted_customers),
                         csv::format_double(default_rate_of(b))});
}

// Month-by-month snapshot complexity over [first, last], one network rebuild
// per month at that month's first day.
inline std::vector<ComplexityMetrics> complexity_series(const JoinedRecords& joined, Date first,
                                                        Date last) {
  if (last.serial < first.serial) throw std::invalid_argument("complexity_series: last < first");
  std::vector<ComplexityMetrics> series;
  for (int mi = month_index(first); mi <= month_index(last); ++mi) {
    Date snap = first_day_of_month_index(mi);
    series.push_back(diameter_stats(build_network(joined, snap), snap));
  }
  return series;
}

inline void write_complexity_csv(const std::vector<ComplexityMetrics>& series,
                                 const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"month", "n_components", "n_nodes", "n_edges", "avg_diameter"});
  for (const auto& m : series)
    csv::write_row(out, {to_string(m.month).substr(0, 7), std::to_string(m.n_components),
                         std::to_string(m.n_nodes), std::to_string(m.n_edges),
                         csv::format_double(m.avg_diameter)});
}

inline void write_component_summary_csv(const std::vector<Subnetwork>& subs,
                                        const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"component", "n_nodes", "n_edges", "diameter"});
  for (const auto& sub : subs)
    csv::write_row(out, {"GN" + std::to_string(sub.rank + 1), std::to_string(sub.size()),
                         std::to_string(sub.edges.size()),
                         std::to_string(component_diameter(sub))});
}

inline void write_centrality_csv(const std::vector<Subnetwork>& subs,
                                 const std::vector<CentralityScores>& scores,
                                 const std::string& path) {
  if (subs.size() != scores.size())
    throw std::invalid_argument("write_centrality_csv: one score set per component required");
  auto out = detail::open_out(path);
  csv::write_row(out, {"customer_id", "component", "in_degree", "out_degree", "authority", "hub",
                       "pagerank", "kshell", "eigenvector", "betweenness", "closeness"});
  for (std::size_t c = 0; c < subs.size(); ++c) {
    const Subnetwork& sub = subs[c];
    const CentralityScores& s = scores[c];
    for (int v = 0; v < sub.size(); ++v)
      csv::write_row(out, {sub.node_ids[v], "GN" + std::to_string(sub.rank + 1),
                           std::to_string(s.in_degree[v]), std::to_string(s.out_degree[v]),
                           csv::format_double(s.authority[v]), csv::format_double(s.hub[v]),
                           csv::format_double(s.pagerank[v]), std::to_string(s.kshell[v]),
                           csv::format_double(s.eigenvector[v]),
                           csv::format_double(s.betweenness[v]),
                           csv::format_double(s.closeness[v])});
  }
}

struct ScoreDecile {
  std::string measure;
  int decile = 0;  // 1..10, ascending score
  double score_lo = 0.0;
  double score_hi = 0.0;
  std::int64_t n_nodes = 0;
  std::int64_t n_defaulted = 0;

  double default_rate() const {
    return n_nodes > 0 ? static_cast<double>(n_defaulted) / n_nodes : 0.0;
  }
};

namespace detail {

inline void append_deciles(const std::string& measure, const std::vector<double>& values,
                           const std::vector<std::uint8_t>& defaulted,
                           std::vector<ScoreDecile>& out) {
  std::size_t n = values.size();
  if (n == 0) return;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  for (int d = 0; d < 10; ++d) {
    std::size_t lo = n * d / 10, hi = n * (d + 1) / 10;
    if (lo >= hi) continue;
    ScoreDecile row;
    row.measure = measure;
    row.decile = d + 1;
    row.score_lo = values[order[lo]];
    row.score_hi = values[order[hi - 1]];
    row.n_nodes = static_cast<std::int64_t>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i)
      if (defaulted[order[i]]) row.n_defaulted += 1;
    out.push_back(row);
  }
}

}  // namespace detail

// Default rate by score decile, pooled over all components. A node counts as
// defaulted if any of its repayments due by the cutoff defaulted.
inline std::vector<ScoreDecile> centrality_deciles(const std::vector<Subnetwork>& subs,
                                                   const std::vector<CentralityScores>& scores,
                                                   const CustomerDefaultIndex& defaults,
                                                   Date cutoff) {
  if (subs.size() != scores.size())
    throw std::invalid_argument("centrality_deciles: one score set per component required");
  std::vector<std::uint8_t> flag;
  std::vector<double> authority, hub, pagerank, kshell, eigenvector, betweenness, closeness;
  std::vector<double> in_deg, out_deg;
  for (std::size_t c = 0; c < subs.size(); ++c) {
    const Subnetwork& sub = subs[c];
    const CentralityScores& s = scores[c];
    for (int v = 0; v < sub.size(); ++v) {
      flag.push_back(defaults.defaulted_by(sub.node_ids[v], cutoff) ? 1 : 0);
      authority.push_back(s.authority[v]);
      hub.push_back(s.hub[v]);
      pagerank.push_back(s.pagerank[v]);
      kshell.push_back(s.kshell[v]);
      eigenvector.push_back(s.eigenvector[v]);
      betweenness.push_back(s.betweenness[v]);
      closeness.push_back(s.closeness[v]);
      in_deg.push_back(s.in_degree[v]);
      out_deg.push_back(s.out_degree[v]);
    }
  }
  std::vector<ScoreDecile> rows;
  detail::append_deciles("authority", authority, flag, rows);
  detail::append_deciles("hub", hub, flag, rows);
  detail::append_deciles("pagerank", pagerank, flag, rows);
  detail::append_deciles("kshell", kshell, flag, rows);
  detail::append_deciles("eigenvector", eigenvector, flag, rows);
  detail::append_deciles("betweenness", betweenness, flag, rows);
  detail::append_deciles("closeness", closeness, flag, rows);
  detail::append_deciles("in_degree", in_deg, flag, rows);
  detail::append_deciles("out_degree", out_deg, flag, rows);
  return rows;
}

inline void write_decile_csv(const std::vector<ScoreDecile>& rows, const std::string& path) {
  auto out = detail::open_out(path);
  csv::write_row(out, {"measure", "decile", "score_lo", "score_hi", "n_nodes", "n_defaulted",
                       "default_rate"});
  for (const auto& r : rows)
    csv::write_row(out, {r.measure, std::to_string(r.decile), csv::format_double(r.score_lo),
                         csv::format_double(r.score_hi), std::to_string(r.n_nodes),
                         std::to_string(r.n_defaulted), csv::format_double(r.default_rate())});
}

inline void write_community_assignment_csv(const std::vector<Subnetwork>& subs,
                                           const std::vector<Partition>& partitions,
                                           const std::string& path) {
  if (subs.size() != partitions.size())
    throw std::invalid_argument("write_community_assignment_csv: one partition per component");
  auto out = detail::open_out(path);
  csv::write_row(out, {"customer_id", "component", "community"});
  for (std::size_t c = 0; c < subs.size(); ++c)
    for (int v = 0; v < subs[c].size(); ++v)
      csv::write_row(out, {subs[c].node_ids[v], "GN" + std::to_string(subs[c].rank + 1),
                           std::to_string(partitions[c].community[v])});
}

inline nlohmann::json community_risk_json(const std::vector<Subnetwork>& subs,
                                          const std::vector<Partition>& partitions,
                                          const std::vector<CommunityRiskTable>& tables) {
  if (subs.size() != partitions.size() || subs.size() != tables.size())
    throw std::invalid_argument("community_risk_json: per-component inputs must align");
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t c = 0; c < subs.size(); ++c) {
    nlohmann::json communities = nlohmann::json::array();
    for (const auto& row : tables[c].rows)
      communities.push_back(nlohmann::json{{"community", row.community},
                                           {"size", row.size},
                                           {"default_count", row.default_count},
                                           {"default_rate", row.default_rate}});
    comps.push_back(nlohmann::json{{"component", "GN" + std::to_string(subs[c].rank + 1)},
                                   {"n_nodes", subs[c].size()},
                                   {"modularity", partitions[c].modularity},
                                   {"communities", communities}});
  }
  return nlohmann::json{{"components", comps}};
}

}  // namespace guarnet
