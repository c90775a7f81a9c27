// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line with
// its numeric evidence and wall time; the process exits nonzero if any line
// fails. Criteria lean on the same oracle suites the CLI selftest runs, plus
// full-scale benchmark datasets for the directional claims.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "guarnet/centrality.hpp"
#include "guarnet/eval.hpp"
#include "guarnet/features.hpp"
#include "guarnet/graph.hpp"
#include "guarnet/loan_data.hpp"
#include "guarnet/rng.hpp"
#include "guarnet/synth.hpp"

#include "support/selftest_suites.hpp"
#include "support/tempdir.hpp"

#ifndef GUARNET_CLI_PATH
#error "GUARNET_CLI_PATH must point at the CLI binary"
#endif

namespace g = guarnet;

namespace {

struct Criterion {
  std::string name;
  bool ok = true;
  std::string detail;
  double seconds = 0.0;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criteria 1..3: oracle suites shared with the CLI selftest.

Criterion from_suites(const std::string& name, const std::vector<selftest::Suite>& suites,
                      double budget_s, double elapsed) {
  Criterion c;
  c.name = name;
  double worst = 0.0;
  for (const auto& s : suites) {
    worst = std::max(worst, s.worst);
    if (!s.ok) {
      c.ok = false;
      c.detail = s.name + ": " + s.detail;
      return c;
    }
  }
  c.ok = elapsed < budget_s;
  c.detail = fmt("worst deviation %.3g, budget %.0f s", worst, budget_s);
  if (!c.ok) c.detail += " exceeded";
  return c;
}

// ---------------------------------------------------------------------------
// Spearman rank correlation with average ranks on ties.

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
    i = j + 1;
  }
  return rank;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

// ---------------------------------------------------------------------------
// Criterion 8 helper: drop every record dated at or past the cutoff, keeping
// only what referential integrity forces (a kept guarantee pins its contract,
// kept records pin their customers). Forced retentions carry no information
// the cutoff should hide: a not-yet-started contract never enters a cohort or
// activates a borrower node, and its guarantee was signed before the cutoff.

g::LoanDataset censor_at(const g::LoanDataset& ds, g::Date cutoff) {
  g::LoanDataset out;
  std::set<std::string> forced_contracts;
  for (const auto& gu : ds.guarantees)
    if (gu.signed_date < cutoff) {
      out.guarantees.push_back(gu);
      forced_contracts.insert(gu.contract_id);
    }
  for (const auto& r : ds.repayments)
    if (r.due_date < cutoff) out.repayments.push_back(r);
  std::set<std::string> forced_customers;
  for (const auto& k : ds.contracts)
    if (k.start_date < cutoff || forced_contracts.count(k.contract_id)) {
      out.contracts.push_back(k);
      forced_customers.insert(k.borrower_id);
    }
  for (const auto& gu : out.guarantees) forced_customers.insert(gu.guarantor_id);
  for (const auto& c : ds.customers)
    if (c.registration_date < cutoff || forced_customers.count(c.customer_id))
      out.customers.push_back(c);
  return out;
}

g::FeatureMatrix assemble_on(const g::LoanDataset& ds, const g::WindowQuad& window) {
  auto joined = g::join_records(ds);
  auto net = g::build_network(joined, window.snapshot());
  auto analysis = g::analyze_snapshot(net, g::CommunityMethod::label_propagation);
  return g::assemble(ds, window, net, analysis);
}

bool rows_bit_identical(const g::FeatureMatrix& a, const g::FeatureMatrix& b) {
  if (a.dimension_names != b.dimension_names) return false;
  if (a.instance_ids != b.instance_ids) return false;
  if (a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i].size() != b.values[i].size()) return false;
    if (!a.values[i].empty() &&
        std::memcmp(a.values[i].data(), b.values[i].data(),
                    a.values[i].size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 9 helpers: drive the installed CLI and compare artifacts.

int run_cli(const std::string& args) {
  std::string cmd = std::string(GUARNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_bytes(const std::string& a, const std::string& b) {
  return testutil::slurp(a) == testutil::slurp(b);
}

// ---------------------------------------------------------------------------

Criterion check_generator_calibration(const g::LoanDataset& ds) {
  Criterion c;
  c.name = "generator calibration";
  auto stats = g::overall_stats(ds);
  double one_year =
      static_cast<double>(stats.n_one_year) / static_cast<double>(stats.n_contracts);

  auto joined = g::join_records(ds);
  auto subs = g::components(g::build_union_network(joined));
  std::int64_t small = 0;
  for (const auto& sub : subs) small += sub.size() < 50;
  double small_share = static_cast<double>(small) / static_cast<double>(subs.size());

  bool rate_ok = std::fabs(stats.default_rate - 0.0677) <= 0.01;
  bool small_ok = small_share >= 0.80;
  bool term_ok = std::fabs(one_year - 0.7127) <= 0.05;
  bool early_ok = stats.first_year_default_share >= 0.95;
  c.ok = rate_ok && small_ok && term_ok && early_ok;
  c.detail = fmt("default rate %.4f, small-component share %.3f, one-year share %.3f, "
                 "first-year default share %.3f",
                 stats.default_rate, small_share, one_year, stats.first_year_default_share);
  return c;
}

Criterion check_ablation_ordering(const g::LoanDataset& benchmark) {
  Criterion c;
  c.name = "hybrid features outperform node-only features";
  g::RollingConfig rc;
  rc.start = g::Quarter{2013, 1};
  rc.n_windows = 10;
  rc.ablations = {g::Ablation::NW, g::Ablation::NW_N, g::Ablation::H};
  rc.community_method = g::CommunityMethod::label_propagation;

  auto mean_of = [](const g::MetricValue& m) { return m.defined() ? *m.value : -1.0; };

  // Seed 42 carries the strict margin and per-window dominance requirements.
  auto report = g::run_rolling(benchmark, rc);
  double nw = mean_of(report.mean_auc[0]);
  double h = mean_of(report.mean_auc[2]);
  int h_wins = 0, scored = 0;
  for (const auto& w : report.windows) {
    if (!w.cells[0].auc.defined() || !w.cells[2].auc.defined()) continue;
    ++scored;
    if (*w.cells[2].auc.value >= *w.cells[0].auc.value) ++h_wins;
  }

  // Across five seeds only the ordering of the three means must hold.
  int ordering_hits = 0;
  std::vector<std::uint64_t> seeds = {42, 43, 44, 45, 46};
  for (std::uint64_t seed : seeds) {
    double m_nw, m_nwn, m_h;
    if (seed == 42) {
      m_nw = nw;
      m_nwn = mean_of(report.mean_auc[1]);
      m_h = h;
    } else {
      auto cfg = g::synth::SynthConfig{};
      cfg.seed = seed;
      auto rep = g::run_rolling(g::synth::generate(cfg), rc);
      m_nw = mean_of(rep.mean_auc[0]);
      m_nwn = mean_of(rep.mean_auc[1]);
      m_h = mean_of(rep.mean_auc[2]);
    }
    if (m_h >= m_nwn && m_nwn >= m_nw) ++ordering_hits;
  }

  bool margin_ok = h > nw + 0.02;
  bool wins_ok = scored == 10 && h_wins >= 8;
  bool level_ok = h >= 0.75;
  bool order_ok = ordering_hits >= 4;
  c.ok = margin_ok && wins_ok && level_ok && order_ok;
  c.detail = fmt("mean AUC hybrid %.4f vs node-only %.4f, hybrid wins %d/%d, "
                 "mean ordering holds %d/5 seeds",
                 h, nw, h_wins, scored, ordering_hits);
  return c;
}

Criterion check_centrality_risk_alignment(const g::LoanDataset& benchmark) {
  Criterion c;
  c.name = "authority aligns with observed default, hub inversely";
  auto joined = g::join_records(benchmark);
  auto subs = g::components(g::build_union_network(joined));
  const auto& largest = subs.front();
  auto scores = g::compute_centrality(largest);

  // Node-level default rate: defaulted share of the borrower's due
  // repayments over the whole timeline; guarantor-only nodes score 0.
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> due_def;
  std::map<std::string, std::string> borrower_of;
  for (const auto& k : benchmark.contracts) borrower_of[k.contract_id] = k.borrower_id;
  for (const auto& r : benchmark.repayments) {
    auto& tally = due_def[borrower_of[r.contract_id]];
    tally.first += 1;
    tally.second += r.default_flag() ? 1 : 0;
  }
  std::vector<double> rate;
  rate.reserve(largest.node_ids.size());
  for (const auto& id : largest.node_ids) {
    auto it = due_def.find(id);
    rate.push_back(it == due_def.end() || it->second.first == 0
                       ? 0.0
                       : static_cast<double>(it->second.second) /
                             static_cast<double>(it->second.first));
  }

  double rho_auth = spearman(scores.authority, rate);
  double rho_hub = spearman(scores.hub, rate);
  c.ok = rho_auth > 0.15 && rho_hub < -0.05;
  c.detail = fmt("largest component n=%d, rho(authority)=%.4f, rho(hub)=%.4f", largest.size(),
                 rho_auth, rho_hub);
  return c;
}

Criterion check_density_importance_shift() {
  Criterion c;
  c.name = "network feature share grows with a densifying network";
  g::synth::SynthConfig cfg;
  cfg.annual_volume_growth = 0.18;
  cfg.entry_span_fraction = 1.0;
  auto ds = g::synth::generate(cfg);

  g::RollingConfig rc;
  rc.start = g::Quarter{2013, 1};
  rc.n_windows = 10;
  rc.ablations = {g::Ablation::H};
  rc.community_method = g::CommunityMethod::label_propagation;
  auto report = g::run_rolling(ds, rc);

  const auto& first = report.windows.front();
  const auto& last = report.windows.back();
  c.ok = first.importance_defined && last.importance_defined &&
         last.network_share > first.network_share;
  c.detail = fmt("network share first window %.4f, final window %.4f", first.network_share,
                 last.network_share);
  return c;
}

Criterion check_cutoff_blocks_future(int n_datasets, int windows_per_dataset) {
  Criterion c;
  c.name = "feature cutoff blocks future records";
  g::Rng rng(20260814);
  int checked = 0;
  std::int64_t instances = 0;
  for (int d = 0; d < n_datasets; ++d) {
    g::synth::SynthConfig cfg;
    cfg.n_customers = 400;
    cfg.n_months = 27;
    cfg.seed = 1001 + static_cast<std::uint64_t>(d);
    cfg.component_mix.share_large = 0.0;
    cfg.component_mix.share_small = 0.9;
    auto ds = g::synth::generate(cfg);

    for (int w = 0; w < windows_per_dataset; ++w) {
      g::WindowQuad window{g::next_quarter(g::Quarter{2012, 2}, rng.uniform_range(0, 5))};
      auto censored = censor_at(ds, window.cutoff());
      if (!g::validate(censored).ok()) {
        c.ok = false;
        c.detail = "censored dataset failed validation";
        return c;
      }
      auto full = assemble_on(ds, window);
      auto cut = assemble_on(censored, window);
      if (!rows_bit_identical(full, cut)) {
        c.ok = false;
        c.detail = fmt("dataset seed %llu window %s: features changed after censoring",
                       static_cast<unsigned long long>(cfg.seed), window.label().c_str());
        return c;
      }
      ++checked;
      instances += static_cast<std::int64_t>(full.n_rows());
    }
  }
  c.detail = fmt("%d dataset/window pairs, %lld feature rows unchanged", checked,
                 static_cast<long long>(instances));
  return c;
}

Criterion check_cli_determinism() {
  Criterion c;
  c.name = "byte-identical reruns";
  testutil::TempDir tmp;
  std::string cfg = tmp.file("generator_cfg.txt");
  {
    std::ofstream out(cfg, std::ios::binary);
    out << "share_large=0\nshare_small=0.9\n";
  }

  auto synth_into = [&](const std::string& dir) {
    return run_cli("--out-dir " + dir + " --config " + cfg +
                   " --seed 11 synth --customers 120 --months 21");
  };
  std::string a = tmp.file("a"), b = tmp.file("b");
  if (synth_into(a) != 0 || synth_into(b) != 0) {
    c.ok = false;
    c.detail = "synth run failed";
    return c;
  }
  for (const char* name :
       {"customers.csv", "contracts.csv", "guarantees.csv", "repayments.csv"})
    if (!same_bytes(a + "/" + name, b + "/" + name)) {
      c.ok = false;
      c.detail = std::string("synth outputs differ: ") + name;
      return c;
    }

  std::string feat = tmp.file("feat");
  if (run_cli("--data-dir " + a + " --out-dir " + feat +
              " features --quarter 2012Q4 --method label_propagation") != 0) {
    c.ok = false;
    c.detail = "features run failed";
    return c;
  }
  auto train_into = [&](const std::string& dir) {
    return run_cli("--out-dir " + dir + " train --matrix " + feat + "/features_2012Q4.csv" +
                   " --categories " + feat + "/features_2012Q4.categories.json --rounds 20");
  };
  std::string m1 = tmp.file("m1"), m2 = tmp.file("m2");
  if (train_into(m1) != 0 || train_into(m2) != 0) {
    c.ok = false;
    c.detail = "train run failed";
    return c;
  }
  if (!same_bytes(m1 + "/model.json", m2 + "/model.json")) {
    c.ok = false;
    c.detail = "model files differ";
    return c;
  }

  auto roll_into = [&](const std::string& dir) {
    return run_cli("--data-dir " + a + " --out-dir " + dir +
                   " rolling --start 2012Q3 --windows 2 --ablations NW,H" +
                   " --method label_propagation");
  };
  std::string r1 = tmp.file("r1"), r2 = tmp.file("r2");
  if (roll_into(r1) != 0 || roll_into(r2) != 0) {
    c.ok = false;
    c.detail = "rolling run failed";
    return c;
  }
  for (const char* name : {"rolling.json", "auc_by_window.csv", "recall_by_window.csv",
                           "importance_by_window.csv"})
    if (!same_bytes(r1 + "/" + name, r2 + "/" + name)) {
      c.ok = false;
      c.detail = std::string("rolling outputs differ: ") + name;
      return c;
    }

  c.detail = "synth, train, and rolling reruns matched byte for byte";
  return c;
}

void report(Criterion c, double seconds, int& failures) {
  c.seconds = seconds;
  std::printf("acceptance  %-55s %s  (%s; %.1f s)\n", c.name.c_str(),
              c.ok ? "PASS" : "FAIL", c.detail.c_str(), c.seconds);
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

}  // namespace

int main() {
  int failures = 0;

  {
    Timer t;
    std::vector<selftest::Suite> suites;
    selftest::run_centrality_suites(suites);
    double elapsed = t.seconds();
    report(from_suites("centrality oracle equivalence", suites, 10.0, elapsed), elapsed,
           failures);
  }
  {
    Timer t;
    std::vector<selftest::Suite> suites;
    selftest::run_gbdt_oracle_suites(suites);
    double elapsed = t.seconds();
    report(from_suites("tree learner oracle equivalence", suites, 10.0, elapsed), elapsed,
           failures);
  }
  {
    Timer t;
    std::vector<selftest::Suite> suites;
    selftest::run_monotonicity_suite(suites);
    double elapsed = t.seconds();
    report(from_suites("training loss monotonicity", suites, 60.0, elapsed), elapsed,
           failures);
  }

  // The default configuration is the fixed benchmark: 5000 firms, 48 months,
  // seed 42. Several criteria read the same dataset.
  Timer benchmark_timer;
  auto benchmark = g::synth::generate(g::synth::SynthConfig{});
  double gen_seconds = benchmark_timer.seconds();
  {
    Timer t;
    auto c = check_generator_calibration(benchmark);
    double elapsed = gen_seconds + t.seconds();
    if (elapsed >= 60.0) {
      c.ok = false;
      c.detail += "; 60 s budget exceeded";
    }
    report(c, elapsed, failures);
  }
  {
    Timer t;
    auto c = check_ablation_ordering(benchmark);
    double elapsed = t.seconds();
    if (elapsed >= 300.0) {
      c.ok = false;
      c.detail += "; 300 s budget exceeded";
    }
    report(c, elapsed, failures);
  }
  {
    Timer t;
    auto c = check_centrality_risk_alignment(benchmark);
    report(c, t.seconds(), failures);
  }
  {
    Timer t;
    auto c = check_density_importance_shift();
    report(c, t.seconds(), failures);
  }
  {
    Timer t;
    auto c = check_cutoff_blocks_future(5, 10);
    report(c, t.seconds(), failures);
  }
  {
    Timer t;
    auto c = check_cli_determinism();
    report(c, t.seconds(), failures);
  }

  std::printf("acceptance: %d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
