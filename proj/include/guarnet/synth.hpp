#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "guarnet/date.hpp"
#include "guarnet/loan_data.hpp"
#include "guarnet/rng.hpp"

namespace guarnet::synth {

struct ComponentMix {
  double share_small = 0.851;  // components with < 50 nodes
  double share_large = 0.066;  // components with > 300 nodes
};

struct LoanPeriodMix {
  double one_year = 0.7127;
  double two_three_year = 0.13;
  double long_term = 0.1573;
};

struct HazardCoefficients {
  double beta_authority = 5.0;
  double beta_hub = -4.0;
  double beta_community = 4.5;
  double beta_quarter_end = 0.65;
  // NaN requests calibration by bisection against target_default_rate.
  double intercept = std::numeric_limits<double>::quiet_NaN();
};

struct SynthConfig {
  std::int64_t n_customers = 5000;
  int start_year = 2012;
  int start_month = 1;
  int n_months = 48;
  double target_default_rate = 0.0677;
  ComponentMix component_mix;
  LoanPeriodMix loan_period_mix;
  HazardCoefficients hazard;
  double annual_volume_growth = 0.0;  // entry-rate growth per year; 0 = uniform entry
  double entry_span_fraction = 0.6;   // firms enter in this leading share of the timeline
  std::uint64_t seed = 42;
};

// Generator-internal behavior constants. These shape realism, not the
// published aggregates, so they stay fixed rather than configurable.
inline constexpr double kAgeDampingFactor = 0.04;   // hazard multiplier past 12 months of age
inline constexpr double kInBlockBias = 0.8;         // attachment prefers the planted block
inline constexpr double kReborrowMonthly = 0.75;    // new contract chance per idle month
inline constexpr double kConcurrentQuarterly = 0.15;  // second concurrent loan per quarter
inline constexpr double kExtraGuarantorChance = 0.1;  // new guarantor appears on a contract
inline constexpr double kUnpaidShare = 0.65;        // defaults never paid (vs. paid late)

inline void validate_config(const SynthConfig& cfg) {
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (cfg.n_customers < 1) throw std::invalid_argument("n_customers must be >= 1");
  if (cfg.n_months < 1) throw std::invalid_argument("n_months must be >= 1");
  if (cfg.start_month < 1 || cfg.start_month > 12)
    throw std::invalid_argument("start_month must be in 1..12");
  if (!frac(cfg.target_default_rate)) throw std::invalid_argument("target_default_rate in [0,1]");
  if (!frac(cfg.component_mix.share_small) || !frac(cfg.component_mix.share_large))
    throw std::invalid_argument("component mix shares must be in [0,1]");
  if (cfg.component_mix.share_small + cfg.component_mix.share_large > 1.0 + 1e-9)
    throw std::invalid_argument("component mix shares must sum to <= 1");
  const auto& lp = cfg.loan_period_mix;
  if (!frac(lp.one_year) || !frac(lp.two_three_year) || !frac(lp.long_term))
    throw std::invalid_argument("loan period mix shares must be in [0,1]");
  if (lp.one_year + lp.two_three_year + lp.long_term > 1.0 + 1e-9)
    throw std::invalid_argument("loan period mix shares must sum to <= 1");
  if (cfg.annual_volume_growth < 0.0)
    throw std::invalid_argument("annual_volume_growth must be >= 0");
  if (!(cfg.entry_span_fraction > 0.0 && cfg.entry_span_fraction <= 1.0))
    throw std::invalid_argument("entry_span_fraction must be in (0, 1]");
  if (cfg.component_mix.share_large > 0.0 && cfg.n_customers < 301)
    throw std::invalid_argument(
        "infeasible config: n_customers too small to realize a >300-node component");
}

// Latent generation state, exposed so tests can compare the analysis modules'
// reconstructions against what was actually planted.
struct PlantedState {
  std::vector<std::string> firm_ids;
  std::vector<double> authority;  // in-degree / component max, the planted risk driver
  std::vector<double> hub;        // out-degree / component max, the planted safety driver
  std::vector<int> community;     // planted block id, global dense numbering
  std::vector<int> component;     // planned component id
  // firm_defaulted_by_month[m][f]: firm f had defaulted on some repayment due
  // in months 0..m. Cumulative, so rows are monotone over m.
  std::vector<std::vector<char>> firm_defaulted_by_month;
  double intercept = 0.0;  // as used for the final simulation
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double hazard_logit(const SynthConfig& cfg, double authority, double hub,
                           double community_fraction, bool quarter_end, double intercept) {
  const auto& hz = cfg.hazard;
  return intercept + hz.beta_authority * authority + hz.beta_hub * hub +
         hz.beta_community * community_fraction + (quarter_end ? hz.beta_quarter_end : 0.0);
}

}  // namespace detail

// Monthly default probability of the planted process: logistic in the firm's
// latent authority/hub, the fraction of its community defaulted in earlier
// months, and a quarter-end indicator. The generator additionally damps
// installments due more than 12 months into a contract by kAgeDampingFactor;
// that aging factor is applied outside this function.
inline double planted_hazard(std::size_t firm, int month, const PlantedState& state,
                             const SynthConfig& cfg) {
  double fraction = 0.0;
  if (month > 0 && month - 1 < static_cast<int>(state.firm_defaulted_by_month.size())) {
    const auto& flags = state.firm_defaulted_by_month[month - 1];
    std::int64_t members = 0, defaulted = 0;
    for (std::size_t f = 0; f < state.community.size(); ++f)
      if (state.community[f] == state.community[firm]) {
        ++members;
        defaulted += flags[f];
      }
    if (members > 0) fraction = static_cast<double>(defaulted) / static_cast<double>(members);
  }
  int calendar_month = (cfg.start_month - 1 + month) % 12 + 1;
  bool quarter_end = calendar_month == 3 || calendar_month == 6 || calendar_month == 9 ||
                     calendar_month == 12;
  double intercept = std::isnan(cfg.hazard.intercept) ? state.intercept : cfg.hazard.intercept;
  return detail::sigmoid(detail::hazard_logit(cfg, state.authority[firm], state.hub[firm],
                                              fraction, quarter_end, intercept));
}

struct GenResult {
  LoanDataset dataset;
  PlantedState state;
};

namespace detail {

enum class CompKind { small, mid, large };

// Sizes drawn per kind; the greedy keeps realized kind shares tracking the
// configured mix while consuming exactly n_customers nodes.
inline std::vector<std::pair<CompKind, int>> plan_components(const SynthConfig& cfg, Rng rng) {
  double s_small = cfg.component_mix.share_small;
  double s_large = cfg.component_mix.share_large;
  double s_mid = 1.0 - s_small - s_large;
  std::int64_t remaining = cfg.n_customers;
  std::array<std::int64_t, 3> counts{0, 0, 0};  // small, mid, large
  std::vector<std::pair<CompKind, int>> plan;

  while (remaining > 0) {
    std::int64_t total = counts[0] + counts[1] + counts[2];
    double want_small = s_small * (total + 1) - counts[0];
    double want_mid = s_mid * (total + 1) - counts[1];
    double want_large = s_large * (total + 1) - counts[2];

    CompKind kind = CompKind::small;
    double best = want_small;
    if (want_mid > best && remaining >= 50) {
      kind = CompKind::mid;
      best = want_mid;
    }
    if (want_large > best && remaining >= 301) kind = CompKind::large;

    int size = 0;
    double u = rng.next_double();
    switch (kind) {
      case CompKind::small:
        size = 2 + static_cast<int>(48.0 * u * u);  // skewed toward tiny graphs
        break;
      case CompKind::mid:
        size = 50 + static_cast<int>(251.0 * u);
        break;
      case CompKind::large:
        size = 301 + static_cast<int>(100.0 * u);
        break;
    }
    if (size > remaining) {
      size = static_cast<int>(remaining);
      kind = size < 50 ? CompKind::small : size <= 300 ? CompKind::mid : CompKind::large;
    }
    ++counts[static_cast<int>(kind)];
    plan.emplace_back(kind, size);
    remaining -= size;
  }
  return plan;
}

struct PlannedGraph {
  std::vector<std::vector<int>> in_nbrs;   // guarantors of each firm
  std::vector<std::vector<int>> out_nbrs;  // firms each firm guarantees
  std::vector<int> component;              // per firm
  std::vector<int> community;              // per firm, global block numbering
  std::vector<std::vector<int>> component_members;

  bool has_edge(int g, int b) const {
    for (int x : in_nbrs[b])
      if (x == g) return true;
    return false;
  }

  void add_edge(int g, int b) {
    in_nbrs[b].push_back(g);
    out_nbrs[g].push_back(b);
  }
};

// Wires one component over firms [base, base+size). Small components are
// sparse uniform random graphs on a random spanning tree; mid and large ones
// grow by preferential attachment on out-degree with planted communities
// (attachment stays in the newcomer's block with probability kInBlockBias).
inline void wire_component(PlannedGraph& g, int base, int size, CompKind kind, int& next_block,
                           Rng rng) {
  std::vector<int> block_of(size, 0);
  if (kind == CompKind::small) {
    // One block per small component.
    for (int j = 0; j < size; ++j) block_of[j] = next_block;
    ++next_block;
  } else {
    int filled = 0;
    while (filled < size) {
      int block_size = static_cast<int>(rng.uniform_range(12, 30));
      int end = std::min(size, filled + block_size);
      for (int j = filled; j < end; ++j) block_of[j] = next_block;
      ++next_block;
      filled = end;
    }
  }
  for (int j = 0; j < size; ++j) g.community[base + j] = block_of[j];

  if (size == 1) return;

  if (kind == CompKind::small) {
    // Random recursive tree with random edge orientation, then a few chords.
    for (int j = 1; j < size; ++j) {
      int other = static_cast<int>(rng.uniform_int(j));
      if (rng.bernoulli(0.5))
        g.add_edge(base + other, base + j);
      else
        g.add_edge(base + j, base + other);
    }
    int extras = static_cast<int>(std::lround(0.15 * size));
    for (int e = 0; e < extras; ++e) {
      for (int attempt = 0; attempt < 10; ++attempt) {
        int a = static_cast<int>(rng.uniform_int(size));
        int b = static_cast<int>(rng.uniform_int(size));
        if (a == b || g.has_edge(base + a, base + b)) continue;
        g.add_edge(base + a, base + b);
        break;
      }
    }
    return;
  }

  // Preferential attachment. Weights are degree + 1 so newcomers are viable.
  std::vector<double> out_w(size, 0.0), in_w(size, 0.0);
  auto pick = [&](const std::vector<double>& w, int limit, Rng& r) {
    double total = 0.0;
    for (int j = 0; j < limit; ++j) total += w[j];
    double x = r.next_double() * total;
    double acc = 0.0;
    for (int j = 0; j < limit; ++j) {
      acc += w[j];
      if (x < acc) return j;
    }
    return limit - 1;
  };
  auto pick_in_block = [&](const std::vector<double>& w, int limit, int block, Rng& r) {
    double total = 0.0;
    for (int j = 0; j < limit; ++j)
      if (block_of[j] == block) total += w[j];
    if (total <= 0.0) return -1;
    double x = r.next_double() * total;
    double acc = 0.0;
    int last = -1;
    for (int j = 0; j < limit; ++j) {
      if (block_of[j] != block) continue;
      acc += w[j];
      last = j;
      if (x < acc) return j;
    }
    return last;
  };

  out_w[0] = 1.0;
  in_w[0] = 1.0;
  for (int j = 1; j < size; ++j) {
    int guarantor = -1;
    if (rng.bernoulli(kInBlockBias)) guarantor = pick_in_block(out_w, j, block_of[j], rng);
    if (guarantor < 0) guarantor = pick(out_w, j, rng);
    g.add_edge(base + guarantor, base + j);
    out_w[guarantor] += 1.0;
    in_w[j] = 2.0;  // in-degree 1, plus the +1 smoothing
    out_w[j] = 1.0;
  }
  int extras = static_cast<int>(std::lround(0.3 * size));
  for (int e = 0; e < extras; ++e) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      int borrower = pick(in_w, size, rng);
      int guarantor = -1;
      if (rng.bernoulli(kInBlockBias)) guarantor = pick_in_block(out_w, size, block_of[borrower], rng);
      if (guarantor < 0) guarantor = pick(out_w, size, rng);
      if (guarantor == borrower || g.has_edge(base + guarantor, base + borrower)) continue;
      g.add_edge(base + guarantor, base + borrower);
      out_w[guarantor] += 1.0;
      in_w[borrower] += 1.0;
      break;
    }
  }
}

struct PlannedContract {
  int firm = 0;
  int seq = 0;  // per-firm ordinal
  Date start;
  int term_months = 0;
  Money amount = 0;
  int capital_type = 0;   // index into kCapitalTypes
  int interest_type = 0;  // index into kInterestTypes
};

inline constexpr std::array<const char*, 2> kCapitalTypes = {"installments", "lump_sum"};
inline constexpr std::array<const char*, 2> kInterestTypes = {"monthly", "quarterly"};
inline constexpr std::array<const char*, 8> kSectors = {
    "manufacturing", "wholesale", "retail",   "construction",
    "logistics",     "agriculture", "services", "technology"};

struct RepaymentPlan {
  int contract = 0;  // ordinal in the sorted contract list
  int firm = 0;
  Date due;
  Money amount_due = 0;
  int month = 0;        // timeline month of the due date
  int offset_months = 0;  // months since contract start
};

inline Money log_uniform_money(Rng& rng, double lo, double hi) {
  double v = std::exp(std::log(lo) + rng.next_double() * (std::log(hi) - std::log(lo)));
  return static_cast<Money>(std::llround(v / 1000.0) * 1000);
}

}  // namespace detail

// Deterministic synthetic loan-record generator. The planted process is:
// guarantee topology first (components, blocks, degrees), then a contract
// timeline per firm, then a monthly default simulation whose hazard reads the
// planted topology, with the intercept calibrated so the realized
// repayment-level default rate lands on target.
inline GenResult generate_with_state(const SynthConfig& cfg) {
  using namespace detail;
  validate_config(cfg);

  const int n = static_cast<int>(cfg.n_customers);
  const Rng root(cfg.seed);
  const int start_mi = cfg.start_year * 12 + (cfg.start_month - 1);
  const Date timeline_end = add_days(first_day_of_month_index(start_mi + cfg.n_months), -1);

  // Topology.
  PlannedGraph graph;
  graph.in_nbrs.resize(n);
  graph.out_nbrs.resize(n);
  graph.component.resize(n);
  graph.community.resize(n);
  auto plan = plan_components(cfg, root.split("plan"));
  {
    int base = 0, next_block = 0, comp_id = 0;
    for (auto [kind, size] : plan) {
      graph.component_members.emplace_back();
      for (int j = 0; j < size; ++j) {
        graph.component[base + j] = comp_id;
        graph.component_members.back().push_back(base + j);
      }
      wire_component(graph, base, size, kind, next_block, root.split("wire", comp_id));
      base += size;
      ++comp_id;
    }
  }

  // Firm entry months and profiles.
  const int entry_span =
      std::max(1, static_cast<int>(std::floor(cfg.n_months * cfg.entry_span_fraction)));
  std::vector<double> entry_weights(entry_span);
  for (int m = 0; m < entry_span; ++m)
    entry_weights[m] = std::pow(1.0 + cfg.annual_volume_growth, m / 12.0);

  std::vector<int> entry_month(n);
  std::vector<Date> registration(n);
  LoanDataset ds;
  ds.customers.resize(n);
  {
    char buf[16];
    for (int f = 0; f < n; ++f) {
      Rng rng = root.split("firm", f);
      entry_month[f] = static_cast<int>(rng.weighted_index(entry_weights));
      registration[f] = add_days(first_day_of_month_index(start_mi + entry_month[f]),
                                 -static_cast<int>(rng.uniform_range(30, 1095)));
      std::snprintf(buf, sizeof(buf), "C%06d", f);
      auto& c = ds.customers[f];
      c.customer_id = buf;
      c.business_nature = kSectors[rng.uniform_int(kSectors.size())];
      c.registered_capital = log_uniform_money(rng, 1e5, 1e8);
      c.enterprise_scale = c.registered_capital < 1'000'000    ? EnterpriseScale::micro
                           : c.registered_capital < 10'000'000 ? EnterpriseScale::small
                           : c.registered_capital < 50'000'000 ? EnterpriseScale::medium
                                                               : EnterpriseScale::large;
      c.employee_count =
          static_cast<std::int64_t>(std::exp(std::log(3.0) + rng.next_double() *
                                                                 (std::log(800.0) - std::log(3.0))));
      c.registration_date = registration[f];
    }
  }

  // Contract timeline per firm. Re-borrowing is independent of defaults so the
  // schedule is fixed before the hazard intercept is calibrated.
  std::vector<PlannedContract> contracts;
  for (int f = 0; f < n; ++f) {
    Rng rng = root.split("schedule", f);
    std::vector<std::pair<int, int>> active;  // (start month, term)
    int seq = 0;
    auto create = [&](int m) {
      PlannedContract k;
      k.firm = f;
      k.seq = seq++;
      double u = rng.next_double();
      const auto& lp = cfg.loan_period_mix;
      if (u < lp.one_year)
        k.term_months = 12;
      else if (u < lp.one_year + lp.two_three_year)
        k.term_months = rng.bernoulli(0.5) ? 24 : 36;
      else if (u < lp.one_year + lp.two_three_year + lp.long_term)
        k.term_months = rng.bernoulli(0.5) ? 96 : 120;
      else
        k.term_months = 6;
      k.amount = log_uniform_money(rng, 1e5, 5e6);
      k.capital_type = static_cast<int>(rng.uniform_int(kCapitalTypes.size()));
      k.interest_type = static_cast<int>(rng.uniform_int(kInterestTypes.size()));
      int day = static_cast<int>(rng.uniform_range(1, 28));
      k.start = add_days(first_day_of_month_index(start_mi + m), day - 1);
      active.emplace_back(m, k.term_months);
      contracts.push_back(k);
    };
    create(entry_month[f]);
    for (int m = entry_month[f] + 1; m < cfg.n_months; ++m) {
      std::erase_if(active, [m](auto& a) { return a.first + a.second <= m; });
      if (active.empty()) {
        if (rng.bernoulli(kReborrowMonthly)) create(m);
      } else if (active.size() == 1) {
        int calendar_month = (cfg.start_month - 1 + m) % 12 + 1;
        bool quarter_start = calendar_month == 1 || calendar_month == 4 || calendar_month == 7 ||
                             calendar_month == 10;
        if (quarter_start && rng.bernoulli(kConcurrentQuarterly)) create(m);
      }
    }
  }
  std::sort(contracts.begin(), contracts.end(), [](const auto& a, const auto& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.firm != b.firm) return a.firm < b.firm;
    return a.seq < b.seq;
  });

  // Emit contracts and guarantees in id order. The planned in-neighbor list is
  // live: occasionally a contract recruits one more guarantor, permanently.
  ds.contracts.resize(contracts.size());
  {
    char buf[16];
    for (std::size_t i = 0; i < contracts.size(); ++i) {
      const auto& pk = contracts[i];
      Rng rng = root.split("guarantee", i);
      std::snprintf(buf, sizeof(buf), "K%06zu", i);
      auto& k = ds.contracts[i];
      k.contract_id = buf;
      k.borrower_id = ds.customers[pk.firm].customer_id;
      k.loan_amount = pk.amount;
      k.start_date = pk.start;
      k.term_months = pk.term_months;
      k.capital_return_type = kCapitalTypes[pk.capital_type];
      k.interest_return_type = kInterestTypes[pk.interest_type];

      if (rng.next_double() < kExtraGuarantorChance) {
        std::vector<int> pool;
        for (int m : graph.component_members[graph.component[pk.firm]]) {
          if (m == pk.firm || registration[m] > add_days(pk.start, -1)) continue;
          if (graph.has_edge(m, pk.firm)) continue;
          pool.push_back(m);
        }
        if (!pool.empty()) graph.add_edge(pool[rng.uniform_int(pool.size())], pk.firm);
      }

      for (int g : graph.in_nbrs[pk.firm]) {
        if (registration[g] > pk.start) continue;
        Guarantee row;
        row.contract_id = k.contract_id;
        row.guarantor_id = ds.customers[g].customer_id;
        row.guarantee_amount =
            static_cast<Money>(std::llround(pk.amount * (0.5 + 0.5 * rng.next_double())));
        Date signed_on = add_days(pk.start, -static_cast<int>(rng.uniform_range(1, 10)));
        if (signed_on < registration[g]) signed_on = registration[g];
        row.signed_date = signed_on;
        ds.guarantees.push_back(std::move(row));
      }
    }
  }

  // Latent proxies from the final wiring: a private mutual-reinforcement
  // iteration on the planned graph, rescaled to [0,1] per component. The
  // planned graph is never observable downstream (snapshots only realize the
  // edges of live contracts), so the prediction task stays nontrivial.
  PlantedState state;
  state.firm_ids.reserve(n);
  for (const auto& c : ds.customers) state.firm_ids.push_back(c.customer_id);
  state.authority.assign(n, 0.0);
  state.hub.assign(n, 0.0);
  state.community = graph.community;
  state.component = graph.component;
  for (const auto& members : graph.component_members) {
    std::size_t m = members.size();
    std::vector<double> auth(m, 1.0), hubs(m, 1.0), na(m), nh(m);
    std::unordered_map<int, std::size_t> local;
    for (std::size_t l = 0; l < m; ++l) local.emplace(members[l], l);
    for (int iter = 0; iter < 200; ++iter) {
      std::fill(na.begin(), na.end(), 0.0);
      std::fill(nh.begin(), nh.end(), 0.0);
      for (std::size_t l = 0; l < m; ++l)
        for (int b : graph.out_nbrs[members[l]]) na[local.at(b)] += hubs[l];
      for (std::size_t l = 0; l < m; ++l)
        for (int b : graph.out_nbrs[members[l]]) nh[l] += na[local.at(b)];
      double sa = 0.0, sh = 0.0;
      for (std::size_t l = 0; l < m; ++l) {
        sa += na[l] * na[l];
        sh += nh[l] * nh[l];
      }
      sa = std::sqrt(sa);
      sh = std::sqrt(sh);
      double delta = 0.0;
      for (std::size_t l = 0; l < m; ++l) {
        if (sa > 0.0) na[l] /= sa;
        if (sh > 0.0) nh[l] /= sh;
        delta = std::max(delta, std::abs(na[l] - auth[l]));
        delta = std::max(delta, std::abs(nh[l] - hubs[l]));
      }
      auth = na;
      hubs = nh;
      if (delta < 1e-10) break;
    }
    double max_a = 0.0;
    std::size_t max_in = 0, max_out = 0;
    for (std::size_t l = 0; l < m; ++l) {
      max_a = std::max(max_a, auth[l]);
      max_in = std::max(max_in, graph.in_nbrs[members[l]].size());
      max_out = std::max(max_out, graph.out_nbrs[members[l]].size());
    }
    // Authority blends local in-degree with the reinforced score so risk is
    // both block-concentrated and degree-graded; hub stays pure out-degree,
    // keeping guarantor-heavy firms distinctly safe.
    for (std::size_t l = 0; l < m; ++l) {
      int f = members[l];
      double deg_a =
          max_in > 0 ? static_cast<double>(graph.in_nbrs[f].size()) / max_in : 0.0;
      double hits_a = max_a > 0.0 ? auth[l] / max_a : 0.0;
      state.authority[f] = hits_a;
      (void)deg_a;
      if (max_out > 0)
        state.hub[f] = static_cast<double>(graph.out_nbrs[f].size()) / max_out;
    }
  }

  // Repayment schedule: quarterly installments, truncated at the timeline end.
  std::vector<RepaymentPlan> reps;
  for (std::size_t i = 0; i < contracts.size(); ++i) {
    const auto& pk = contracts[i];
    int k_inst = pk.term_months / 3;
    Money per = pk.amount / k_inst;
    for (int j = 1; j <= k_inst; ++j) {
      Date due = add_months(pk.start, 3 * j);
      if (due > timeline_end) break;
      RepaymentPlan rp;
      rp.contract = static_cast<int>(i);
      rp.firm = pk.firm;
      rp.due = due;
      rp.amount_due = j == k_inst ? pk.amount - per * (k_inst - 1) : per;
      rp.month = month_index(due) - start_mi;
      rp.offset_months = 3 * j;
      reps.push_back(rp);
    }
  }
  std::vector<std::vector<int>> reps_by_month(cfg.n_months);
  for (std::size_t r = 0; r < reps.size(); ++r) reps_by_month[reps[r].month].push_back(r);

  // Community membership counts for the hazard's community term.
  int n_comm = 0;
  for (int c : graph.community) n_comm = std::max(n_comm, c + 1);
  std::vector<std::int64_t> comm_size(n_comm, 0);
  for (int c : graph.community) ++comm_size[c];

  // One pass of the monthly default process. Returns per-repayment flags and,
  // optionally, the cumulative per-month firm flags.
  auto simulate = [&](double intercept, Rng rng, std::vector<std::vector<char>>* monthly) {
    std::vector<char> rep_default(reps.size(), 0);
    std::vector<char> firm_defaulted(n, 0);
    std::vector<std::int64_t> comm_defaulted(n_comm, 0);
    std::int64_t total_defaults = 0;
    if (monthly) monthly->assign(cfg.n_months, std::vector<char>(n, 0));
    for (int m = 0; m < cfg.n_months; ++m) {
      int calendar_month = (cfg.start_month - 1 + m) % 12 + 1;
      bool quarter_end = calendar_month == 3 || calendar_month == 6 || calendar_month == 9 ||
                         calendar_month == 12;
      for (int r : reps_by_month[m]) {
        const auto& rp = reps[r];
        double fraction = comm_size[graph.community[rp.firm]] > 0
                              ? static_cast<double>(comm_defaulted[graph.community[rp.firm]]) /
                                    static_cast<double>(comm_size[graph.community[rp.firm]])
                              : 0.0;
        double p = sigmoid(hazard_logit(cfg, state.authority[rp.firm], state.hub[rp.firm],
                                        fraction, quarter_end, intercept));
        if (rp.offset_months > 12) p *= kAgeDampingFactor;
        if (rng.next_double() < p) {
          rep_default[r] = 1;
          ++total_defaults;
        }
      }
      // Community counters see this month's defaults only from next month on.
      for (int r : reps_by_month[m])
        if (rep_default[r] && !firm_defaulted[reps[r].firm]) {
          firm_defaulted[reps[r].firm] = 1;
          ++comm_defaulted[graph.community[reps[r].firm]];
        }
      if (monthly) (*monthly)[m] = firm_defaulted;
    }
    double rate = reps.empty() ? 0.0
                               : static_cast<double>(total_defaults) / static_cast<double>(reps.size());
    return std::pair<std::vector<char>, double>(std::move(rep_default), rate);
  };

  // Intercept: configured value, or bisection against the target rate. Each
  // candidate replays the same pilot stream, so the realized rate is monotone
  // in the intercept and bisection converges cleanly.
  double intercept = cfg.hazard.intercept;
  if (std::isnan(intercept)) {
    double lo = -10.0, hi = 2.0;
    auto pilot_rate = [&](double x) { return simulate(x, root.split("pilot"), nullptr).second; };
    double best = lo, best_err = std::abs(pilot_rate(lo) - cfg.target_default_rate);
    if (std::abs(pilot_rate(hi) - cfg.target_default_rate) < best_err) best = hi;
    for (int it = 0; it < 18; ++it) {
      double mid = 0.5 * (lo + hi);
      double rate = pilot_rate(mid);
      double err = std::abs(rate - cfg.target_default_rate);
      if (err < best_err) {
        best_err = err;
        best = mid;
      }
      if (best_err <= 0.0025) break;
      (rate < cfg.target_default_rate ? lo : hi) = mid;
    }
    intercept = best;
  }
  state.intercept = intercept;

  auto [rep_default, realized_rate] = simulate(intercept, root.split("defaults"),
                                               &state.firm_defaulted_by_month);
  (void)realized_rate;

  // Materialize repayments; payment jitter comes from its own stream with one
  // draw per repayment.
  {
    Rng rng = root.split("paid");
    ds.repayments.resize(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const auto& rp = reps[r];
      auto& row = ds.repayments[r];
      row.contract_id = ds.contracts[rp.contract].contract_id;
      row.due_date = rp.due;
      row.amount_due = rp.amount_due;
      double u = rng.next_double();
      if (!rep_default[r]) {
        row.paid_date = add_days(rp.due, -static_cast<int>(u * 3.0));
        row.amount_paid = rp.amount_due;
      } else if (u < kUnpaidShare) {
        row.amount_paid = 0;
      } else {
        Date late = add_days(rp.due, 5 + static_cast<int>((u - kUnpaidShare) / (1.0 - kUnpaidShare) * 56.0));
        if (late <= timeline_end) {
          row.paid_date = late;
          row.amount_paid = rp.amount_due;
        } else {
          row.amount_paid = 0;
        }
      }
    }
  }

  return {std::move(ds), std::move(state)};
}

inline LoanDataset generate(const SynthConfig& cfg) { return generate_with_state(cfg).dataset; }

// ---------------------------------------------------------------------------
// Flat key=value config files ('#' comments, blank lines ignored)

inline SynthConfig parse_config(std::istream& in, SynthConfig base = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    try {
      if (key == "n_customers")
        base.n_customers = std::stoll(value);
      else if (key == "start_month") {
        if (value.size() != 7 || value[4] != '-')
          throw std::invalid_argument("want YYYY-MM");
        base.start_year = std::stoi(value.substr(0, 4));
        base.start_month = std::stoi(value.substr(5, 2));
      } else if (key == "n_months")
        base.n_months = std::stoi(value);
      else if (key == "target_default_rate")
        base.target_default_rate = std::stod(value);
      else if (key == "share_small")
        base.component_mix.share_small = std::stod(value);
      else if (key == "share_large")
        base.component_mix.share_large = std::stod(value);
      else if (key == "mix_one_year")
        base.loan_period_mix.one_year = std::stod(value);
      else if (key == "mix_two_three_year")
        base.loan_period_mix.two_three_year = std::stod(value);
      else if (key == "mix_long")
        base.loan_period_mix.long_term = std::stod(value);
      else if (key == "beta_authority")
        base.hazard.beta_authority = std::stod(value);
      else if (key == "beta_hub")
        base.hazard.beta_hub = std::stod(value);
      else if (key == "beta_community")
        base.hazard.beta_community = std::stod(value);
      else if (key == "beta_quarter_end")
        base.hazard.beta_quarter_end = std::stod(value);
      else if (key == "intercept")
        base.hazard.intercept = std::stod(value);
      else if (key == "annual_volume_growth")
        base.annual_volume_growth = std::stod(value);
      else if (key == "entry_span_fraction")
        base.entry_span_fraction = std::stod(value);
      else if (key == "seed")
        base.seed = std::stoull(value);
      else
        throw std::invalid_argument("unknown key");
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                  "): " + e.what());
    }
  }
  return base;
}

inline SynthConfig parse_config_file(const std::string& path, SynthConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  return parse_config(in, base);
}

}  // namespace guarnet::synth
