#pragma once

// Hybrid feature assembly. Five families per borrower instance (profile,
// credit history, active exposure, network structure, community behavior),
// all scoped to a rolling quarter so nothing from the label period leaks in.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "guarnet/centrality.hpp"
#include "guarnet/community.hpp"
#include "guarnet/date.hpp"
#include "guarnet/graph.hpp"
#include "guarnet/loan_data.hpp"
#include "guarnet/matrix.hpp"

namespace guarnet {

// One rolling step. Features come from the train quarter, labels from the
// following quarter; model quality is reported one quarter later still, so
// the three windows never overlap.
struct WindowQuad {
  Quarter train;

  Quarter observation() const { return next_quarter(train); }
  Quarter prediction() const { return observation(); }
  Quarter evaluation() const { return next_quarter(train, 2); }

  Date train_start() const { return quarter_start(train); }
  // Exclusive feature cutoff: the first day of the observation quarter.
  Date cutoff() const { return quarter_end(train); }
  // The day the network snapshot is taken: the last day inside the train
  // window, so every consulted record predates the cutoff.
  Date snapshot() const { return add_days(cutoff(), -1); }

  Date observation_start() const { return quarter_start(observation()); }
  Date observation_end() const { return quarter_end(observation()); }

  std::string label() const { return to_string(train); }

  bool operator==(const WindowQuad&) const = default;
};

// Everything derived from one network snapshot that assembly consumes:
// components in stable rank order with per-component centrality scores and
// community partitions.
struct SnapshotAnalysis {
  std::vector<Subnetwork> components;
  std::vector<CentralityScores> centrality;
  std::vector<Partition> partitions;
};

// Cap on divisive community splitting inside one component; keeps the
// pipeline's cost bounded on the handful of large components.
inline constexpr int kDefaultMaxCommunities = 64;

inline SnapshotAnalysis analyze_snapshot(
    const GuaranteeNetwork& net,
    CommunityMethod method = CommunityMethod::edge_betweenness,
    int max_communities = kDefaultMaxCommunities) {
  SnapshotAnalysis a;
  a.components = components(net);
  a.centrality.reserve(a.components.size());
  a.partitions.reserve(a.components.size());
  for (const auto& sub : a.components) {
    a.centrality.push_back(compute_centrality(sub));
    a.partitions.push_back(detect_communities(sub, method, max_communities));
  }
  return a;
}

// Instances are borrowers with at least one contract alive somewhere in the
// train window; customers who only guarantee are not scored. Sorted ids give
// the deterministic row order.
inline std::vector<std::string> select_instances(const LoanDataset& ds,
                                                 const WindowQuad& window) {
  Date lo = window.train_start();
  Date hi = window.cutoff();
  std::set<std::string> ids;
  for (const auto& k : ds.contracts)
    if (k.start_date < hi && k.maturity() > lo) ids.insert(k.borrower_id);
  return std::vector<std::string>(ids.begin(), ids.end());
}

// 1 iff any repayment of the customer's contracts falls due inside the
// observation quarter and defaults; a quarter with nothing due is a 0.
inline int label_of(const LoanDataset& ds, const std::string& customer_id,
                    const WindowQuad& window) {
  Date lo = window.observation_start();
  Date hi = window.observation_end();
  std::set<std::string> own;
  for (const auto& k : ds.contracts)
    if (k.borrower_id == customer_id) own.insert(k.contract_id);
  for (const auto& r : ds.repayments)
    if (lo <= r.due_date && r.due_date < hi && own.count(r.contract_id) &&
        r.default_flag())
      return 1;
  return 0;
}

namespace detail {

inline std::vector<std::string> sorted_vocab(std::set<std::string> s) {
  return std::vector<std::string>(s.begin(), s.end());
}

}  // namespace detail

// Builds the full hybrid matrix for one window. The network must have been
// snapshotted on the window's own snapshot date; anything else risks labels
// leaking into features, so it is a hard error rather than a warning.
inline FeatureMatrix assemble(const LoanDataset& ds, const WindowQuad& window,
                              const GuaranteeNetwork& net,
                              const SnapshotAnalysis& analysis) {
  Date snap = window.snapshot();
  if (!(net.as_of == snap))
    throw std::invalid_argument("assemble: network snapshot " +
                                to_string(net.as_of) + " does not match window " +
                                window.label() + " snapshot " + to_string(snap));

  auto instance_ids = select_instances(ds, window);

  std::unordered_map<std::string, const Customer*> customer_by_id;
  for (const auto& c : ds.customers) customer_by_id.emplace(c.customer_id, &c);
  std::unordered_map<std::string, std::vector<const Contract*>> contracts_by_borrower;
  for (const auto& k : ds.contracts)
    contracts_by_borrower[k.borrower_id].push_back(&k);
  std::unordered_map<std::string, std::vector<const Repayment*>> reps_by_contract;
  for (const auto& r : ds.repayments) reps_by_contract[r.contract_id].push_back(&r);
  auto defaults = build_default_index(ds);

  // Categorical vocabularies are frozen at the snapshot so a future customer
  // or product type cannot widen the dimension list retroactively.
  std::set<std::string> nature_set, capital_set, interest_set;
  for (const auto& c : ds.customers)
    if (c.registration_date <= snap) nature_set.insert(c.business_nature);
  for (const auto& k : ds.contracts)
    if (k.start_date <= snap) {
      capital_set.insert(k.capital_return_type);
      interest_set.insert(k.interest_return_type);
    }
  auto natures = detail::sorted_vocab(std::move(nature_set));
  auto capitals = detail::sorted_vocab(std::move(capital_set));
  auto interests = detail::sorted_vocab(std::move(interest_set));
  const std::vector<EnterpriseScale> scales = {
      EnterpriseScale::micro, EnterpriseScale::small, EnterpriseScale::medium,
      EnterpriseScale::large};

  FeatureMatrix m;
  m.window_label = window.label();
  m.instance_ids = instance_ids;

  auto dim = [&](FeatureCategory cat, const std::string& name) {
    m.dimension_names.push_back(name);
    m.categories.push_back(cat);
  };
  dim(FeatureCategory::BP, "bp_log_registered_capital");
  for (auto s : scales) dim(FeatureCategory::BP, "bp_scale_" + to_string(s));
  dim(FeatureCategory::BP, "bp_employee_count");
  for (const auto& v : natures) dim(FeatureCategory::BP, "bp_nature_" + v);
  dim(FeatureCategory::BP, "bp_firm_age_months");

  dim(FeatureCategory::CR, "cr_loan_count");
  dim(FeatureCategory::CR, "cr_total_amount");
  dim(FeatureCategory::CR, "cr_default_count");
  dim(FeatureCategory::CR, "cr_default_amount");
  dim(FeatureCategory::CR, "cr_default_rate");
  dim(FeatureCategory::CR, "cr_months_since_last_default");
  dim(FeatureCategory::CR, "cr_has_history");

  dim(FeatureCategory::AL, "al_total_amount");
  dim(FeatureCategory::AL, "al_contract_count");
  dim(FeatureCategory::AL, "al_mean_remaining_months");
  for (const auto& v : capitals) dim(FeatureCategory::AL, "al_capital_" + v);
  for (const auto& v : interests) dim(FeatureCategory::AL, "al_interest_" + v);

  dim(FeatureCategory::NS, "ns_in_degree");
  dim(FeatureCategory::NS, "ns_out_degree");
  dim(FeatureCategory::NS, "ns_authority");
  dim(FeatureCategory::NS, "ns_hub");
  dim(FeatureCategory::NS, "ns_pagerank");
  dim(FeatureCategory::NS, "ns_kshell");
  dim(FeatureCategory::NS, "ns_eigenvector");
  dim(FeatureCategory::NS, "ns_betweenness");
  dim(FeatureCategory::NS, "ns_betweenness_norm");
  dim(FeatureCategory::NS, "ns_closeness");
  dim(FeatureCategory::NS, "ns_component_size");
  dim(FeatureCategory::NS, "ns_component_diameter");

  dim(FeatureCategory::CM, "cm_community_default_rate");
  dim(FeatureCategory::CM, "cm_community_size");
  dim(FeatureCategory::CM, "cm_defaulted_neighbors");

  std::size_t n_dims = m.dimension_names.size();
  std::unordered_map<std::string, std::size_t> dim_index;
  for (std::size_t j = 0; j < n_dims; ++j) dim_index.emplace(m.dimension_names[j], j);

  // Per-component lookups shared by every instance in that component.
  int n_comp = static_cast<int>(analysis.components.size());
  std::vector<int> comp_of(net.node_count(), -1), local_of(net.node_count(), -1);
  std::vector<int> diameter(n_comp, 0);
  std::vector<std::vector<std::vector<int>>> adj(n_comp);
  std::vector<CommunityRiskTable> risk(n_comp);
  for (int c = 0; c < n_comp; ++c) {
    const auto& sub = analysis.components[c];
    for (int l = 0; l < sub.size(); ++l) {
      comp_of[sub.nodes[l]] = c;
      local_of[sub.nodes[l]] = l;
    }
    diameter[c] = component_diameter(sub);
    adj[c] = sub.undirected_adjacency();
    risk[c] = community_default_rate(sub, analysis.partitions[c], defaults, snap);
  }

  m.values.assign(instance_ids.size(), std::vector<double>(n_dims, 0.0));
  m.labels.assign(instance_ids.size(), 0);

  for (std::size_t i = 0; i < instance_ids.size(); ++i) {
    const auto& id = instance_ids[i];
    double* row = m.values[i].data();
    auto put = [&](const std::string& name, double v) { row[dim_index.at(name)] = v; };

    auto cit = customer_by_id.find(id);
    if (cit == customer_by_id.end())
      throw std::runtime_error("assemble: contract references unknown customer '" +
                               id + "'");
    const Customer& cust = *cit->second;

    put("bp_log_registered_capital",
        std::log1p(static_cast<double>(cust.registered_capital)));
    put("bp_scale_" + to_string(cust.enterprise_scale), 1.0);
    put("bp_employee_count", static_cast<double>(cust.employee_count));
    auto nit = dim_index.find("bp_nature_" + cust.business_nature);
    if (nit != dim_index.end()) row[nit->second] = 1.0;
    put("bp_firm_age_months",
        std::max(0.0, months_between(cust.registration_date, snap)));

    const auto& own = contracts_by_borrower.at(id);

    // Credit history means loans that predate the current episode: anything
    // started before the earliest window-active contract. The active loans
    // themselves are exposure (AL), not history.
    Date anchor = window.cutoff();
    for (const Contract* k : own)
      if (k->start_date < window.cutoff() && k->maturity() > window.train_start())
        anchor = std::min(anchor, k->start_date);
    std::int64_t cr_count = 0;
    double cr_amount = 0.0;
    std::int64_t due_count = 0, def_count = 0;
    double def_amount = 0.0;
    std::optional<Date> last_default;
    for (const Contract* k : own) {
      if (!(k->start_date < anchor)) continue;
      ++cr_count;
      cr_amount += static_cast<double>(k->loan_amount);
      auto rit = reps_by_contract.find(k->contract_id);
      if (rit == reps_by_contract.end()) continue;
      for (const Repayment* r : rit->second) {
        if (!(r->due_date <= snap)) continue;
        ++due_count;
        if (r->default_flag()) {
          ++def_count;
          def_amount += static_cast<double>(r->amount_due);
          if (!last_default || *last_default < r->due_date)
            last_default = r->due_date;
        }
      }
    }
    put("cr_loan_count", static_cast<double>(cr_count));
    put("cr_total_amount", cr_amount);
    put("cr_default_count", static_cast<double>(def_count));
    put("cr_default_amount", def_amount);
    put("cr_default_rate",
        due_count > 0 ? static_cast<double>(def_count) / static_cast<double>(due_count)
                      : 0.0);
    put("cr_months_since_last_default",
        last_default ? std::min(120.0, months_between(*last_default, snap)) : 120.0);
    put("cr_has_history", cr_count > 0 ? 1.0 : 0.0);

    double al_amount = 0.0, al_remaining = 0.0;
    std::int64_t al_count = 0;
    for (const Contract* k : own) {
      if (!(k->start_date <= snap && snap < k->maturity())) continue;
      ++al_count;
      al_amount += static_cast<double>(k->loan_amount);
      al_remaining += months_between(snap, k->maturity());
      auto capit = dim_index.find("al_capital_" + k->capital_return_type);
      if (capit != dim_index.end()) row[capit->second] += 1.0;
      auto intit = dim_index.find("al_interest_" + k->interest_return_type);
      if (intit != dim_index.end()) row[intit->second] += 1.0;
    }
    put("al_total_amount", al_amount);
    put("al_contract_count", static_cast<double>(al_count));
    put("al_mean_remaining_months",
        al_count > 0 ? al_remaining / static_cast<double>(al_count) : 0.0);

    int g = net.find(id);
    if (g < 0) {
      // A borrower absent from the snapshot has no guarantee ties yet: it is
      // its own trivial component and community.
      put("ns_component_size", 1.0);
      put("cm_community_size", 1.0);
    } else {
      int c = comp_of[g], l = local_of[g];
      const auto& sub = analysis.components[c];
      const auto& cs = analysis.centrality[c];
      int n = sub.size();
      put("ns_in_degree", static_cast<double>(cs.in_degree[l]));
      put("ns_out_degree", static_cast<double>(cs.out_degree[l]));
      put("ns_authority", cs.authority[l]);
      put("ns_hub", cs.hub[l]);
      put("ns_pagerank", cs.pagerank[l]);
      put("ns_kshell", static_cast<double>(cs.kshell[l]));
      put("ns_eigenvector", cs.eigenvector[l]);
      put("ns_betweenness", cs.betweenness[l]);
      double pairs = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
      put("ns_betweenness_norm", n >= 3 ? cs.betweenness[l] / pairs : 0.0);
      put("ns_closeness", cs.closeness[l]);
      put("ns_component_size", static_cast<double>(n));
      put("ns_component_diameter", static_cast<double>(diameter[c]));

      int community = analysis.partitions[c].community[l];
      const CommunityRisk& cr = risk[c].for_community(community);
      std::int64_t size = cr.size;
      std::int64_t defaulted = cr.default_count;
      std::int64_t self = defaults.defaulted_by(id, snap) ? 1 : 0;
      put("cm_community_default_rate",
          size > 1 ? static_cast<double>(defaulted - self) /
                         static_cast<double>(size - 1)
                   : 0.0);
      put("cm_community_size", static_cast<double>(size));
      std::int64_t bad_neighbors = 0;
      for (int u : adj[c][l])
        if (defaults.defaulted_by(sub.node_ids[u], snap)) ++bad_neighbors;
      put("cm_defaulted_neighbors", static_cast<double>(bad_neighbors));
    }
  }

  // Labels: anything due in the observation quarter that defaults.
  Date obs_lo = window.observation_start();
  Date obs_hi = window.observation_end();
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < instance_ids.size(); ++i) row_of.emplace(instance_ids[i], i);
  std::unordered_map<std::string, const Contract*> contract_by_id;
  for (const auto& k : ds.contracts) contract_by_id.emplace(k.contract_id, &k);
  for (const auto& r : ds.repayments) {
    if (!(obs_lo <= r.due_date && r.due_date < obs_hi) || !r.default_flag()) continue;
    auto kit = contract_by_id.find(r.contract_id);
    if (kit == contract_by_id.end()) continue;
    auto rit = row_of.find(kit->second->borrower_id);
    if (rit != row_of.end()) m.labels[rit->second] = 1;
  }

  return m;
}

}  // namespace guarnet
