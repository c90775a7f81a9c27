#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "guarnet/loan_data.hpp"

namespace guarnet {

// Directed guarantee edge between dense node indices. Parallel edges are
// collapsed to one carrying the earliest signed_date.
struct GuaranteeEdge {
  int guarantor = 0;
  int borrower = 0;
  Date signed_date;
};

// Time-scoped snapshot of the guarantee network (guarantor -> borrower).
struct GuaranteeNetwork {
  std::vector<std::string> node_ids;          // dense index -> customer id
  std::unordered_map<std::string, int> index; // customer id -> dense index
  std::vector<GuaranteeEdge> edges;
  Date as_of;

  int node_count() const { return static_cast<int>(node_ids.size()); }
  int find(const std::string& customer_id) const {
    auto it = index.find(customer_id);
    return it == index.end() ? -1 : it->second;
  }
};

// One weakly connected component; the stable rank follows the paper's GNk
// naming (descending node count, ties by smallest contained customer id).
struct Subnetwork {
  int rank = 0;                 // 0-based; display label is GN{rank+1}
  std::vector<int> nodes;       // indices into the parent network, ascending
  std::vector<GuaranteeEdge> edges;  // induced edges, endpoints re-indexed 0..n-1
  std::vector<std::string> node_ids;

  int size() const { return static_cast<int>(nodes.size()); }

  // Undirected simple-graph adjacency (deduped neighbors), shared by the
  // centrality and community code.
  std::vector<std::vector<int>> undirected_adjacency() const {
    int n = size();
    std::vector<std::set<int>> nbrs(n);
    for (const auto& e : edges) {
      nbrs[e.guarantor].insert(e.borrower);
      nbrs[e.borrower].insert(e.guarantor);
    }
    std::vector<std::vector<int>> adj(n);
    for (int v = 0; v < n; ++v) adj[v].assign(nbrs[v].begin(), nbrs[v].end());
    return adj;
  }
};

struct ComplexityMetrics {
  Date month;  // first day of the month the snapshot was taken for
  double avg_diameter = 0.0;
  int n_components = 0;
  int n_nodes = 0;
  int n_edges = 0;
};

namespace detail {

// Shared edge-collapsing core. An edge is included iff `keep(guarantee,
// contract)` holds; nodes are all edge endpoints plus `extra_nodes`.
template <typename Keep>
GuaranteeNetwork build_network_impl(const JoinedRecords& joined, Date as_of, Keep&& keep,
                                    const std::vector<std::string>& extra_nodes) {
  const LoanDataset& ds = *joined.ds;
  GuaranteeNetwork net;
  net.as_of = as_of;

  auto intern = [&](const std::string& id) {
    auto [it, inserted] = net.index.emplace(id, net.node_count());
    if (inserted) net.node_ids.push_back(id);
    return it->second;
  };

  // Collapse parallel (guarantor, borrower) pairs to the earliest signing.
  std::map<std::pair<int, int>, Date> collapsed;
  for (const auto& rec : joined.records) {
    const Contract& k = ds.contracts[rec.contract];
    for (std::size_t gi : rec.guarantees) {
      const Guarantee& g = ds.guarantees[gi];
      if (!keep(g, k)) continue;
      int u = intern(g.guarantor_id);
      int v = intern(k.borrower_id);
      if (u == v) continue;  // self-guarantees are invalid data; never edges
      auto [it, inserted] = collapsed.emplace(std::make_pair(u, v), g.signed_date);
      if (!inserted && g.signed_date < it->second) it->second = g.signed_date;
    }
  }
  for (const auto& id : extra_nodes) intern(id);
  net.edges.reserve(collapsed.size());
  for (const auto& [pair, date] : collapsed)
    net.edges.push_back({pair.first, pair.second, date});
  return net;
}

}  // namespace detail

// Snapshot at as_of: exactly the guarantees already signed whose contract has
// not yet matured, plus isolated nodes for borrowers with active contracts.
inline GuaranteeNetwork build_network(const JoinedRecords& joined, Date as_of) {
  const LoanDataset& ds = *joined.ds;
  std::vector<std::string> active_borrowers;
  for (const auto& rec : joined.records) {
    const Contract& k = ds.contracts[rec.contract];
    if (k.start_date <= as_of && as_of < k.maturity())
      active_borrowers.push_back(k.borrower_id);
  }
  return detail::build_network_impl(
      joined, as_of,
      [&](const Guarantee& g, const Contract& k) {
        return g.signed_date <= as_of && as_of < k.maturity();
      },
      active_borrowers);
}

// All-time union network: every guarantee relation ever recorded, plus every
// borrower. Used for the dataset-level structure statistics.
inline GuaranteeNetwork build_union_network(const JoinedRecords& joined) {
  const LoanDataset& ds = *joined.ds;
  Date last{0};
  for (const auto& k : ds.contracts) last = std::max(last, k.maturity());
  for (const auto& r : ds.repayments) last = std::max(last, r.due_date);
  std::vector<std::string> borrowers;
  for (const auto& rec : joined.records)
    borrowers.push_back(ds.contracts[rec.contract].borrower_id);
  return detail::build_network_impl(
      joined, last, [](const Guarantee&, const Contract&) { return true; }, borrowers);
}

// Weakly connected components, ordered by descending node count with ties by
// smallest contained customer id.
inline std::vector<Subnetwork> components(const GuaranteeNetwork& net) {
  int n = net.node_count();
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : net.edges) {
    adj[e.guarantor].push_back(e.borrower);
    adj[e.borrower].push_back(e.guarantor);
  }

  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = n_comp;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (comp[w] == -1) {
          comp[w] = n_comp;
          stack.push_back(w);
        }
    }
    ++n_comp;
  }

  std::vector<Subnetwork> subs(n_comp);
  for (int v = 0; v < n; ++v) subs[comp[v]].nodes.push_back(v);

  auto min_id = [&](const Subnetwork& s) {
    const std::string* best = &net.node_ids[s.nodes.front()];
    for (int v : s.nodes)
      if (net.node_ids[v] < *best) best = &net.node_ids[v];
    return *best;
  };
  std::sort(subs.begin(), subs.end(), [&](const Subnetwork& a, const Subnetwork& b) {
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() > b.nodes.size();
    return min_id(a) < min_id(b);
  });

  std::vector<int> local(n, -1);
  for (int c = 0; c < n_comp; ++c) {
    subs[c].rank = c;
    for (std::size_t i = 0; i < subs[c].nodes.size(); ++i) {
      local[subs[c].nodes[i]] = static_cast<int>(i);
      subs[c].node_ids.push_back(net.node_ids[subs[c].nodes[i]]);
    }
  }
  // Route each edge into its component with local indices.
  std::vector<int> comp_of_sorted(n);
  for (int c = 0; c < n_comp; ++c)
    for (int v : subs[c].nodes) comp_of_sorted[v] = c;
  for (const auto& e : net.edges)
    subs[comp_of_sorted[e.guarantor]].edges.push_back(
        {local[e.guarantor], local[e.borrower], e.signed_date});

  return subs;
}

// BFS eccentricities on the undirected view; diameter per component is the
// max, a single-node component has diameter 0.
inline int component_diameter(const Subnetwork& sub) {
  int n = sub.size();
  if (n <= 1) return 0;
  auto adj = sub.undirected_adjacency();
  int diameter = 0;
  std::vector<int> dist(n);
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (dist[w] == -1) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
    }
    for (int v = 0; v < n; ++v) diameter = std::max(diameter, dist[v]);
  }
  return diameter;
}

inline ComplexityMetrics diameter_stats(const GuaranteeNetwork& net, Date month) {
  auto subs = components(net);
  ComplexityMetrics m;
  m.month = month;
  m.n_components = static_cast<int>(subs.size());
  m.n_nodes = net.node_count();
  m.n_edges = static_cast<int>(net.edges.size());
  double total = 0.0;
  for (const auto& sub : subs) total += component_diameter(sub);
  m.avg_diameter = subs.empty() ? 0.0 : total / static_cast<double>(subs.size());
  return m;
}

// ---------------------------------------------------------------------------
// Dataset-level statistics

struct MonthCount {
  int month_index = 0;  // months since year 0
  std::int64_t n_due = 0;
  std::int64_t n_default = 0;
};

struct SizeBucketStats {
  std::string label;
  int min_size = 0;
  int max_size = 0;  // inclusive; 0 means open-ended
  std::int64_t n_components = 0;
  std::int64_t n_customers = 0;
  std::int64_t n_defaulted_customers = 0;
};

struct StatsReport {
  std::int64_t n_customers = 0;
  std::int64_t n_guarantee_relations = 0;
  std::int64_t n_contracts = 0;
  std::int64_t n_repayments = 0;
  std::int64_t n_defaults = 0;
  double default_rate = 0.0;
  // term buckets: one-year (<=12), two-or-three-year (13..36), long (>36)
  std::int64_t n_one_year = 0;
  std::int64_t n_two_three_year = 0;
  std::int64_t n_long = 0;
  std::map<int, std::int64_t> loan_period_histogram;  // term_months -> contracts
  std::vector<MonthCount> defaults_by_month;
  // months between contract start and defaulted due_date, bucketed monthly
  std::vector<std::int64_t> default_month_offset_histogram;
  double first_year_default_share = 0.0;
  std::vector<SizeBucketStats> component_size_vs_default_rate;
};

inline StatsReport overall_stats(const LoanDataset& ds) {
  StatsReport r;
  r.n_customers = static_cast<std::int64_t>(ds.customers.size());
  r.n_guarantee_relations = static_cast<std::int64_t>(ds.guarantees.size());
  r.n_contracts = static_cast<std::int64_t>(ds.contracts.size());
  r.n_repayments = static_cast<std::int64_t>(ds.repayments.size());

  for (const auto& k : ds.contracts) {
    if (k.term_months <= 12) ++r.n_one_year;
    else if (k.term_months <= 36) ++r.n_two_three_year;
    else ++r.n_long;
    ++r.loan_period_histogram[k.term_months];
  }

  auto joined = join_records(ds);

  std::map<int, MonthCount> by_month;
  std::int64_t first_year = 0;
  for (const auto& rec : joined.records) {
    const Contract& k = ds.contracts[rec.contract];
    int start_mi = month_index(k.start_date);
    for (std::size_t ri : rec.repayments) {
      const Repayment& rep = ds.repayments[ri];
      int mi = month_index(rep.due_date);
      auto& cell = by_month[mi];
      cell.month_index = mi;
      ++cell.n_due;
      if (rep.default_flag()) {
        ++cell.n_default;
        ++r.n_defaults;
        int offset = mi - start_mi;
        if (offset < 0) offset = 0;
        if (static_cast<std::size_t>(offset) >= r.default_month_offset_histogram.size())
          r.default_month_offset_histogram.resize(offset + 1, 0);
        ++r.default_month_offset_histogram[offset];
        if (offset <= 12) ++first_year;
      }
    }
  }
  for (const auto& [mi, cell] : by_month) r.defaults_by_month.push_back(cell);
  r.default_rate =
      r.n_repayments ? static_cast<double>(r.n_defaults) / static_cast<double>(r.n_repayments) : 0.0;
  r.first_year_default_share =
      r.n_defaults ? static_cast<double>(first_year) / static_cast<double>(r.n_defaults) : 0.0;

  // Component-size dichotomy on the all-time union network.
  std::unordered_map<std::string, bool> defaulted;
  for (const auto& rec : joined.records) {
    const Contract& k = ds.contracts[rec.contract];
    bool& flag = defaulted[k.borrower_id];
    for (std::size_t ri : rec.repayments)
      if (ds.repayments[ri].default_flag()) flag = true;
  }
  auto net = build_union_network(joined);
  auto subs = components(net);
  r.component_size_vs_default_rate = {
      {"1-49", 1, 49, 0, 0, 0}, {"50-299", 50, 299, 0, 0, 0}, {"300+", 300, 0, 0, 0, 0}};
  for (const auto& sub : subs) {
    int size = sub.size();
    SizeBucketStats* bucket = nullptr;
    for (auto& b : r.component_size_vs_default_rate)
      if (size >= b.min_size && (b.max_size == 0 || size <= b.max_size)) bucket = &b;
    if (!bucket) continue;
    ++bucket->n_components;
    for (const auto& id : sub.node_ids) {
      ++bucket->n_customers;
      auto it = defaulted.find(id);
      if (it != defaulted.end() && it->second) ++bucket->n_defaulted_customers;
    }
  }
  return r;
}

}  // namespace guarnet
