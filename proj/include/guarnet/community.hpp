#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "guarnet/graph.hpp"
#include "guarnet/loan_data.hpp"

namespace guarnet {

enum class CommunityMethod { edge_betweenness, label_propagation };

inline std::string to_string(CommunityMethod m) {
  return m == CommunityMethod::edge_betweenness ? "edge_betweenness" : "label_propagation";
}

inline CommunityMethod parse_community_method(const std::string& s) {
  if (s == "edge_betweenness") return CommunityMethod::edge_betweenness;
  if (s == "label_propagation") return CommunityMethod::label_propagation;
  throw std::invalid_argument("unknown community method '" + s + "'");
}

// Community ids are dense integers renumbered by first appearance in node
// order. A partition is a function of graph topology only.
struct Partition {
  std::vector<int> community;  // per node
  double modularity = 0.0;
  CommunityMethod method = CommunityMethod::edge_betweenness;

  int community_count() const {
    int c = 0;
    for (int id : community) c = std::max(c, id + 1);
    return c;
  }
};

namespace detail {

// Undirected simple edge list with ids assigned in ascending (u, v) order, so
// "smallest edge id" and "lexicographically smallest endpoint pair" coincide.
struct EdgeGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;            // u < v
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge id)
  std::vector<char> alive;

  static EdgeGraph from(const Subnetwork& sub) {
    EdgeGraph g;
    g.n = sub.size();
    auto nbrs = sub.undirected_adjacency();
    for (int u = 0; u < g.n; ++u)
      for (int v : nbrs[u])
        if (u < v) g.edges.emplace_back(u, v);
    std::sort(g.edges.begin(), g.edges.end());
    g.adj.resize(g.n);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      auto [u, v] = g.edges[e];
      g.adj[u].emplace_back(v, static_cast<int>(e));
      g.adj[v].emplace_back(u, static_cast<int>(e));
    }
    g.alive.assign(g.edges.size(), 1);
    return g;
  }
};

inline double modularity_of(const EdgeGraph& g, const std::vector<int>& labels) {
  std::size_t m = g.edges.size();
  if (m == 0) return 0.0;
  int n_comm = 0;
  for (int l : labels) n_comm = std::max(n_comm, l + 1);
  std::vector<double> intra(n_comm, 0.0), degree_sum(n_comm, 0.0);
  for (int v = 0; v < g.n; ++v) degree_sum[labels[v]] += static_cast<double>(g.adj[v].size());
  for (const auto& [u, v] : g.edges)
    if (labels[u] == labels[v]) intra[labels[u]] += 1.0;
  double q = 0.0;
  double mm = static_cast<double>(m);
  for (int c = 0; c < n_comm; ++c) {
    double frac = degree_sum[c] / (2.0 * mm);
    q += intra[c] / mm - frac * frac;
  }
  return q;
}

inline std::vector<int> dense_renumber(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  std::map<int, int> remap;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    auto [it, inserted] = remap.emplace(labels[v], static_cast<int>(remap.size()));
    out[v] = it->second;
  }
  return out;
}

// Brandes accumulation over one component, returning its max-betweenness
// alive edge; ties go to the smallest edge id. Scratch buffers are reused
// across calls and must be sized for the whole graph.
struct BrandesScratch {
  std::vector<int> dist, order;
  std::vector<double> sigma, delta, eb;
  std::vector<std::vector<std::pair<int, int>>> pred;  // (node, edge id)

  void ensure(const EdgeGraph& g) {
    if (static_cast<int>(dist.size()) < g.n) {
      dist.resize(g.n);
      sigma.resize(g.n);
      delta.resize(g.n);
      pred.resize(g.n);
    }
    if (eb.size() < g.edges.size()) eb.resize(g.edges.size());
  }
};

inline std::pair<int, double> max_betweenness_edge(const EdgeGraph& g,
                                                   const std::vector<int>& nodes,
                                                   BrandesScratch& s) {
  s.ensure(g);
  for (int v : nodes)
    for (auto [w, e] : g.adj[v])
      if (g.alive[e]) s.eb[e] = 0.0;

  for (int src : nodes) {
    for (int v : nodes) {
      s.dist[v] = -1;
      s.sigma[v] = 0.0;
      s.delta[v] = 0.0;
      s.pred[v].clear();
    }
    s.order.clear();
    s.dist[src] = 0;
    s.sigma[src] = 1.0;
    std::size_t head = 0;
    s.order.push_back(src);
    while (head < s.order.size()) {
      int v = s.order[head++];
      for (auto [w, e] : g.adj[v]) {
        if (!g.alive[e]) continue;
        if (s.dist[w] == -1) {
          s.dist[w] = s.dist[v] + 1;
          s.order.push_back(w);
        }
        if (s.dist[w] == s.dist[v] + 1) {
          s.sigma[w] += s.sigma[v];
          s.pred[w].emplace_back(v, e);
        }
      }
    }
    for (auto it = s.order.rbegin(); it != s.order.rend(); ++it) {
      int w = *it;
      for (auto [v, e] : s.pred[w]) {
        double c = (s.sigma[v] / s.sigma[w]) * (1.0 + s.delta[w]);
        s.delta[v] += c;
        s.eb[e] += c;
      }
    }
  }

  int best = -1;
  double best_value = -1.0;
  for (int v : nodes)
    for (auto [w, e] : g.adj[v]) {
      if (!g.alive[e] || v > w) continue;
      if (best == -1 || s.eb[e] > best_value || (s.eb[e] == best_value && e < best)) {
        best = e;
        best_value = s.eb[e];
      }
    }
  return {best, best_value};
}

}  // namespace detail

// Newman modularity of a node labeling, on the undirected simple view.
inline double modularity(const Subnetwork& sub, const std::vector<int>& labels) {
  return detail::modularity_of(detail::EdgeGraph::from(sub), labels);
}

// Girvan-Newman: repeatedly remove the max-betweenness edge (recomputed within
// the affected component only) and return the partition along the dendrogram
// maximizing modularity on the original graph. max_communities caps the
// dendrogram depth; 0 means unlimited.
inline Partition girvan_newman(const Subnetwork& sub, int max_communities = 0) {
  using namespace detail;
  int n = sub.size();
  EdgeGraph g = EdgeGraph::from(sub);
  int cap = max_communities > 0 ? max_communities : n;

  // Initial labels: one component per connected piece of the input.
  std::vector<int> labels(n, -1);
  std::map<int, std::vector<int>> comp_nodes;
  int next_label = 0;
  for (int start = 0; start < n; ++start) {
    if (labels[start] != -1) continue;
    std::vector<int> stack{start};
    labels[start] = next_label;
    auto& members = comp_nodes[next_label];
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (auto [w, e] : g.adj[v])
        if (labels[w] == -1) {
          labels[w] = next_label;
          stack.push_back(w);
        }
    }
    ++next_label;
  }

  std::vector<int> best_labels = labels;
  double best_q = modularity_of(g, dense_renumber(labels));
  int n_components = next_label;

  BrandesScratch scratch;
  // Per component label: its max-betweenness edge and that edge's value.
  std::map<int, std::pair<int, double>> best_edge;
  for (auto& [c, members] : comp_nodes) best_edge[c] = max_betweenness_edge(g, members, scratch);

  int remaining = static_cast<int>(g.edges.size());
  std::vector<int> side(n, -1);
  while (remaining > 0 && n_components < cap) {
    // Global max: highest betweenness, ties to the smallest edge id, which is
    // the lexicographically smallest (u, v) pair.
    int target = -1;
    double target_value = -1.0;
    int target_comp = -1;
    for (const auto& [c, ev] : best_edge) {
      auto [e, value] = ev;
      if (e < 0) continue;
      if (target == -1 || value > target_value || (value == target_value && e < target)) {
        target = e;
        target_value = value;
        target_comp = c;
      }
    }
    if (target < 0) break;

    g.alive[target] = 0;
    --remaining;
    auto [a, b] = g.edges[target];

    // Does removing it split the component? BFS from a over alive edges.
    auto& members = comp_nodes[target_comp];
    for (int v : members) side[v] = -1;
    std::vector<int> reach{a};
    side[a] = 0;
    std::size_t head = 0;
    while (head < reach.size()) {
      int v = reach[head++];
      for (auto [w, e] : g.adj[v])
        if (g.alive[e] && side[w] == -1) {
          side[w] = 0;
          reach.push_back(w);
        }
    }

    if (side[b] != -1) {
      best_edge[target_comp] = max_betweenness_edge(g, members, scratch);
      continue;
    }

    std::vector<int> far;
    far.reserve(members.size() - reach.size());
    for (int v : members)
      if (side[v] == -1) far.push_back(v);
    int new_label = next_label++;
    for (int v : far) labels[v] = new_label;
    members = reach;
    comp_nodes[new_label] = std::move(far);
    best_edge[target_comp] = max_betweenness_edge(g, comp_nodes[target_comp], scratch);
    best_edge[new_label] = max_betweenness_edge(g, comp_nodes[new_label], scratch);
    ++n_components;

    double q = modularity_of(g, dense_renumber(labels));
    if (q > best_q) {
      best_q = q;
      best_labels = labels;
    }
  }

  Partition p;
  p.method = CommunityMethod::edge_betweenness;
  p.community = detail::dense_renumber(best_labels);
  p.modularity = modularity_of(EdgeGraph::from(sub), p.community);
  return p;
}

// Asynchronous label propagation with deterministic ascending node order and
// lowest-label tie-breaking.
inline Partition label_propagation(const Subnetwork& sub, int max_sweeps = 100) {
  int n = sub.size();
  auto adj = sub.undirected_adjacency();
  std::vector<int> labels(n);
  for (int v = 0; v < n; ++v) labels[v] = v;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (int v = 0; v < n; ++v) {
      if (adj[v].empty()) continue;
      std::map<int, int> freq;
      for (int w : adj[v]) ++freq[labels[w]];
      int best_label = labels[v];
      int best_count = 0;
      for (const auto& [label, count] : freq) {
        if (count > best_count) {  // ascending map order: lowest label wins ties
          best_count = count;
          best_label = label;
        }
      }
      if (best_label != labels[v]) {
        labels[v] = best_label;
        changed = true;
      }
    }
    if (!changed) break;
  }

  Partition p;
  p.method = CommunityMethod::label_propagation;
  p.community = detail::dense_renumber(labels);
  p.modularity = modularity(sub, p.community);
  return p;
}

inline Partition detect_communities(const Subnetwork& sub, CommunityMethod method,
                                    int max_communities = 0) {
  return method == CommunityMethod::edge_betweenness ? girvan_newman(sub, max_communities)
                                                     : label_propagation(sub);
}

// ---------------------------------------------------------------------------
// Community default rates (customer-level, as of a cutoff date)

struct CommunityRisk {
  int community = 0;
  std::int64_t size = 0;
  std::int64_t default_count = 0;
  double default_rate = 0.0;
};

struct CommunityRiskTable {
  std::vector<CommunityRisk> rows;  // indexed by community id

  const CommunityRisk& for_community(int id) const { return rows.at(id); }
};

// A customer counts as defaulted if any repayment with due_date <= cutoff
// defaulted. With focal set, its defaults leave its community's numerator and
// its membership leaves the denominator, so a customer never sees its own
// outcome through the community rate.
inline CommunityRiskTable community_default_rate(const Subnetwork& sub, const Partition& partition,
                                                 const CustomerDefaultIndex& defaults, Date cutoff,
                                                 std::optional<std::string> focal = std::nullopt) {
  CommunityRiskTable table;
  int n_comm = partition.community_count();
  table.rows.resize(n_comm);
  for (int c = 0; c < n_comm; ++c) table.rows[c].community = c;

  for (int v = 0; v < sub.size(); ++v) {
    const std::string& id = sub.node_ids[v];
    if (focal && *focal == id) continue;
    auto& row = table.rows[partition.community[v]];
    ++row.size;
    if (defaults.defaulted_by(id, cutoff)) ++row.default_count;
  }
  for (auto& row : table.rows)
    row.default_rate =
        row.size > 0 ? static_cast<double>(row.default_count) / static_cast<double>(row.size) : 0.0;
  return table;
}

inline CommunityRiskTable community_default_rate(const Subnetwork& sub, const Partition& partition,
                                                 const LoanDataset& ds, Date cutoff,
                                                 std::optional<std::string> focal = std::nullopt) {
  return community_default_rate(sub, partition, build_default_index(ds), cutoff, std::move(focal));
}

}  // namespace guarnet
