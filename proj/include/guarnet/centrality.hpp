#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "guarnet/graph.hpp"

namespace guarnet {

// Per-node structural scores of one Subnetwork. HITS and PageRank respect
// edge direction (guarantor -> borrower, so authority ~ "guaranteed by
// many"); eigenvector, betweenness, closeness and k-shell use the undirected
// view. All iterative scores start from the uniform vector, making outputs
// deterministic.
struct CentralityScores {
  std::vector<double> authority;
  std::vector<double> hub;
  std::vector<double> pagerank;
  std::vector<int> kshell;
  std::vector<double> eigenvector;
  std::vector<double> betweenness;  // unnormalized, each unordered pair once
  std::vector<double> closeness;
  std::vector<int> in_degree;   // distinct guarantors
  std::vector<int> out_degree;  // distinct borrowers backed

  bool no_edges = false;             // HITS/eigenvector returned as all-zero
  bool hits_converged = true;        // false: last iterate reported
  bool pagerank_converged = true;
  bool eigenvector_converged = true;
};

namespace detail {

inline double l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return norm;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace detail

struct HitsResult {
  std::vector<double> authority;
  std::vector<double> hub;
  bool converged = true;
  bool no_edges = false;
};

// Power iteration on the directed adjacency: auth <- A^T hub, hub <- A auth,
// L2-renormalizing each step, until the max-abs change drops below tol.
inline HitsResult hits(const Subnetwork& sub, double tol = 1e-9, int max_iter = 1000) {
  int n = sub.size();
  HitsResult r;
  r.authority.assign(n, 0.0);
  r.hub.assign(n, 0.0);
  if (sub.edges.empty()) {
    r.no_edges = true;
    return r;
  }
  double u = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> auth(n, u), hub(n, u);
  std::vector<double> next_auth(n), next_hub(n);
  r.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(next_auth.begin(), next_auth.end(), 0.0);
    for (const auto& e : sub.edges) next_auth[e.borrower] += hub[e.guarantor];
    detail::l2_normalize(next_auth);
    std::fill(next_hub.begin(), next_hub.end(), 0.0);
    for (const auto& e : sub.edges) next_hub[e.guarantor] += next_auth[e.borrower];
    detail::l2_normalize(next_hub);
    double delta = std::max(detail::max_abs_diff(auth, next_auth),
                            detail::max_abs_diff(hub, next_hub));
    auth.swap(next_auth);
    hub.swap(next_hub);
    if (delta < tol) {
      r.converged = true;
      break;
    }
  }
  r.authority = std::move(auth);
  r.hub = std::move(hub);
  return r;
}

struct PageRankResult {
  std::vector<double> scores;
  bool converged = true;
};

// Standard damped iteration; dangling-node mass is redistributed uniformly.
// L1-normalized.
inline PageRankResult pagerank(const Subnetwork& sub, double damping = 0.85, double tol = 1e-8,
                               int max_iter = 1000) {
  int n = sub.size();
  PageRankResult r;
  if (n == 0) return r;
  std::vector<std::vector<int>> out(n);
  for (const auto& e : sub.edges) out[e.guarantor].push_back(e.borrower);

  std::vector<double> p(n, 1.0 / n), next(n);
  r.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (int v = 0; v < n; ++v)
      if (out[v].empty()) dangling += p[v];
    double base = (1.0 - damping) / n + damping * dangling / n;
    std::fill(next.begin(), next.end(), base);
    for (int v = 0; v < n; ++v) {
      if (out[v].empty()) continue;
      double share = damping * p[v] / static_cast<double>(out[v].size());
      for (int w : out[v]) next[w] += share;
    }
    // Guard against drift; the iteration preserves total mass analytically.
    double sum = 0.0;
    for (double x : next) sum += x;
    for (double& x : next) x /= sum;
    double delta = detail::max_abs_diff(p, next);
    p.swap(next);
    if (delta < tol) {
      r.converged = true;
      break;
    }
  }
  r.scores = std::move(p);
  return r;
}

// Core number on the undirected view via iterative minimum-degree peeling.
inline std::vector<int> kshell(const Subnetwork& sub) {
  int n = sub.size();
  auto adj = sub.undirected_adjacency();
  std::vector<int> degree(n), core(n, 0);
  std::vector<bool> removed(n, false);
  for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(adj[v].size());

  int remaining = n;
  int k = 0;
  while (remaining > 0) {
    // Peel everything of degree <= k before raising k.
    bool peeled = true;
    while (peeled) {
      peeled = false;
      for (int v = 0; v < n; ++v) {
        if (removed[v] || degree[v] > k) continue;
        removed[v] = true;
        core[v] = k;
        --remaining;
        peeled = true;
        for (int w : adj[v])
          if (!removed[w]) --degree[w];
      }
    }
    ++k;
  }
  return core;
}

struct EigenvectorResult {
  std::vector<double> scores;
  bool converged = true;
  bool no_edges = false;
};

// Power iteration on the undirected adjacency. The iteration applies (A + I)
// so bipartite components converge; the fixed point is still the dominant
// eigenvector of A. L2-normalized, entries non-negative.
inline EigenvectorResult eigenvector_centrality(const Subnetwork& sub, double tol = 1e-9,
                                                int max_iter = 1000) {
  int n = sub.size();
  EigenvectorResult r;
  r.scores.assign(n, 0.0);
  if (sub.edges.empty()) {
    r.no_edges = true;
    return r;
  }
  auto adj = sub.undirected_adjacency();
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), next(n);
  r.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    for (int v = 0; v < n; ++v) {
      double acc = x[v];
      for (int w : adj[v]) acc += x[w];
      next[v] = acc;
    }
    detail::l2_normalize(next);
    double delta = detail::max_abs_diff(x, next);
    x.swap(next);
    if (delta < tol) {
      r.converged = true;
      break;
    }
  }
  for (double& v : x)
    if (v < 0.0) v = 0.0;
  r.scores = std::move(x);
  return r;
}

// Brandes' algorithm on the undirected view; unnormalized, each unordered
// pair counted once.
inline std::vector<double> betweenness(const Subnetwork& sub) {
  int n = sub.size();
  auto adj = sub.undirected_adjacency();
  std::vector<double> bc(n, 0.0);
  std::vector<int> dist(n), sigma(n);
  std::vector<double> delta(n);
  std::vector<std::vector<int>> pred(n);
  std::vector<int> order;
  order.reserve(n);

  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : pred) p.clear();
    order.clear();

    dist[s] = 0;
    sigma[s] = 1;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      for (int w : adj[v]) {
        if (dist[w] == -1) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      for (int v : pred[w])
        delta[v] += (static_cast<double>(sigma[v]) / sigma[w]) * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }
  // Each unordered pair was visited from both endpoints.
  for (double& v : bc) v /= 2.0;
  return bc;
}

// Per node v in a component of size n: (n-1) / sum of distances; an isolated
// node scores 0.
inline std::vector<double> closeness(const Subnetwork& sub) {
  int n = sub.size();
  auto adj = sub.undirected_adjacency();
  std::vector<double> cc(n, 0.0);
  std::vector<int> dist(n);
  for (int s = 0; s < n; ++s) {
    if (n == 1) break;
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    long long total = 0;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      total += dist[v];
      for (int w : adj[v])
        if (dist[w] == -1) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
    }
    cc[s] = total > 0 ? static_cast<double>(n - 1) / static_cast<double>(total) : 0.0;
  }
  return cc;
}

// Convenience bundle of all seven measures plus degrees for one component.
inline CentralityScores compute_centrality(const Subnetwork& sub) {
  CentralityScores s;
  int n = sub.size();
  s.in_degree.assign(n, 0);
  s.out_degree.assign(n, 0);
  for (const auto& e : sub.edges) {
    ++s.in_degree[e.borrower];
    ++s.out_degree[e.guarantor];
  }
  auto h = hits(sub);
  s.authority = std::move(h.authority);
  s.hub = std::move(h.hub);
  s.no_edges = h.no_edges;
  s.hits_converged = h.converged;
  auto pr = pagerank(sub);
  s.pagerank = std::move(pr.scores);
  s.pagerank_converged = pr.converged;
  s.kshell = kshell(sub);
  auto ev = eigenvector_centrality(sub);
  s.eigenvector = std::move(ev.scores);
  s.eigenvector_converged = ev.converged;
  s.betweenness = betweenness(sub);
  s.closeness = closeness(sub);
  return s;
}

}  // namespace guarnet
