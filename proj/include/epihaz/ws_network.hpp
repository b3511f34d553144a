#pragma once

#include <algorithm>
#include <vector>

#include "epihaz/record.hpp"
#include "epihaz/rng.hpp"

namespace epihaz {

struct WsStats {
  int n = 0;
  long undirected_edges = 0;
  long rewired_edges = 0;
  // Nodes none of whose original lattice edges were rewired, i.e. still
  // connected to exactly their k nearest ring neighbors.
  double zero_rewired_fraction = 0.0;
  std::vector<int> rewired_per_node;  // own-lattice-edge rewirings per node
};

/// Watts-Strogatz small-world graph: a ring of n nodes each joined to its k
/// nearest neighbors, then every lattice edge rewired to a random target with
/// probability p (duplicates and self-loops rejected; edge count preserved).
inline ContactStructure generate_ws_network(int n, int k, double p, Rng& rng,
                                            WsStats* stats = nullptr) {
  if (k < 2 || k % 2 != 0 || k >= n) throw DataError("generate_ws_network: need even k, 2 <= k < n");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("generate_ws_network: p outside [0,1]");

  std::vector<std::vector<int>> adj(n);
  for (auto& v : adj) v.reserve(k + 2);
  auto contains = [&](int a, int b) {
    return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
  };
  auto add = [&](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  auto remove = [&](int a, int b) {
    adj[a].erase(std::find(adj[a].begin(), adj[a].end(), b));
    adj[b].erase(std::find(adj[b].begin(), adj[b].end(), a));
  };

  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k / 2; ++d) add(i, (i + d) % n);

  std::vector<int> rewired(n, 0);
  long rewired_edges = 0;
  for (int i = 0; i < n; ++i) {
    for (int d = 1; d <= k / 2; ++d) {
      const int j = (i + d) % n;
      if (rng.uniform() >= p) continue;
      int r = -1;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int cand = int(rng.below(std::uint64_t(n)));
        if (cand != i && !contains(i, cand)) {
          r = cand;
          break;
        }
      }
      if (r < 0) continue;  // saturated neighborhood: keep the lattice edge
      remove(i, j);
      add(i, r);
      ++rewired[i];
      ++rewired[j];
      ++rewired_edges;
    }
  }

  if (stats) {
    stats->n = n;
    stats->rewired_edges = rewired_edges;
    long deg = 0;
    for (const auto& v : adj) deg += long(v.size());
    stats->undirected_edges = deg / 2;
    int zero = 0;
    for (int c : rewired) zero += (c == 0);
    stats->zero_rewired_fraction = double(zero) / double(n);
    stats->rewired_per_node = rewired;
  }

  ContactStructure c;
  c.mode = ContactMode::Network;
  c.n = n;
  c.out.resize(n);
  for (int i = 0; i < n; ++i) {
    c.out[i] = adj[i];
    std::sort(c.out[i].begin(), c.out[i].end());
  }
  c.in = c.out;  // undirected graph stored as symmetric directed pairs
  return c;
}

inline ContactStructure generate_ws_network(int n, int k, double p, std::uint64_t seed,
                                            WsStats* stats = nullptr) {
  Rng rng(seed);
  return generate_ws_network(n, k, p, rng, stats);
}

}  // namespace epihaz
