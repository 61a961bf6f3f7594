#pragma once

#include <cstdlib>
#include <type_traits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mms::detail {

// Transportation simplex on a dense bipartite instance. Scalar S is double
// or an exact rational type; with an exact S and eps = 0 the solution is an
// exact vertex optimum. Bland's rule (first improving arc in row-major
// order, smallest-index leaving arc) prevents cycling and fixes the pivot
// order, so results are deterministic.
template <class S>
struct TransportSolution {
  std::vector<std::pair<std::pair<int, int>, S>> flows;  // basic arcs only
  std::vector<S> u, v;                                   // dual potentials
  S objective;
  int pivots = 0;
};

template <class S>
TransportSolution<S> solve_transport(const std::vector<S>& supply,
                                     const std::vector<S>& demand,
                                     const std::vector<std::vector<S>>& cost,
                                     S eps) {
  const int nR = static_cast<int>(supply.size());
  const int nC = static_cast<int>(demand.size());
  if (nR == 0 || nC == 0) throw std::invalid_argument("transport: empty side");
  {
    S sa = S(0), sb = S(0);
    for (const S& a : supply) sa += a;
    for (const S& b : demand) sb += b;
    S diff = sa - sb;
    if (diff < S(0)) diff = -diff;
    // balance tolerance lives on the mass scale, not the cost scale
    S mass_tol = std::is_floating_point_v<S> ? S(1e-12) * (S(1) + sa) : S(0);
    if (diff > mass_tol)
      throw std::invalid_argument("transport: supply/demand mismatch");
  }

  std::vector<std::vector<S>> x(nR, std::vector<S>(nC, S(0)));
  std::vector<std::vector<char>> basic(nR, std::vector<char>(nC, 0));

  // northwest-corner start; exactly nR+nC-1 basic cells, degenerate zeros
  // included. The staircase walk saturates at the borders so rounding slop
  // in the balance cannot push an index out of range.
  {
    std::vector<S> ra = supply, cb = demand;
    int i = 0, j = 0;
    while (true) {
      S f = ra[i] < cb[j] ? ra[i] : cb[j];
      x[i][j] = f;
      basic[i][j] = 1;
      ra[i] -= f;
      cb[j] -= f;
      if (ra[i] == S(0) && i < nR - 1)
        ++i;
      else if (j < nC - 1)
        ++j;
      else if (i < nR - 1)
        ++i;
      else
        break;
    }
  }

  const int nodes = nR + nC;
  std::vector<S> u(nR), v(nC);
  std::vector<std::vector<int>> adj;  // node -> incident basic arc partners
  std::vector<int> parent(nodes), parent_arc(nodes), order(nodes);

  auto rebuild = [&]() {
    adj.assign(nodes, {});
    for (int i = 0; i < nR; ++i)
      for (int j = 0; j < nC; ++j)
        if (basic[i][j]) {
          adj[i].push_back(nR + j);
          adj[nR + j].push_back(i);
        }
  };

  auto compute_potentials = [&]() {
    rebuild();
    std::vector<char> seen(nodes, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    u[0] = S(0);
    size_t head = 0;
    while (head < queue.size()) {
      int a = queue[head++];
      for (int b : adj[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        if (a < nR)
          v[b - nR] = cost[a][b - nR] - u[a];
        else
          u[b] = cost[b][a - nR] - v[a - nR];
        queue.push_back(b);
      }
    }
    if (queue.size() != static_cast<size_t>(nodes))
      throw std::runtime_error("transport: basis is not spanning");
  };

  const long long max_pivots = 2000LL * nR * nC + 10000;
  TransportSolution<S> sol;
  while (true) {
    compute_potentials();
    int ei = -1, ej = -1;
    for (int i = 0; i < nR && ei < 0; ++i)
      for (int j = 0; j < nC; ++j) {
        if (basic[i][j]) continue;
        S r = cost[i][j] - u[i] - v[j];
        if (r < -eps) {
          ei = i;
          ej = j;
          break;
        }
      }
    if (ei < 0) break;

    // tree path from row ei to col ej
    std::vector<char> seen(nodes, 0);
    std::vector<int> queue{ei};
    seen[ei] = 1;
    parent[ei] = -1;
    size_t head = 0;
    while (head < queue.size()) {
      int a = queue[head++];
      if (a == nR + ej) break;
      for (int b : adj[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        parent[b] = a;
        queue.push_back(b);
      }
    }
    if (!seen[nR + ej]) throw std::runtime_error("transport: broken basis");
    std::vector<std::pair<int, int>> cycle;  // arcs along path, alternating
    for (int b = nR + ej; parent[b] >= 0; b = parent[b]) {
      int a = parent[b];
      cycle.push_back(a < nR ? std::make_pair(a, b - nR)
                             : std::make_pair(b, a - nR));
    }
    // orientation: entering arc (+), then alternate along the path from ej
    // back to ei. Arc at position k (0-based from ej side) gets sign -,+,-,...
    S theta = S(0);
    bool have = false;
    int li = -1, lj = -1;
    for (size_t k = 0; k < cycle.size(); k += 2) {
      auto [i, j] = cycle[k];
      if (!have || x[i][j] < theta ||
          (x[i][j] == theta &&
           (i < li || (i == li && j < lj)))) {
        have = true;
        theta = x[i][j];
        li = i;
        lj = j;
      }
    }
    x[ei][ej] += theta;
    for (size_t k = 0; k < cycle.size(); ++k) {
      auto [i, j] = cycle[k];
      if (k % 2 == 0)
        x[i][j] -= theta;
      else
        x[i][j] += theta;
    }
    basic[ei][ej] = 1;
    basic[li][lj] = 0;
    x[li][lj] = S(0);
    if (++sol.pivots > max_pivots)
      throw std::runtime_error("transport: pivot limit exceeded");
  }

  sol.u = u;
  sol.v = v;
  sol.objective = S(0);
  for (int i = 0; i < nR; ++i)
    for (int j = 0; j < nC; ++j)
      if (basic[i][j]) {
        sol.flows.push_back({{i, j}, x[i][j]});
        sol.objective += x[i][j] * cost[i][j];
      }
  return sol;
}

}  // namespace mms::detail
