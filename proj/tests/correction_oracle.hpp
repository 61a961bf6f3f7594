#pragma once

// Brute-force oracle for the submarginal correction: enumerate curve tuples
// of the Markov composition of the legs, restrict to gated tuples, normalize
// and read off leg marginals. Exact over rationals and independent of the
// induction it checks.

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <random>
#include <vector>

#include "mms/interpolation.hpp"
#include "oracles.hpp"

namespace oracle {

using Rat = boost::multiprecision::cpp_rational;

struct CorrectionInstance {
  int points;
  std::vector<std::vector<Rat>> marginals;   // M+1 endpoint mass vectors
  std::vector<mms::MarkovLeg<Rat>> legs;     // each totals 1
  std::vector<std::vector<char>> gates;
  Rat sigma;
};

// Random compatible instance built forward as a Markov chain, with gates
// resampled until the gated mass stays within the hypothesis.
inline CorrectionInstance random_correction_instance(std::mt19937_64& rng,
                                                     int points, int legs,
                                                     int max_fanout) {
  CorrectionInstance inst;
  inst.points = points;
  auto marg = random_marginal(rng, std::min(3, points), 8);
  std::vector<Rat> nu(points, Rat(0));
  for (size_t k = 0; k < marg.units.size(); ++k)
    nu[uniform_int(rng, 0, points - 1)] += Rat(marg.units[k], marg.denom);
  inst.marginals.push_back(nu);
  for (int l = 0; l < legs; ++l) {
    mms::MarkovLeg<Rat> leg;
    std::vector<Rat> next(points, Rat(0));
    for (int x = 0; x < points; ++x) {
      if (nu[x] == 0) continue;
      int fanout = uniform_int(rng, 1, max_fanout);
      // split nu[x] into `fanout` rational shares
      std::vector<Rat> shares;
      Rat left = nu[x];
      for (int f = 0; f + 1 < fanout; ++f) {
        int num = uniform_int(rng, 1, 3);
        Rat share = left * Rat(num, 4);
        shares.push_back(share);
        left -= share;
      }
      shares.push_back(left);
      for (const Rat& s : shares) {
        if (s == 0) continue;
        int y = uniform_int(rng, 0, points - 1);
        leg.src.push_back(x);
        leg.dst.push_back(y);
        leg.mass.push_back(s);
        next[y] += s;
      }
    }
    inst.legs.push_back(std::move(leg));
    inst.marginals.push_back(next);
    nu = inst.marginals.back();
  }
  // gates: drop entries until just under the hypothesis bound
  for (int attempt = 0; attempt < 64; ++attempt) {
    inst.gates.clear();
    inst.sigma = 0;
    for (int l = 0; l < legs; ++l) {
      std::vector<char> g(inst.legs[l].mass.size(), 1);
      for (size_t e = 0; e < g.size(); ++e)
        if (rng() % 5 == 0) {
          Rat would = inst.sigma + inst.legs[l].mass[e];
          if (Rat(2) * would <= Rat(1)) {
            g[e] = 0;
            inst.sigma = would;
          }
        }
      inst.gates.push_back(std::move(g));
    }
    // keep at least one surviving entry per leg touching retained mass
    bool any_gate = inst.sigma > 0;
    if (any_gate || attempt == 63) break;
  }
  return inst;
}

struct OracleCorrection {
  std::vector<std::vector<Rat>> point_masses;  // normalized, per marginal
  std::vector<mms::MarkovLeg<Rat>> legs;       // normalized entry masses
  Rat retained;
  bool feasible = true;
};

inline OracleCorrection path_enumeration_correction(
    const CorrectionInstance& inst) {
  const int M = static_cast<int>(inst.legs.size());
  const int P = inst.points;
  // outgoing mass per point and leg
  std::vector<std::vector<Rat>> out(M, std::vector<Rat>(P, Rat(0)));
  for (int l = 0; l < M; ++l)
    for (size_t e = 0; e < inst.legs[l].mass.size(); ++e)
      out[l][inst.legs[l].src[e]] += inst.legs[l].mass[e];

  OracleCorrection res;
  res.point_masses.assign(M + 1, std::vector<Rat>(P, Rat(0)));
  res.legs.resize(M);
  for (int l = 0; l < M; ++l) {
    res.legs[l].src = inst.legs[l].src;
    res.legs[l].dst = inst.legs[l].dst;
    res.legs[l].mass.assign(inst.legs[l].mass.size(), Rat(0));
  }
  res.retained = 0;

  std::vector<size_t> path(M);
  std::function<void(int, Rat)> rec = [&](int l, Rat mass) {
    if (mass == 0) return;
    if (l == M) {
      res.retained += mass;
      for (int i = 0; i < M; ++i) {
        res.legs[i].mass[path[i]] += mass;
        res.point_masses[i][inst.legs[i].src[path[i]]] += mass;
      }
      res.point_masses[M][inst.legs[M - 1].dst[path[M - 1]]] += mass;
      return;
    }
    for (size_t e = 0; e < inst.legs[l].mass.size(); ++e) {
      if (!inst.gates[l][e]) continue;
      if (l > 0 && inst.legs[l].src[e] != inst.legs[l - 1].dst[path[l - 1]])
        continue;
      Rat cond = l == 0 ? inst.legs[l].mass[e]
                        : mass * inst.legs[l].mass[e] /
                              out[l][inst.legs[l].src[e]];
      path[l] = e;
      rec(l + 1, cond);
    }
  };
  rec(0, Rat(1));

  if (res.retained == 0) {
    res.feasible = false;
    return res;
  }
  for (auto& v : res.point_masses)
    for (Rat& x : v) x /= res.retained;
  for (int l = 0; l < M; ++l) {
    Rat tot(0);
    for (const Rat& m : res.legs[l].mass) tot += m;
    for (Rat& m : res.legs[l].mass) m /= tot;
  }
  return res;
}

}  // namespace oracle
