#pragma once

// Template definition for submarginal_correction; included by
// mms/interpolation.hpp. The induction follows the M+1-step scheme: step j
// gates leg j-1, then rebalances the later legs by first-endpoint mass
// ratios and the earlier legs by second-endpoint ratios.

#include <stdexcept>
#include <type_traits>

namespace mms {

namespace detail {

template <class S>
std::vector<S> push_forward(const MarkovLeg<S>& leg, int points,
                            bool to_dst) {
  std::vector<S> out(points, S(0));
  for (size_t e = 0; e < leg.mass.size(); ++e)
    out[to_dst ? leg.dst[e] : leg.src[e]] += leg.mass[e];
  return out;
}

template <class S>
S abs_val(const S& x) {
  return x < S(0) ? S(-x) : x;
}

}  // namespace detail

template <class S>
CorrectionResult<S> submarginal_correction(
    const std::vector<std::vector<S>>& point_masses_in,
    const std::vector<MarkovLeg<S>>& legs_in,
    const std::vector<std::vector<char>>& gates, const std::vector<S>* weights,
    const std::vector<std::vector<S>>* leg_costs) {
  const int M = static_cast<int>(legs_in.size());
  if (M == 0) throw std::invalid_argument("correction: no legs");
  if (static_cast<int>(point_masses_in.size()) != M + 1 ||
      static_cast<int>(gates.size()) != M)
    throw std::invalid_argument("correction: shape mismatch");
  const int P = static_cast<int>(point_masses_in[0].size());

  const bool exact = !std::is_floating_point_v<S>;
  const S tol = exact ? S(0) : S(1e-9);
  for (int i = 0; i < M; ++i) {
    if (legs_in[i].src.size() != legs_in[i].mass.size() ||
        legs_in[i].dst.size() != legs_in[i].mass.size() ||
        gates[i].size() != legs_in[i].mass.size())
      throw std::invalid_argument("correction: leg shape mismatch");
    auto m0 = detail::push_forward(legs_in[i], P, false);
    auto m1 = detail::push_forward(legs_in[i], P, true);
    for (int x = 0; x < P; ++x)
      if (detail::abs_val(S(m0[x] - point_masses_in[i][x])) > tol ||
          detail::abs_val(S(m1[x] - point_masses_in[i + 1][x])) > tol)
        throw std::invalid_argument("correction: incompatible marginals");
  }

  S sigma(0);
  for (int i = 0; i < M; ++i)
    for (size_t e = 0; e < legs_in[i].mass.size(); ++e)
      if (!gates[i][e]) sigma += legs_in[i].mass[e];
  if (S(2) * sigma > S(1))
    throw CorrectionHypothesisError(
        "correction: sum of gated mass exceeds 1/2");

  std::vector<std::vector<S>> mu = point_masses_in;
  std::vector<MarkovLeg<S>> eta = legs_in;

  for (int step = 1; step <= M; ++step) {
    const int g = step - 1;
    const std::vector<std::vector<S>> old_mu = mu;
    for (size_t e = 0; e < eta[g].mass.size(); ++e)
      if (!gates[g][e]) eta[g].mass[e] = S(0);
    mu[g] = detail::push_forward(eta[g], P, false);
    mu[g + 1] = detail::push_forward(eta[g], P, true);
    for (int i = g + 1; i < M; ++i) {
      for (size_t e = 0; e < eta[i].mass.size(); ++e) {
        int a = eta[i].src[e];
        eta[i].mass[e] = old_mu[i][a] > S(0)
                             ? S(eta[i].mass[e] * mu[i][a] / old_mu[i][a])
                             : S(0);
      }
      mu[i + 1] = detail::push_forward(eta[i], P, true);
    }
    for (int i = g - 1; i >= 0; --i) {
      for (size_t e = 0; e < eta[i].mass.size(); ++e) {
        int b = eta[i].dst[e];
        eta[i].mass[e] =
            old_mu[i + 1][b] > S(0)
                ? S(eta[i].mass[e] * mu[i + 1][b] / old_mu[i + 1][b])
                : S(0);
      }
      mu[i] = detail::push_forward(eta[i], P, false);
    }
  }

  S retained(0);
  for (int x = 0; x < P; ++x) retained += mu[0][x];
  if (!(retained > S(0)))
    throw std::runtime_error("correction: no mass retained");

  CorrectionResult<S> res;
  res.sigma = sigma;
  res.retained = retained;
  res.point_masses = mu;
  for (auto& v : res.point_masses)
    for (S& x : v) x = x / retained;
  res.legs = eta;
  for (int i = 0; i < M; ++i) {
    S tot(0);
    for (const S& m : res.legs[i].mass) tot += m;
    if (!(tot > S(0)))
      throw std::runtime_error("correction: empty corrected leg");
    for (S& m : res.legs[i].mass) m = m / tot;
  }

  res.gates_clean = true;
  for (int i = 0; i < M; ++i)
    for (size_t e = 0; e < res.legs[i].mass.size(); ++e)
      if (!gates[i][e] && res.legs[i].mass[e] > tol) res.gates_clean = false;

  const S inflate = S(1) / (S(1) - sigma);
  for (int i = 0; i <= M; ++i) {
    S l1(0);
    for (int x = 0; x < P; ++x)
      l1 += detail::abs_val(S(point_masses_in[i][x] - res.point_masses[i][x]));
    S bound = S(2) * sigma;
    res.l1_bound.push_back({l1, bound, !(l1 > bound + tol)});
  }
  if (weights) {
    for (int i = 0; i <= M; ++i) {
      S lhs(0), rhs(0);
      for (int x = 0; x < P; ++x) {
        if (!((*weights)[x] > S(0))) continue;
        S d_new = res.point_masses[i][x] / (*weights)[x];
        S d_old = point_masses_in[i][x] / (*weights)[x];
        if (d_new > lhs) lhs = d_new;
        if (d_old > rhs) rhs = d_old;
      }
      rhs = rhs * inflate;
      res.sup_bound.push_back({lhs, rhs, !(lhs > rhs + tol)});
    }
  }
  if (leg_costs) {
    for (int i = 0; i < M; ++i) {
      S lhs(0), rhs(0);
      for (size_t e = 0; e < res.legs[i].mass.size(); ++e) {
        lhs += res.legs[i].mass[e] * (*leg_costs)[i][e];
        rhs += legs_in[i].mass[e] * (*leg_costs)[i][e];
      }
      rhs = rhs * inflate;
      res.ke_bound.push_back({lhs, rhs, !(lhs > rhs + tol)});
    }
  }
  return res;
}

}  // namespace mms
