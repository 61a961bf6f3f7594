#include "mms/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mms {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::cd_nonneg: return "cd_nonneg";
    case Regime::cd_general: return "cd_general";
    case Regime::mcp: return "mcp";
  }
  return "cd_nonneg";
}

Regime regime_from_string(const std::string& s) {
  if (s == "cd_nonneg") return Regime::cd_nonneg;
  if (s == "cd_general") return Regime::cd_general;
  if (s == "mcp") return Regime::mcp;
  throw std::invalid_argument("unknown regime: " + s);
}

double entropy(const Density& mu) {
  double s = 0;
  for (int i = 0; i < mu.space->size(); ++i) {
    double rho = mu.values[i], m = mu.space->weights[i];
    if (m <= 0 || rho <= 0) continue;  // 0 log 0 = 0
    s += rho * std::log(rho) * m;
  }
  return s;
}

double renyi(const Density& mu, double N) {
  if (N < 1) throw std::invalid_argument("renyi: N must be at least 1");
  double s = 0;
  for (int i = 0; i < mu.space->size(); ++i) {
    double rho = mu.values[i], m = mu.space->weights[i];
    if (m <= 0 || rho <= 0) continue;
    s += std::pow(rho, 1.0 - 1.0 / N) * m;
  }
  return s;
}

GateResult chebyshev_gate(const CurvePlan& leg, double q, double wq_value) {
  if (wq_value < 0) throw std::invalid_argument("gate: negative wq");
  GateResult g;
  g.threshold = std::pow(wq_value, (q - 1) / 2);
  g.mass_bound = std::pow(wq_value, (q + 1) / 2);
  const auto& tmpl = leg.space->tmpl;
  g.indicator.resize(leg.size());
  for (int i = 0; i < leg.size(); ++i) {
    double d = tmpl.distance(leg.curves[i].nodes.front(),
                             leg.curves[i].nodes.back());
    bool keep = std::pow(d, q) <= g.threshold + 1e-12;
    g.indicator[i] = keep ? 1.0 : 0.0;
    if (!keep) g.discarded_mass += leg.masses[i];
  }
  return g;
}

Density approx_density(const Density& rho_limit, SpacePtr target, Point center,
                       double radius) {
  if (radius <= 0) throw std::invalid_argument("approx_density: bad radius");
  const FiniteSpace& src = *rho_limit.space;
  const FiniteSpace& dst = *target;
  const double L = rho_limit.sup_norm();
  // nearest-point kernel: each source atom spreads its mass over the target
  // points sitting in its Voronoi cell (weight-proportionally, so uniform
  // densities stay flat under refinement); an empty cell degrades to the
  // single nearest target point, which keeps Dirac marginals transferable.
  std::vector<std::vector<int>> cell(src.size());
  for (int y = 0; y < dst.size(); ++y)
    cell[src.nearest(dst.points[y])].push_back(y);
  std::vector<double> pushed(dst.size(), 0.0);
  for (int i = 0; i < src.size(); ++i) {
    double m = rho_limit.mass(i);
    if (m <= 0) continue;
    if (src.tmpl.distance(src.points[i], center) > radius + 1e-12)
      throw std::invalid_argument(
          "approx_density: density not supported in the ball");
    double cell_weight = 0;
    for (int y : cell[i]) cell_weight += dst.weights[y];
    if (cell_weight > 0) {
      for (int y : cell[i]) pushed[y] += m * dst.weights[y] / cell_weight;
    } else {
      pushed[dst.nearest(src.points[i])] += m;
    }
  }
  std::vector<double> vals(dst.size(), 0.0);
  double retained = 0;
  for (int y = 0; y < dst.size(); ++y) {
    if (pushed[y] <= 0 || dst.weights[y] <= 0) continue;
    double d = dst.tmpl.distance(dst.points[y], center);
    double chi = std::clamp(1.0 - std::fmax(0.0, d - radius) / radius, 0.0, 1.0);
    vals[y] = std::fmin(chi * pushed[y] / dst.weights[y], L);
    retained += vals[y] * dst.weights[y];
  }
  if (retained <= 1e-15)
    throw std::runtime_error("approx_density: no mass retained on target");
  for (double& v : vals) v /= retained;
  Density out;
  out.space = target;
  out.values = std::move(vals);
  out.validate();
  return out;
}

namespace {

// Restriction of a space to the closed ball B(center, r), weights
// renormalized to total mass one. Returns the new space and the index map.
std::pair<SpacePtr, std::vector<int>> restrict_space(const FiniteSpace& sp,
                                                     Point center, double r) {
  std::vector<Point> pts;
  std::vector<double> w;
  std::vector<int> map;
  double total = 0;
  for (int i = 0; i < sp.size(); ++i)
    if (sp.tmpl.distance(sp.points[i], center) <= r + 1e-12) {
      pts.push_back(sp.points[i]);
      w.push_back(sp.weights[i]);
      map.push_back(i);
      total += sp.weights[i];
    }
  if (pts.empty() || total <= 0)
    throw std::runtime_error("transfer: empty restriction");
  for (double& x : w) x /= total;
  int base = 0;
  for (size_t k = 0; k < map.size(); ++k)
    if (map[k] == sp.basepoint) base = static_cast<int>(k);
  return {make_space(sp.tmpl, pts, w, base), map};
}

struct BallSpec {
  Point center;
  double radius;
};

BallSpec support_ball(const CurvePlan& eta) {
  const auto& tmpl = eta.space->tmpl;
  std::vector<Point> nodes;
  for (const auto& c : eta.curves)
    nodes.insert(nodes.end(), c.nodes.begin(), c.nodes.end());
  // deterministic center: first node; radius covers everything plus margin
  Point center = nodes.front();
  if (tmpl.kind == TemplateKind::segment) {
    double lo = nodes.front()[0], hi = lo;
    for (const auto& p : nodes) {
      lo = std::fmin(lo, p[0]);
      hi = std::fmax(hi, p[0]);
    }
    center = {0.5 * (lo + hi), 0.0};
  }
  double r = 0;
  for (const auto& p : nodes) r = std::fmax(r, tmpl.distance(center, p));
  return {center, std::fmax(r, 1e-6) * 1.0001};
}

std::vector<Density> grid_marginals(const CurvePlan& eta, int M,
                                    bool* aligned, double* snap_radius) {
  *aligned = true;
  *snap_radius = 0;
  for (const auto& c : eta.curves)
    for (int i = 1; i < M; ++i) {
      double t = static_cast<double>(i) / M;
      bool found = false;
      for (double g : c.grid)
        if (std::fabs(g - t) <= 1e-12) found = true;
      if (!found) *aligned = false;
    }
  std::vector<Density> out;
  for (int i = 0; i <= M; ++i) {
    auto [mass, snap] = plan_marginal(eta, static_cast<double>(i) / M);
    *snap_radius = std::fmax(*snap_radius, snap);
    out.push_back(density_from_masses(eta.space, mass));
  }
  return out;
}

}  // namespace

TransferResult winf_marginal_transfer(const std::vector<Density>& rho,
                                      const SpaceSequence& seq, int term,
                                      Point center, double radius) {
  if (rho.size() < 2) throw std::invalid_argument("transfer: need marginals");
  if (term < 0 || term >= static_cast<int>(seq.terms.size()))
    throw std::invalid_argument("transfer: bad term index");
  for (const auto& r : rho)
    if (r.space.get() != seq.limit.get() && !same_space(*r.space, *seq.limit))
      throw std::invalid_argument(
          "transfer: marginals must live on the sequence's limit space");
  TransferResult out;

  // reduction: restrict both reference measures to (1+eps)B where no point
  // sits on the cell boundary; scan a finite eps grid from the largest down
  double eps_ball = 1.0;
  for (double e = 1.0; e >= 0.049; e -= 0.05) {
    bool boundary_free = true;
    for (const FiniteSpace* sp : {seq.limit.get(), seq.terms[term].get()})
      for (int i = 0; i < sp->size(); ++i)
        if (std::fabs(sp->tmpl.distance(sp->points[i], center) -
                      (1 + e) * radius) < 1e-9)
          boundary_free = false;
    if (boundary_free) {
      eps_ball = e;
      break;
    }
  }
  out.eps_ball = eps_ball;
  auto [rlimit, lmap] = restrict_space(*seq.limit, center, (1 + eps_ball) * radius);
  auto [rtarget, tmap] = restrict_space(*seq.terms[term], center,
                                        (1 + eps_ball) * radius);
  out.reduced_limit = rlimit;
  out.reduced_target = rtarget;

  const int M = static_cast<int>(rho.size()) - 1;
  const int PL = rlimit->size(), PT = rtarget->size();

  // marginals re-expressed on the reduced limit space (masses unchanged)
  std::vector<std::vector<double>> nu(M + 1, std::vector<double>(PL, 0.0));
  std::vector<Density> rho_red;
  for (int i = 0; i <= M; ++i) {
    for (int k = 0; k < PL; ++k) nu[i][k] = rho[i].mass(lmap[k]);
    double tot = std::accumulate(nu[i].begin(), nu[i].end(), 0.0);
    if (std::fabs(tot - 1.0) > 1e-9)
      throw std::invalid_argument("transfer: marginal not supported in ball");
    rho_red.push_back(density_from_masses(rlimit, nu[i]));
    out.sup_before.push_back(rho_red.back().sup_norm());
  }

  // W_2-optimal coupling of the reduced reference measures
  auto alpha =
      optimal_coupling_q(uniform_density(rlimit), uniform_density(rtarget), 2.0);
  out.eps_n = std::sqrt(alpha.value);
  const double eps_n = std::fmax(out.eps_n, 1e-12);

  // per-x fraction of coupling mass staying within eps_n, and the near-
  // diagonal sub-coupling itself
  std::vector<double> cutfrac(PL, 0.0);
  std::vector<std::vector<double>> near(PL, std::vector<double>(PT, 0.0));
  for (const auto& e : alpha.coupling.entries) {
    double d = rlimit->tmpl.distance(rlimit->points[e.i], rtarget->points[e.j]);
    if (d <= eps_n + 1e-15) {
      near[e.i][e.j] += e.mass;
      cutfrac[e.i] += e.mass;
    }
  }
  for (int x = 0; x < PL; ++x)
    if (rlimit->weights[x] > 0) cutfrac[x] /= rlimit->weights[x];

  // W_inf-optimal legs between consecutive reduced marginals
  std::vector<std::vector<CouplingEntry>> legs(M);
  for (int i = 0; i < M; ++i) {
    auto w = winf(rho_red[i], rho_red[i + 1]);
    out.winf_before.push_back(w.value);
    legs[i] = w.coupling.entries;
  }

  // claim-1 induction: cut marginal k-1 by the near-diagonal fraction, then
  // rebalance forward by first-endpoint ratios and backward by second ones
  for (int step = 1; step <= M + 1; ++step) {
    const int g = step - 1;
    const auto old_nu = nu;
    for (int x = 0; x < PL; ++x) nu[g][x] *= cutfrac[x];
    for (int i = g; i < M; ++i) {
      for (auto& e : legs[i])
        e.mass = old_nu[i][e.i] > 0 ? e.mass * nu[i][e.i] / old_nu[i][e.i] : 0;
      std::fill(nu[i + 1].begin(), nu[i + 1].end(), 0.0);
      for (const auto& e : legs[i]) nu[i + 1][e.j] += e.mass;
    }
    for (int i = g - 1; i >= 0; --i) {
      for (auto& e : legs[i])
        e.mass = old_nu[i + 1][e.j] > 0
                     ? e.mass * nu[i + 1][e.j] / old_nu[i + 1][e.j]
                     : 0;
      std::fill(nu[i].begin(), nu[i].end(), 0.0);
      for (const auto& e : legs[i]) nu[i][e.i] += e.mass;
    }
  }
  for (auto& v : nu)
    for (double& x : v) x = std::fmax(x, 0.0);  // scrub fp noise
  double retained = std::accumulate(nu[0].begin(), nu[0].end(), 0.0);
  if (retained <= 1e-12)
    throw std::runtime_error(
        "transfer: no mass within the near-diagonal set (eps_n too small "
        "for the pitch)");
  out.c_n = std::fmax(1.0 - retained, 0.0);
  double supsum = 0;
  for (double s : out.sup_before) supsum += s;
  out.c_n_bound = eps_n * eps_n * supsum;

  // assemble: transported near-diagonal mass plus the uniform spread
  for (int i = 0; i <= M; ++i) {
    std::vector<double> mass(PT, 0.0);
    for (int x = 0; x < PL; ++x) {
      if (nu[i][x] <= 0) continue;
      double denom = cutfrac[x] * rlimit->weights[x];
      for (int y = 0; y < PT; ++y)
        if (near[x][y] > 0) mass[y] += nu[i][x] * near[x][y] / denom;
    }
    for (int y = 0; y < PT; ++y) mass[y] += out.c_n * rtarget->weights[y];
    out.densities.push_back(density_from_masses(rtarget, mass, true));
    out.sup_after.push_back(out.densities.back().sup_norm());
  }
  for (int i = 0; i < M; ++i)
    out.winf_after.push_back(
        winf(out.densities[i], out.densities[i + 1]).value);
  return out;
}

namespace {

// Rebuilds corrected per-leg curve plans from the correction output.
std::vector<CurvePlan> corrected_legs(const std::vector<CurvePlan>& lifts,
                                      const CorrectionResult<double>& corr) {
  std::vector<CurvePlan> out;
  for (size_t i = 0; i < lifts.size(); ++i) {
    std::vector<DiscreteCurve> cs;
    std::vector<double> ms;
    for (size_t e = 0; e < corr.legs[i].mass.size(); ++e) {
      if (corr.legs[i].mass[e] <= 1e-15) continue;
      cs.push_back(lifts[i].curves[e]);
      ms.push_back(corr.legs[i].mass[e]);
    }
    double tot = std::accumulate(ms.begin(), ms.end(), 0.0);
    for (double& m : ms) m /= tot;
    out.push_back(make_plan(lifts[i].space, std::move(cs), std::move(ms)));
  }
  return out;
}

std::vector<double> uniform_grid(int M) {
  std::vector<double> g;
  for (int i = 0; i <= M; ++i) g.push_back(static_cast<double>(i) / M);
  return g;
}

}  // namespace

PolygonalBuild build_polygonal_q(const CurvePlan& eta, const SpaceSequence& seq,
                                 int term, int M, double q, Regime regime,
                                 const BuildParams& params) {
  if (term < 0 || term >= static_cast<int>(seq.terms.size()))
    throw std::invalid_argument("build: bad term index");
  if (M < 1) throw std::invalid_argument("build: M must be positive");
  if (!(q > 1) || std::isinf(q))
    throw std::invalid_argument("build: q must be finite and exceed 1");
  if (eta.space.get() != seq.limit.get() && !same_space(*eta.space, *seq.limit))
    throw std::invalid_argument(
        "build: eta must live on the sequence's limit space");

  PolygonalBuild b;
  b.M = M;
  b.q = q;
  b.regime = regime;
  b.ke_eta = ke_q(eta, q);
  b.lip_eta = lip_const(eta);
  b.comp_eta = compression(eta, params.interior_samples).comp;

  bool aligned = true;
  auto rho = grid_marginals(eta, M, &aligned, &b.eta_snap_radius);
  if (!aligned) {
    b.feasible = false;
    b.note = "eta grid does not contain the uniform M-grid";
    return b;
  }

  // Jensen chain on the limit space
  b.jensen_lhs = 0;
  for (int i = 0; i < M; ++i)
    b.jensen_lhs += std::pow(optimal_coupling_q(rho[i], rho[i + 1], q).value, q);
  b.jensen_rhs = std::pow(static_cast<double>(M), 1.0 - q) * b.ke_eta;

  auto ball = support_ball(eta);
  SpacePtr target = seq.terms[term];

  std::vector<Density> rho_n;
  for (int i = 0; i <= M; ++i)
    rho_n.push_back(approx_density(rho[i], target, ball.center, ball.radius));

  std::vector<CurvePlan> lifts;
  std::vector<TransportResult> solves;
  for (int i = 0; i < M; ++i) {
    solves.push_back(optimal_coupling_q(rho_n[i], rho_n[i + 1], q));
    lifts.push_back(lift_to_dynamical(solves.back(), params.lift_steps));
  }

  // gates (skipped entirely in the nonnegative-curvature regime)
  std::vector<std::vector<char>> gates(M);
  std::vector<GateResult> gate_results(M);
  for (int i = 0; i < M; ++i) {
    if (regime == Regime::cd_nonneg) {
      gates[i].assign(lifts[i].size(), 1);
      gate_results[i].discarded_mass = 0;
      gate_results[i].mass_bound =
          std::pow(solves[i].value, (q + 1) / 2);
    } else {
      gate_results[i] = chebyshev_gate(lifts[i], q, solves[i].value);
      gates[i].resize(lifts[i].size());
      for (int e = 0; e < lifts[i].size(); ++e)
        gates[i][e] = gate_results[i].indicator[e] > 0.5 ? 1 : 0;
    }
  }

  // correction inputs: endpoint masses and leg entries from the lifts
  const int P = target->size();
  std::vector<std::vector<double>> pm(M + 1, std::vector<double>(P, 0.0));
  for (int i = 0; i <= M; ++i)
    for (int x = 0; x < P; ++x) pm[i][x] = rho_n[i].mass(x);
  std::vector<MarkovLeg<double>> mlegs(M);
  std::vector<std::vector<double>> costs(M);
  for (int i = 0; i < M; ++i) {
    for (int e = 0; e < lifts[i].size(); ++e) {
      int a = target->nearest(lifts[i].curves[e].nodes.front());
      int bdx = target->nearest(lifts[i].curves[e].nodes.back());
      mlegs[i].src.push_back(a);
      mlegs[i].dst.push_back(bdx);
      mlegs[i].mass.push_back(lifts[i].masses[e]);
      costs[i].push_back(std::pow(target->dist[a][bdx], q));
    }
  }

  CorrectionResult<double> corr;
  try {
    corr = submarginal_correction<double>(pm, mlegs, gates, &target->weights,
                                          &costs);
  } catch (const CorrectionHypothesisError& err) {
    b.feasible = false;
    b.note = err.what();
    for (int i = 0; i < M; ++i) b.sigma += gate_results[i].discarded_mass;
    return b;
  }
  b.sigma = corr.sigma;
  for (const auto& chk : corr.l1_bound) b.endpoint_l1_shift.push_back(chk.lhs);

  auto legs = corrected_legs(lifts, corr);
  b.result = glue(legs, uniform_grid(M));

  b.ke_result = ke_q(b.result, q);
  b.lip_result = lip_const(b.result);
  auto comp_rep = compression(b.result, params.interior_samples);
  b.comp_result = comp_rep.comp;
  b.snap_radius = comp_rep.snap_radius;

  double wq_sum = 0, wq_max = 0;
  for (int i = 0; i < M; ++i) {
    LegDiagnostics ld;
    ld.wq = solves[i].value;
    ld.discarded = gate_results[i].discarded_mass;
    ld.gate_bound = gate_results[i].mass_bound;
    ld.ke = ke_q(legs[i], q);
    ld.lip = lip_const(legs[i]);
    b.legs.push_back(ld);
    wq_sum += std::pow(ld.wq, q);
    wq_max = std::fmax(wq_max, ld.wq);
  }
  b.kechain_lhs = b.ke_result;
  b.kechain_rhs =
      std::pow(static_cast<double>(M), q - 1) / (1.0 - b.sigma) * wq_sum;

  b.base_sup = 0;
  for (int i = 0; i <= M; ++i) {
    double sup = 0;
    for (int x = 0; x < P; ++x)
      if (target->weights[x] > 0)
        sup = std::fmax(sup, corr.point_masses[i][x] / target->weights[x]);
    b.base_sup = std::fmax(b.base_sup, sup);
  }
  // curves surviving the gate have d <= W_q^{(q-1)/(2q)}; that Lipschitz
  // bound is the scale entering the regime certificate
  double scale = std::pow(wq_max, (q - 1) / (2 * q));
  if (regime == Regime::mcp) {
    b.certificate = mcp_bound(params.K, params.N, scale, b.base_sup);
  } else {
    b.certificate = cd_infty_bound(params.K, scale, b.base_sup);
  }
  b.cert_factor = b.base_sup > 0 ? b.certificate.value / b.base_sup : 1.0;
  return b;
}

PolygonalBuild build_polygonal_inf(const CurvePlan& eta,
                                   const SpaceSequence& seq, int term, int M,
                                   Regime regime,
                                   const std::vector<double>& q_schedule,
                                   const BuildParams& params) {
  if (M < 1) throw std::invalid_argument("build: M must be positive");
  if (eta.space.get() != seq.limit.get() && !same_space(*eta.space, *seq.limit))
    throw std::invalid_argument(
        "build: eta must live on the sequence's limit space");
  if (q_schedule.empty())
    throw std::invalid_argument("build: empty q-schedule");
  for (size_t k = 0; k < q_schedule.size(); ++k)
    if (q_schedule[k] <= 1 || (k > 0 && q_schedule[k] <= q_schedule[k - 1]))
      throw std::invalid_argument("build: bad q-schedule");
  PolygonalBuild b;
  b.M = M;
  b.q = std::numeric_limits<double>::infinity();
  b.regime = regime;
  b.lip_eta = lip_const(eta);
  b.comp_eta = compression(eta, params.interior_samples).comp;

  bool aligned = true;
  auto rho = grid_marginals(eta, M, &aligned, &b.eta_snap_radius);
  if (!aligned) {
    b.feasible = false;
    b.note = "eta grid does not contain the uniform M-grid";
    return b;
  }
  auto ball = support_ball(eta);
  TransferResult transfer;
  try {
    transfer = winf_marginal_transfer(rho, seq, term, ball.center, ball.radius);
  } catch (const std::runtime_error& err) {
    b.feasible = false;
    b.note = err.what();
    return b;
  }

  // per-leg construction at the schedule tail: q_last-optimal lift gated to
  // curves no longer than W_inf + eps. The restrictions shift the endpoint
  // marginals, so the legs are re-balanced by the submarginal correction
  // before gluing, which restores exact junction compatibility.
  const double q_last = q_schedule.back();
  SpacePtr target = transfer.reduced_target;
  const int P = target->size();
  std::vector<CurvePlan> lifts;
  std::vector<std::vector<char>> gates(M);
  std::vector<double> discarded(M, 0.0), winf_leg(M, 0.0);
  double wmax = 0;
  for (int i = 0; i < M; ++i) {
    winf_leg[i] = winf(transfer.densities[i], transfer.densities[i + 1]).value;
    auto res = optimal_coupling_q(transfer.densities[i],
                                  transfer.densities[i + 1], q_last);
    lifts.push_back(lift_to_dynamical(res, params.lift_steps));
    double eps = winf_leg[i] * (std::pow(q_last, 1.0 / q_last) - 1.0);
    double gate_len = winf_leg[i] + eps;
    wmax = std::fmax(wmax, gate_len);
    gates[i].resize(lifts[i].size());
    for (int e = 0; e < lifts[i].size(); ++e) {
      double d = target->tmpl.distance(lifts[i].curves[e].nodes.front(),
                                       lifts[i].curves[e].nodes.back());
      bool keep = d <= gate_len + 1e-12;
      gates[i][e] = keep ? 1 : 0;
      if (!keep) discarded[i] += lifts[i].masses[e];
    }
  }

  std::vector<std::vector<double>> pm(M + 1, std::vector<double>(P, 0.0));
  for (int i = 0; i <= M; ++i)
    for (int x = 0; x < P; ++x) pm[i][x] = transfer.densities[i].mass(x);
  std::vector<MarkovLeg<double>> mlegs(M);
  for (int i = 0; i < M; ++i)
    for (int e = 0; e < lifts[i].size(); ++e) {
      mlegs[i].src.push_back(target->nearest(lifts[i].curves[e].nodes.front()));
      mlegs[i].dst.push_back(target->nearest(lifts[i].curves[e].nodes.back()));
      mlegs[i].mass.push_back(lifts[i].masses[e]);
    }
  CorrectionResult<double> corr;
  try {
    corr = submarginal_correction<double>(pm, mlegs, gates);
  } catch (const CorrectionHypothesisError& err) {
    b.feasible = false;
    b.note = err.what();
    for (int i = 0; i < M; ++i) b.sigma += discarded[i];
    return b;
  }
  b.sigma = corr.sigma;
  auto legs = corrected_legs(lifts, corr);
  for (int i = 0; i < M; ++i) {
    LegDiagnostics ld;
    ld.wq = winf_leg[i];
    ld.lip = lip_const(legs[i]);
    ld.discarded = discarded[i];
    ld.gate_bound = 1.0 / q_last;
    b.legs.push_back(ld);
  }
  b.result = glue(legs, uniform_grid(M));
  b.lip_result = lip_const(b.result);
  b.ke_result = 0;
  auto comp_rep = compression(b.result, params.interior_samples);
  b.comp_result = comp_rep.comp;
  b.snap_radius = comp_rep.snap_radius;
  b.base_sup = 0;
  for (double s : transfer.sup_after) b.base_sup = std::fmax(b.base_sup, s);

  if (regime == Regime::mcp) {
    b.certificate = mcp_bound(params.K, params.N, wmax, b.base_sup);
    b.cert_factor =
        std::pow(2.0, params.N) *
        (b.lip_eta > 0
             ? c_kn(std::fmin(params.K, 0.0), params.N, b.lip_eta / M)
             : 1.0);
  } else {
    b.certificate = cd_infty_bound(params.K, wmax, b.base_sup);
    double kneg = std::fmax(-params.K, 0.0);
    b.cert_factor = std::exp(kneg / 12.0 * b.lip_eta * b.lip_eta / (M * M));
  }
  return b;
}

ConvexityReport check_cd_convexity(const CurvePlan& plan, double K, double q,
                                   const std::vector<double>& t_samples) {
  ConvexityReport rep;
  auto [m0, s0] = plan_marginal(plan, 0.0);
  auto [m1, s1] = plan_marginal(plan, 1.0);
  auto mu0 = density_from_masses(plan.space, m0);
  auto mu1 = density_from_masses(plan.space, m1);
  rep.wq = optimal_coupling_q(mu0, mu1, q).value;
  double e0 = entropy(mu0), e1 = entropy(mu1);
  rep.max_residual = -std::numeric_limits<double>::infinity();
  for (double t : t_samples) {
    auto [mt, st] = plan_marginal(plan, t);
    double lhs = entropy(density_from_masses(plan.space, mt));
    double rhs = (1 - t) * e0 + t * e1 - K / 2 * t * (1 - t) * rep.wq * rep.wq;
    rep.rows.push_back({t, lhs, rhs, lhs - rhs});
    rep.max_residual = std::fmax(rep.max_residual, lhs - rhs);
  }
  if (rep.rows.empty()) rep.max_residual = 0;
  return rep;
}

ConvexityReport check_mcp_inequality(const Density& mu0, int o, double K,
                                     double N,
                                     const std::vector<double>& t_samples) {
  ConvexityReport rep;
  SpacePtr sp = mu0.space;
  if (o < 0 || o >= sp->size() || sp->weights[o] <= 0)
    throw std::invalid_argument("mcp check: o outside the support of m");
  if (mu0.mass(o) >= 1.0 - 1e-12) {
    rep.degenerate = true;
    rep.note = "mu0 is the contraction target; zero-length geodesics";
    return rep;
  }
  // contraction plan: one geodesic toward o per charged point
  std::vector<DiscreteCurve> curves;
  std::vector<double> masses;
  for (int i = 0; i < sp->size(); ++i) {
    double m = mu0.mass(i);
    if (m <= 0) continue;
    DiscreteCurve c;
    const int steps = 16;
    for (int k = 0; k <= steps; ++k) {
      double t = static_cast<double>(k) / steps;
      c.grid.push_back(t);
      c.nodes.push_back(
          sp->tmpl.geodesic_point(sp->points[i], sp->points[o], t));
    }
    curves.push_back(std::move(c));
    masses.push_back(m);
  }
  CurvePlan plan = make_plan(sp, std::move(curves), std::move(masses));
  rep.max_residual = -std::numeric_limits<double>::infinity();
  for (double t : t_samples) {
    if (t >= 1.0 - 1e-12) continue;  // the inequality is stated on [0,1)
    auto [mt, st] = plan_marginal(plan, t);
    double lhs = renyi(density_from_masses(sp, mt), N);
    // rhs = int tau^{(1-t)}(d(x,o)) rho_0^{1-1/N} dm
    double rhs = 0;
    for (int i = 0; i < sp->size(); ++i) {
      double rho0 = mu0.values[i];
      if (rho0 <= 0 || sp->weights[i] <= 0) continue;
      double coeff = tau(K, N, 1 - t, sp->dist[i][o]);
      if (std::isinf(coeff)) {
        rhs = std::numeric_limits<double>::infinity();
        break;
      }
      rhs += coeff * std::pow(rho0, 1.0 - 1.0 / N) * sp->weights[i];
    }
    rep.rows.push_back({t, lhs, rhs, rhs - lhs});
    rep.max_residual = std::fmax(rep.max_residual, rhs - lhs);
  }
  if (rep.rows.empty()) rep.max_residual = 0;
  return rep;
}

}  // namespace mms
