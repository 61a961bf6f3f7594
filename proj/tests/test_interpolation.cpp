#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "correction_oracle.hpp"
#include "mms/harness.hpp"
#include "mms/interpolation.hpp"

using namespace mms;
using oracle::Rat;

namespace {

const GeodesicTemplate kSeg{TemplateKind::segment, {1.0, 0.0}};

MeasureSpec uniform_spec() {
  return [](const Point&) { return 1.0; };
}

DiscreteCurve line(double a, double b, int steps = 8) {
  DiscreteCurve c;
  for (int k = 0; k <= steps; ++k) {
    double t = static_cast<double>(k) / steps;
    c.grid.push_back(t);
    c.nodes.push_back({a + t * (b - a), 0.0});
  }
  return c;
}

}  // namespace

TEST_CASE("entropy and renyi basics") {
  auto sp = discretize(kSeg, 4, uniform_spec());
  auto u = uniform_density(sp);
  CHECK(entropy(u) == doctest::Approx(0.0));
  CHECK(renyi(u, 3.0) == doctest::Approx(1.0));

  auto two = make_space(kSeg, {{0, 0}, {1, 0}}, {0.5, 0.5});
  auto conc = density_from_masses(two, {1.0, 0.0});
  CHECK(entropy(conc) == doctest::Approx(std::log(2.0)));
  for (double N : {2.0, 5.0}) {
    auto un = uniform_density(discretize(kSeg, 7, uniform_spec()));
    CHECK(renyi(un, N) == doctest::Approx(1.0));
  }
}

TEST_CASE("chebyshev gate bound on optimal legs") {
  std::mt19937_64 rng(51);
  auto sp = discretize(kSeg, 10, uniform_spec());
  for (int trial = 0; trial < 20; ++trial) {
    auto ma = oracle::random_marginal(rng, 3, 8);
    auto mb = oracle::random_marginal(rng, 3, 8);
    std::vector<double> m0(sp->size(), 0.0), m1(sp->size(), 0.0);
    for (int k = 0; k < 3; ++k) {
      m0[oracle::uniform_int(rng, 0, 9)] += ma.units[k] / 8.0;
      m1[oracle::uniform_int(rng, 0, 9)] += mb.units[k] / 8.0;
    }
    double q = 2.0 + (trial % 2);
    auto res = optimal_coupling_q(density_from_masses(sp, m0),
                                  density_from_masses(sp, m1), q);
    auto lift = lift_to_dynamical(res, 8);
    auto gate = chebyshev_gate(lift, q, res.value);
    CHECK(gate.discarded_mass <= gate.mass_bound + 1e-12);
    if (res.value <= 1e-12) CHECK(gate.discarded_mass == doctest::Approx(0.0));
  }
  // a full drop can only happen when the mass bound already allows it
  auto spd = make_space(kSeg, {{0, 0}, {1, 0}}, {0.5, 0.5});
  auto dirac = lift_to_dynamical(
      optimal_coupling_q(dirac_density(spd, 0), dirac_density(spd, 1), 2.0), 4);
  auto g = chebyshev_gate(dirac, 2.0, 1.0);
  if (g.discarded_mass >= 1.0) CHECK(g.mass_bound >= 1.0);
}

TEST_CASE("approx_density identity and refinement") {
  auto limit = discretize(kSeg, 32, uniform_spec());
  std::vector<double> mass(limit->size(), 0.0);
  for (int i = 0; i < limit->size(); ++i)
    if (limit->points[i][0] <= 0.5) mass[i] = limit->weights[i];
  auto rho = density_from_masses(limit, mass, true);

  auto same = approx_density(rho, limit, {0.25, 0}, 0.27);
  for (int i = 0; i < limit->size(); ++i)
    CHECK(same.values[i] == doctest::Approx(rho.values[i]).epsilon(1e-9));

  for (int n : {8, 16, 64}) {
    auto target = discretize(kSeg, n, uniform_spec());
    auto out = approx_density(rho, target, {0.25, 0}, 0.27);
    CHECK(out.total() == doctest::Approx(1.0));
    // flat transfer up to support-boundary cells
    CHECK(out.sup_norm() <= 2.0 / (1.0 - 8.0 / n) + 1e-9);
    for (int i = 0; i < target->size(); ++i)
      if (out.values[i] > 0)
        CHECK(target->tmpl.distance(target->points[i], {0.25, 0}) <=
              2 * 0.27 + 1e-12);
  }

  auto d = dirac_density(limit, 7);
  auto target = discretize(kSeg, 8, uniform_spec());
  auto out = approx_density(d, target, limit->points[7], 0.1);
  int snap = target->nearest(limit->points[7]);
  CHECK(out.mass(snap) == doctest::Approx(1.0));

  CHECK_THROWS(approx_density(rho, target, {0.9, 0}, 0.05));
}

TEST_CASE("submarginal correction: trivial and forced cases") {
  std::vector<std::vector<double>> pm{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
  MarkovLeg<double> leg;
  leg.src = {0, 1};
  leg.dst = {1, 2};
  leg.mass = {0.5, 0.5};
  auto res = submarginal_correction<double>(pm, {leg}, {{1, 1}});
  CHECK(res.sigma == doctest::Approx(0.0));
  CHECK(res.gates_clean);
  for (int i = 0; i < 2; ++i)
    for (int x = 0; x < 3; ++x)
      CHECK(res.point_masses[i][x] == doctest::Approx(pm[i][x]));

  // M = 1, gate kills one of two half-mass curves: bound (c) is tight
  auto res2 = submarginal_correction<double>(pm, {leg}, {{1, 0}});
  CHECK(res2.retained == doctest::Approx(0.5));
  CHECK(res2.legs[0].mass[0] == doctest::Approx(1.0));
  CHECK(res2.legs[0].mass[1] == doctest::Approx(0.0));
  CHECK(res2.l1_bound[0].lhs == doctest::Approx(1.0));
  CHECK(res2.l1_bound[0].rhs == doctest::Approx(1.0));
  CHECK(res2.l1_bound[0].holds);

  CHECK_THROWS_AS(submarginal_correction<double>(pm, {leg}, {{0, 0}}),
                  CorrectionHypothesisError);

  std::vector<std::vector<double>> bad = pm;
  bad[1][1] = 0.25;
  bad[1][2] = 0.75;
  CHECK_THROWS_AS(submarginal_correction<double>(bad, {leg}, {{1, 1}}),
                  std::invalid_argument);
}

TEST_CASE("submarginal correction matches the path-enumeration oracle") {
  std::mt19937_64 rng(61);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = oracle::random_correction_instance(rng, 5, 3, 3);
    auto want = oracle::path_enumeration_correction(inst);
    if (!want.feasible) continue;
    CorrectionResult<Rat> got;
    try {
      got = submarginal_correction<Rat>(inst.marginals, inst.legs, inst.gates);
    } catch (const std::runtime_error&) {
      continue;
    }
    ++checked;
    CHECK(got.sigma == inst.sigma);
    CHECK(got.gates_clean);
    CHECK(got.retained == want.retained);
    for (size_t i = 0; i < want.point_masses.size(); ++i)
      for (int x = 0; x < inst.points; ++x)
        CHECK(got.point_masses[i][x] == want.point_masses[i][x]);
    for (size_t l = 0; l < want.legs.size(); ++l)
      for (size_t e = 0; e < want.legs[l].mass.size(); ++e)
        CHECK(got.legs[l].mass[e] == want.legs[l].mass[e]);
    // conclusions (b), (c), (d), exactly (uniform weights, |i-j|^2 costs)
    std::vector<Rat> weights(inst.points, Rat(1, inst.points));
    std::vector<std::vector<Rat>> costs;
    for (const auto& mleg : inst.legs) {
      std::vector<Rat> c;
      for (size_t e = 0; e < mleg.mass.size(); ++e) {
        long long dx = mleg.dst[e] - mleg.src[e];
        c.push_back(Rat(dx * dx));
      }
      costs.push_back(std::move(c));
    }
    auto full = submarginal_correction<Rat>(inst.marginals, inst.legs,
                                            inst.gates, &weights, &costs);
    for (const auto& chk : full.sup_bound) CHECK(chk.holds);
    for (const auto& chk : full.l1_bound) CHECK(chk.holds);
    for (const auto& chk : full.ke_bound) CHECK(chk.holds);
  }
  CHECK(checked >= 30);
}

TEST_CASE("submarginal correction float mode meets the bounds at 1e-9") {
  std::mt19937_64 rng(67);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = oracle::random_correction_instance(rng, 6, 4, 3);
    // convert the exact instance to doubles
    std::vector<std::vector<double>> pm;
    for (const auto& v : inst.marginals) {
      std::vector<double> row;
      for (const auto& x : v) row.push_back(static_cast<double>(x));
      pm.push_back(std::move(row));
    }
    std::vector<MarkovLeg<double>> legs;
    std::vector<std::vector<double>> costs;
    for (const auto& leg : inst.legs) {
      MarkovLeg<double> l;
      l.src = leg.src;
      l.dst = leg.dst;
      std::vector<double> c;
      for (size_t e = 0; e < leg.mass.size(); ++e) {
        l.mass.push_back(static_cast<double>(leg.mass[e]));
        double dx = leg.dst[e] - leg.src[e];
        c.push_back(dx * dx);
      }
      legs.push_back(std::move(l));
      costs.push_back(std::move(c));
    }
    std::vector<double> weights(inst.points, 1.0 / inst.points);
    CorrectionResult<double> res;
    try {
      res = submarginal_correction<double>(pm, legs, inst.gates, &weights,
                                           &costs);
    } catch (const std::runtime_error&) {
      continue;
    }
    ++checked;
    CHECK(res.gates_clean);
    for (const auto& chk : res.sup_bound) CHECK(chk.lhs <= chk.rhs + 1e-9);
    for (const auto& chk : res.l1_bound) CHECK(chk.lhs <= chk.rhs + 1e-9);
    for (const auto& chk : res.ke_bound) CHECK(chk.lhs <= chk.rhs + 1e-9);
  }
  CHECK(checked >= 20);
}

TEST_CASE("winf marginal transfer: identity and inflation bounds") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32}, 32, uniform_spec());

  auto bump = [&](SpacePtr sp, double c, double w) {
    std::vector<double> m(sp->size(), 0.0);
    for (int i = 0; i < sp->size(); ++i) {
      double v = std::fmax(0.0, 1.0 - std::fabs(sp->points[i][0] - c) / w);
      m[i] = v * sp->weights[i];
    }
    return density_from_masses(sp, m, true);
  };
  std::vector<Density> rho{bump(seq.limit, 0.3, 0.1), bump(seq.limit, 0.4, 0.1),
                           bump(seq.limit, 0.5, 0.1)};

  // term 2 is the limit space itself: identity transfer
  auto id = winf_marginal_transfer(rho, seq, 2, {0.4, 0}, 0.35);
  CHECK(id.c_n == doctest::Approx(0.0).epsilon(1e-9));
  for (size_t i = 0; i + 1 < rho.size(); ++i)
    CHECK(id.winf_after[i] <= id.winf_before[i] + 2 * id.eps_n + 1e-9);

  for (int term : {0, 1}) {
    auto tr = winf_marginal_transfer(rho, seq, term, {0.4, 0}, 0.35);
    CHECK(tr.c_n <= tr.c_n_bound + 1e-9);
    for (size_t i = 0; i + 1 < rho.size(); ++i)
      CHECK(tr.winf_after[i] <= tr.winf_before[i] + 2 * tr.eps_n + 1e-9);
    for (size_t i = 0; i < rho.size(); ++i)
      CHECK(tr.sup_after[i] <= tr.sup_before[i] + tr.c_n + 1e-9);
    for (const auto& d : tr.densities) CHECK(d.total() == doctest::Approx(1.0));
  }
}

TEST_CASE("polygonal q-build on the identity term preserves a dirac geodesic") {
  auto seq = make_refining_sequence(kSeg, {16, 32}, 32, uniform_spec());
  auto eta = make_plan(
      seq.limit,
      {line(seq.limit->points[4][0], seq.limit->points[20][0], 8)}, {1.0});
  auto b = build_polygonal_q(eta, seq, 1, 1, 2.0, Regime::cd_nonneg);
  REQUIRE(b.feasible);
  CHECK(b.ke_result == doctest::Approx(b.ke_eta).epsilon(1e-9));
  CHECK(b.sigma == doctest::Approx(0.0));
  CHECK(b.jensen_lhs <= b.jensen_rhs + 1e-9);
  CHECK(b.kechain_lhs <= b.kechain_rhs + 1e-9);
}

TEST_CASE("polygonal q-build chain inequalities across regimes") {
  auto seq = make_refining_sequence(kSeg, {16, 32}, 64, uniform_spec());
  auto corpus = make_plan_corpus(seq.limit, 7, 3, 8);
  BuildParams params;
  params.K = -1.0;
  params.N = 2.0;
  for (const auto& cp : corpus) {
    for (int M : {1, 2, 4}) {
      for (auto regime : {Regime::cd_nonneg, Regime::cd_general, Regime::mcp}) {
        auto b = build_polygonal_q(cp.plan, seq, 1, M, 2.0, regime, params);
        if (!b.feasible) continue;
        CHECK(b.jensen_lhs <= b.jensen_rhs + 1e-8);
        CHECK(b.kechain_lhs <= b.kechain_rhs + 1e-8);
        for (const auto& leg : b.legs)
          CHECK(leg.discarded <= leg.gate_bound + 1e-8);
        CHECK(b.certificate.value >= b.base_sup - 1e-12);
        auto [m0, s0] = plan_marginal(b.result, 0.0);
        double tot = 0;
        for (double m : m0) tot += m;
        CHECK(tot == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("polygonal infinity build diagnostics") {
  auto seq = make_refining_sequence(kSeg, {16, 32}, 32, uniform_spec());
  auto corpus = make_plan_corpus(seq.limit, 9, 2, 8);
  BuildParams params;
  params.K = -1.0;
  params.N = 2.0;
  for (const auto& cp : corpus) {
    for (int M : {1, 2}) {
      for (auto regime : {Regime::cd_nonneg, Regime::mcp}) {
        auto b =
            build_polygonal_inf(cp.plan, seq, 0, M, regime, {2, 4, 8}, params);
        if (!b.feasible) continue;
        double max_leg = 0;
        for (const auto& leg : b.legs) max_leg = std::fmax(max_leg, leg.lip);
        CHECK(b.lip_result <= M * max_leg + 1e-9);
        for (const auto& leg : b.legs)
          CHECK(leg.discarded <= leg.gate_bound + 1e-12);
        CHECK(b.cert_factor >= 1.0 - 1e-12);
      }
    }
  }

  auto eta = make_plan(
      seq.limit, {line(seq.limit->points[2][0], seq.limit->points[12][0], 8)},
      {1.0});
  auto b = build_polygonal_inf(eta, seq, 1, 1, Regime::cd_nonneg, {2, 4, 8});
  REQUIRE(b.feasible);
  double d =
      seq.limit->tmpl.distance(seq.limit->points[2], seq.limit->points[12]);
  CHECK(b.lip_result == doctest::Approx(d).epsilon(1e-6));
}

TEST_CASE("cd convexity checker") {
  auto sp = discretize(kSeg, 16, uniform_spec());
  std::vector<DiscreteCurve> cs;
  std::vector<double> ms;
  for (int i = 0; i < sp->size(); ++i) {
    DiscreteCurve c;
    c.grid = {0, 1};
    c.nodes = {sp->points[i], sp->points[i]};
    cs.push_back(c);
    ms.push_back(sp->weights[i]);
  }
  auto constant = make_plan(sp, cs, ms);
  auto rep = check_cd_convexity(constant, -1.0, 2.0, {0.25, 0.5, 0.75});
  CHECK(rep.max_residual <= 1e-9);

  double prev = 1e9;
  for (int n : {32, 64, 128}) {
    auto spn = discretize(kSeg, n, uniform_spec());
    std::vector<double> m0(spn->size(), 0.0), m1(spn->size(), 0.0);
    for (int i = 0; i < spn->size(); ++i) {
      double x = spn->points[i][0];
      if (x < 0.5 - 1e-12) m0[i] = spn->weights[i];
      if (x >= 0.5 - 1e-12) m1[i] = spn->weights[i];
    }
    auto res = optimal_coupling_q(density_from_masses(spn, m0, true),
                                  density_from_masses(spn, m1, true), 2.0);
    auto plan = lift_to_dynamical(res, 8);
    auto r = check_cd_convexity(plan, 0.0, 2.0, {0.5});
    CHECK(r.max_residual <= prev + 1e-9);
    prev = r.max_residual;
  }
}

TEST_CASE("mcp inequality checker") {
  auto sp = discretize(kSeg, 32, uniform_spec());
  std::vector<double> m(sp->size(), 0.0);
  for (int i = 0; i < sp->size(); ++i)
    if (sp->points[i][0] <= 0.5) m[i] = sp->weights[i];
  auto mu0 = density_from_masses(sp, m, true);

  auto rep = check_mcp_inequality(mu0, sp->size() - 1, 0.0, 2.0, {0.0, 0.25});
  REQUIRE(!rep.rows.empty());
  CHECK(rep.rows[0].lhs == doctest::Approx(rep.rows[0].rhs).epsilon(1e-9));

  auto d = check_mcp_inequality(dirac_density(sp, 3), 3, 0.0, 2.0, {0.5});
  CHECK(d.degenerate);

  CHECK_THROWS(check_mcp_inequality(mu0, -1, 0.0, 2.0, {0.5}));
}
