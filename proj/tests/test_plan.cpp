#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mms/plan.hpp"
#include "oracles.hpp"

using namespace mms;

namespace {

const GeodesicTemplate kSeg{TemplateKind::segment, {1.0, 0.0}};

SpacePtr three_point_space() {
  return make_space(kSeg, {{0, 0}, {0.5, 0}, {1, 0}}, {1. / 3, 1. / 3, 1. / 3});
}

DiscreteCurve line(double a, double b, int steps = 1) {
  DiscreteCurve c;
  for (int k = 0; k <= steps; ++k) {
    double t = static_cast<double>(k) / steps;
    c.grid.push_back(t);
    c.nodes.push_back({a + t * (b - a), 0.0});
  }
  return c;
}

CurvePlan random_edge_plan(SpacePtr sp, std::mt19937_64& rng, int curves,
                           int legs) {
  std::vector<DiscreteCurve> cs;
  std::vector<double> ms;
  const int n = sp->size();
  for (int c = 0; c < curves; ++c) {
    DiscreteCurve cur;
    int at = oracle::uniform_int(rng, 0, n - 1);
    for (int k = 0; k <= legs; ++k) {
      cur.grid.push_back(static_cast<double>(k) / legs);
      cur.nodes.push_back(sp->points[at]);
      int step = oracle::uniform_int(rng, -1, 1);
      at = std::clamp(at + step, 0, n - 1);
    }
    cs.push_back(cur);
    ms.push_back(0.1 + oracle::uniform01(rng));
  }
  double tot = 0;
  for (double m : ms) tot += m;
  for (double& m : ms) m /= tot;
  return make_plan(sp, cs, ms);
}

}  // namespace

TEST_CASE("metric speed per leg") {
  auto sp = three_point_space();
  CurvePlan unitgeo = make_plan(sp, {line(0, 1)}, {1.0});
  auto segs = metric_speed(kSeg, unitgeo.curves[0]);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].speed == doctest::Approx(1.0));

  DiscreteCurve wait_then_go;
  wait_then_go.grid = {0, 0.5, 1};
  wait_then_go.nodes = {{0, 0}, {0, 0}, {1, 0}};
  auto s2 = metric_speed(kSeg, wait_then_go);
  CHECK(s2[0].speed == doctest::Approx(0.0));
  CHECK(s2[1].speed == doctest::Approx(2.0));

  DiscreteCurve constant;
  constant.grid = {0, 1};
  constant.nodes = {{0.5, 0}, {0.5, 0}};
  CHECK(metric_speed(kSeg, constant)[0].speed == doctest::Approx(0.0));
}

TEST_CASE("kinetic energy and lipschitz constant") {
  auto sp = three_point_space();
  CurvePlan unitgeo = make_plan(sp, {line(0, 1)}, {1.0});
  for (double q : {2.0, 3.0, 8.0})
    CHECK(ke_q(unitgeo, q) == doctest::Approx(1.0));
  CHECK_THROWS(ke_q(unitgeo, 1.0));

  DiscreteCurve wg;
  wg.grid = {0, 0.5, 1};
  wg.nodes = {{0, 0}, {0, 0}, {1, 0}};
  CurvePlan two_speed = make_plan(sp, {wg}, {1.0});
  CHECK(ke_q(two_speed, 2) == doctest::Approx(2.0));
  CHECK(lip_const(two_speed) == doctest::Approx(2.0));

  DiscreteCurve constant;
  constant.grid = {0, 1};
  constant.nodes = {{0.5, 0}, {0.5, 0}};
  CurvePlan mixed = make_plan(sp, {line(0, 1), constant}, {0.5, 0.5});
  CHECK(ke_q(mixed, 2) == doctest::Approx(0.5));
  CHECK(lip_const(mixed) == doctest::Approx(1.0));
}

TEST_CASE("power means of ke increase to lip") {
  std::mt19937_64 rng(11);
  auto sp = make_space(kSeg, {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}},
                       {0.2, 0.2, 0.2, 0.2, 0.2});
  for (int trial = 0; trial < 20; ++trial) {
    auto plan = random_edge_plan(sp, rng, 4, 4);
    double prev = 0;
    for (double q : {2.0, 4.0, 8.0, 16.0, 32.0}) {
      double root = std::pow(ke_q(plan, q), 1.0 / q);
      CHECK(root >= prev - 1e-10);
      prev = root;
      CHECK(root <= lip_const(plan) + 1e-10);
    }
  }
}

TEST_CASE("compression on declared sampling") {
  auto sp = three_point_space();
  // Dirac on a constant curve at a point of mass 1/3: Comp = 3
  DiscreteCurve constant;
  constant.grid = {0, 1};
  constant.nodes = {{0.5, 0}, {0.5, 0}};
  auto rep = compression(make_plan(sp, {constant}, {1.0}));
  CHECK(rep.comp == doctest::Approx(3.0));
  CHECK(rep.snap_radius == doctest::Approx(0.0));

  // stationary uniform plan: Comp = 1
  std::vector<DiscreteCurve> cs;
  for (int i = 0; i < 3; ++i) {
    DiscreteCurve c;
    c.grid = {0, 1};
    c.nodes = {sp->points[i], sp->points[i]};
    cs.push_back(c);
  }
  auto uni = make_plan(sp, cs, {1. / 3, 1. / 3, 1. / 3});
  CHECK(compression(uni).comp == doctest::Approx(1.0));

  // two curves crossing at the midpoint at t = 1/2
  auto crossing = make_plan(sp, {line(0, 1), line(1, 0)}, {0.5, 0.5});
  auto rc = compression(crossing, 7);  // odd count hits t = 1/2 exactly
  CHECK(rc.comp == doctest::Approx((0.5 + 0.5) / (1. / 3)));

  // charged zero-weight point => +inf sentinel
  auto spz = make_space(kSeg, {{0, 0}, {1, 0}}, {1.0, 0.0});
  DiscreteCurve at1;
  at1.grid = {0, 1};
  at1.nodes = {{1, 0}, {1, 0}};
  auto repz = compression(make_plan(spz, {at1}, {1.0}));
  CHECK(repz.infinite);
  CHECK(std::isinf(repz.comp));

  // compression of a constant-curve plan equals that of its time-0 marginal
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto base = random_edge_plan(sp, rng, 3, 2);
    std::vector<DiscreteCurve> consts;
    for (const auto& c : base.curves) {
      DiscreteCurve k;
      k.grid = {0, 1};
      k.nodes = {c.nodes.front(), c.nodes.front()};
      consts.push_back(k);
    }
    auto cplan = make_plan(sp, consts, base.masses);
    auto [marg, snap] = plan_marginal(cplan, 0.0);
    double want = 0;
    for (int i = 0; i < sp->size(); ++i)
      if (marg[i] > 0) want = std::fmax(want, marg[i] / sp->weights[i]);
    CHECK(compression(cplan).comp == doctest::Approx(want));
  }
}

TEST_CASE("restrict_time identity, scaling, reversal") {
  auto sp = three_point_space();
  auto plan = make_plan(sp, {line(0, 1, 4)}, {1.0});

  auto same = restrict_time(plan, 0, 1);
  CHECK(ke_q(same, 2) == doctest::Approx(ke_q(plan, 2)));
  CHECK(lip_const(same) == doctest::Approx(lip_const(plan)));

  auto half = restrict_time(plan, 0, 0.5);
  CHECK(lip_const(half) == doctest::Approx(0.5));
  CHECK(ke_q(half, 2) == doctest::Approx(0.25));

  auto reversed = restrict_time(plan, 1, 0);
  CHECK(reversed.curves[0].nodes.front()[0] == doctest::Approx(1.0));
  CHECK(reversed.curves[0].nodes.back()[0] == doctest::Approx(0.0));
  CHECK(ke_q(reversed, 2) == doctest::Approx(1.0));

  CHECK_THROWS(restrict_time(plan, 0.3, 0.3));
}

TEST_CASE("lip restriction identity over random partitions") {
  std::mt19937_64 rng(5);
  auto sp = make_space(kSeg, {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}},
                       {0.2, 0.2, 0.2, 0.2, 0.2});
  for (int trial = 0; trial < 10; ++trial) {
    auto plan = random_edge_plan(sp, rng, 3, 4);
    // random partition of [0,1]
    std::vector<double> part{0.0, 1.0};
    for (int c = 0; c < 3; ++c) part.push_back(oracle::uniform01(rng));
    std::sort(part.begin(), part.end());
    part.erase(std::unique(part.begin(), part.end()), part.end());
    double recomposed = 0;
    for (size_t i = 0; i + 1 < part.size(); ++i) {
      auto leg = restrict_time(plan, part[i], part[i + 1]);
      recomposed =
          std::fmax(recomposed, lip_const(leg) / (part[i + 1] - part[i]));
    }
    CHECK(recomposed == doctest::Approx(lip_const(plan)).epsilon(1e-9));
  }
}

TEST_CASE("ke restriction scaling on random plans") {
  std::mt19937_64 rng(9);
  auto sp = make_space(kSeg, {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}},
                       {0.2, 0.2, 0.2, 0.2, 0.2});
  const double q = 2.5;
  for (int trial = 0; trial < 10; ++trial) {
    auto plan = random_edge_plan(sp, rng, 3, 4);
    // restriction to a knot interval of length h multiplies speeds by h
    double t0 = 0.25, t1 = 0.75, h = t1 - t0;
    auto leg = restrict_time(plan, t0, t1);
    double contribution = 0;
    for (int i = 0; i < plan.size(); ++i)
      for (const auto& seg : metric_speed(kSeg, plan.curves[i])) {
        double lo = std::fmax(seg.t0, t0), hi = std::fmin(seg.t1, t1);
        if (hi > lo)
          contribution += plan.masses[i] * std::pow(seg.speed, q) * (hi - lo);
      }
    CHECK(ke_q(leg, q) ==
          doctest::Approx(std::pow(h, q - 1) * contribution).epsilon(1e-9));
  }
}

TEST_CASE("restrict_event filters and renormalizes") {
  auto sp = three_point_space();
  auto plan = make_plan(sp, {line(0, 1), line(1, 0)}, {0.5, 0.5});

  auto all = restrict_event(plan, {1.0, 1.0});
  CHECK(all.size() == 2);
  CHECK(all.masses[0] == doctest::Approx(0.5));

  auto one = restrict_event(plan, {1.0, 0.0});
  CHECK(one.size() == 1);
  CHECK(one.masses[0] == doctest::Approx(1.0));

  CHECK_THROWS(restrict_event(plan, {0.0, 0.0}));

  // Comp and Ke bounds under event restriction
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_edge_plan(sp, rng, 4, 2);
    std::vector<double> ind(p.size());
    double retained = 0;
    for (int i = 0; i < p.size(); ++i) {
      ind[i] = rng() % 2 ? 1.0 : 0.3;
      retained += p.masses[i] * ind[i];
    }
    auto r = restrict_event(p, ind);
    CHECK(compression(r).comp <= compression(p).comp / retained + 1e-9);
    CHECK(ke_q(r, 2) <= ke_q(p, 2) / retained + 1e-9);
  }
}

TEST_CASE("glue composes legs markov-style") {
  auto sp = make_space(kSeg, {{0, 0}, {0.4, 0}, {0.6, 0}, {1, 0}},
                       {0.25, 0.25, 0.25, 0.25});
  // leg A: x -> {y or z}; leg B: {y,z} -> w
  CurvePlan legA = make_plan(sp, {line(0, 0.4), line(0, 0.6)}, {0.5, 0.5});
  CurvePlan legB = make_plan(sp, {line(0.4, 1), line(0.6, 1)}, {0.5, 0.5});
  auto glued = glue({legA, legB}, {0, 0.5, 1});
  REQUIRE(glued.size() == 2);
  CHECK(glued.masses[0] == doctest::Approx(0.5));
  for (const auto& c : glued.curves) {
    CHECK(c.nodes.front()[0] == doctest::Approx(0.0));
    CHECK(c.nodes.back()[0] == doctest::Approx(1.0));
  }
  // lip of glue over the uniform grid doubles the per-leg constant
  CHECK(lip_const(glued) ==
        doctest::Approx(2 * std::fmax(lip_const(legA), lip_const(legB))));

  // marginal mismatch must throw
  CurvePlan legBad = make_plan(sp, {line(0.4, 1)}, {1.0});
  CHECK_THROWS(glue({legA, legBad}, {0, 0.5, 1}));

  // gluing a plan with its reversal returns to the start marginal
  auto there = make_plan(sp, {line(0, 1)}, {1.0});
  auto back = restrict_time(there, 1, 0);
  auto loop = glue({there, back}, {0, 0.5, 1});
  auto [m0, s0] = plan_marginal(loop, 0.0);
  auto [m1, s1] = plan_marginal(loop, 1.0);
  for (int i = 0; i < sp->size(); ++i) CHECK(m0[i] == doctest::Approx(m1[i]));
}

TEST_CASE("glued legs keep their ke and compression") {
  std::mt19937_64 rng(17);
  auto sp = make_space(kSeg, {{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}, {1, 0}},
                       {0.2, 0.2, 0.2, 0.2, 0.2});
  for (int trial = 0; trial < 5; ++trial) {
    auto legA = random_edge_plan(sp, rng, 3, 2);
    // second leg starts from legA's end marginal: constant curves there
    auto [endm, snap] = plan_marginal(legA, 1.0);
    std::vector<DiscreteCurve> cs;
    std::vector<double> ms;
    for (int i = 0; i < sp->size(); ++i) {
      if (endm[i] <= 0) continue;
      DiscreteCurve c;
      c.grid = {0, 1};
      c.nodes = {sp->points[i], sp->points[i]};
      cs.push_back(c);
      ms.push_back(endm[i]);
    }
    auto legB = make_plan(sp, cs, ms);
    auto glued = glue({legA, legB}, {0, 0.5, 1});
    auto gA = restrict_time(glued, 0, 0.5);
    CHECK(ke_q(gA, 2) == doctest::Approx(ke_q(legA, 2)).epsilon(1e-9));
    CHECK(compression(gA).comp ==
          doctest::Approx(compression(legA).comp).epsilon(1e-9));
  }
}

TEST_CASE("pairing basics") {
  auto sp = three_point_space();
  std::vector<double> f{0.0, 0.25, 1.0};
  auto plan = make_plan(sp, {line(0, 1)}, {1.0});
  CHECK(pairing(plan, f) == doctest::Approx(1.0));
  CHECK(pairing(plan, {2, 2, 2}) == doctest::Approx(0.0));
  // d(x0, .) along a single geodesic
  std::vector<double> dist0{0.0, 0.5, 1.0};
  CHECK(pairing(plan, dist0) == doctest::Approx(1.0));
  // linearity in masses
  auto two = make_plan(sp, {line(0, 1), line(1, 0.5)}, {0.25, 0.75});
  CHECK(pairing(two, f) ==
        doctest::Approx(0.25 * (1.0 - 0.0) + 0.75 * (0.25 - 1.0)));
  // invariance under measure-preserving curve-set refinement: split one
  // curve into two equal-mass copies
  auto split = make_plan(sp, {line(0, 1), line(0, 1), line(1, 0.5)},
                         {0.125, 0.125, 0.75});
  CHECK(pairing(split, f) == doctest::Approx(pairing(two, f)));
  CHECK(ke_q(split, 2.0) == doctest::Approx(ke_q(two, 2.0)));
}
