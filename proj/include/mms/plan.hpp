#pragma once

#include <utility>
#include <vector>

#include "mms/space.hpp"

namespace mms {

// A piecewise-geodesic curve: between consecutive nodes it follows the
// template geodesic, so its metric speed is piecewise constant.
struct DiscreteCurve {
  std::vector<double> grid;   // strictly increasing, 0 = t_0 < ... < t_K = 1
  std::vector<Point> nodes;   // one per grid time

  void validate() const;
};

Point eval_curve(const GeodesicTemplate& tmpl, const DiscreteCurve& c,
                 double t);

struct SpeedSegment {
  double t0, t1;
  double speed;
};

// Exact metric speed of the piecewise-geodesic curve, one value per leg.
std::vector<SpeedSegment> metric_speed(const GeodesicTemplate& tmpl,
                                       const DiscreteCurve& c);

// A finitely supported probability measure on curves over a finite space.
// Zero-mass curves are dropped at construction; masses sum to 1.
struct CurvePlan {
  SpacePtr space;
  std::vector<DiscreteCurve> curves;
  std::vector<double> masses;

  int size() const { return static_cast<int>(curves.size()); }
};

CurvePlan make_plan(SpacePtr space, std::vector<DiscreteCurve> curves,
                    std::vector<double> masses);

// Kinetic energy: sum over curves of mass * int_0^1 speed^q dt. q > 1.
double ke_q(const CurvePlan& plan, double q);

// Minimal L such that the plan sits on L-Lipschitz curves.
double lip_const(const CurvePlan& plan);

struct CompressionReport {
  double comp = 0;             // +inf sentinel when a zero-weight point is hit
  double snap_radius = 0;      // largest marginal-to-point snap distance
  int interior_samples = 8;    // per-leg interior sampling used
  int sample_count = 0;
  bool infinite = false;
};

// Compression constant over the declared sampling: all curve knots plus
// `interior_samples` equispaced interior times per leg. Marginals between
// knots are snapped to the nearest space point.
CompressionReport compression(const CurvePlan& plan, int interior_samples = 8);

// Affine reparametrization of [s,t] onto [0,1]; s > t reverses time.
CurvePlan restrict_time(const CurvePlan& plan, double s, double t);

// Reweights masses by a per-curve indicator in [0,1] and renormalizes.
CurvePlan restrict_event(const CurvePlan& plan,
                         const std::vector<double>& indicator);

// Markov-style composition of consecutive legs along `grid`.
// Requires end-marginal of legs[i] == start-marginal of legs[i+1] (1e-9).
CurvePlan glue(const std::vector<CurvePlan>& legs,
               const std::vector<double>& grid);

// sum of mass * (f(last node) - f(first node)), f given per space point;
// endpoints are snapped to the nearest space point.
double pairing(const CurvePlan& plan, const std::vector<double>& f);

// Time-t marginal as masses on space points (nearest-point snapping).
// Returns the masses and the largest snap distance.
std::pair<std::vector<double>, double> plan_marginal(const CurvePlan& plan,
                                                     double t);

}  // namespace mms
