#pragma once

#include <vector>

#include "mms/plan.hpp"
#include "mms/space.hpp"

namespace mms {

// A real function on the points of a finite space together with the
// neighbor graph used for the local Lipschitz constant.
struct SpaceFunction {
  SpacePtr space;
  std::vector<double> values;
  std::vector<std::vector<int>> neighbors;  // symmetric adjacency

  void validate() const;
};

// Default graph: template-consecutive points (path on the segment, cycle on
// the circle, 4-neighbor grid on the torus).
std::vector<std::vector<int>> consecutive_neighbor_graph(const FiniteSpace& sp);

SpaceFunction make_function(SpacePtr space, std::vector<double> values,
                            std::vector<std::vector<int>> neighbors = {});

// max over graph neighbors of |f(y)-f(x)| / d(x,y); 0 at isolated points.
std::vector<double> local_lip(const SpaceFunction& f);

// sum lip^p f * m
double cheeger_p(const SpaceFunction& f, double p);

// sum lip f * m  (the p = 1 counterpart)
double total_variation(const SpaceFunction& f);

// pairing / (Comp^{1/p} Ke_q^{1/q}); bounded by Ch_p^{1/p} for plans whose
// curves traverse neighbor edges, by telescoping.
double duality_ratio_sobolev(const SpaceFunction& f, const CurvePlan& plan,
                             double p, double q);

// pairing / (Comp * Lip); bounded by |Df|(X) for edge-path plans.
double duality_ratio_bv(const SpaceFunction& f, const CurvePlan& plan);

// True when every curve leg joins graph neighbors (or stands still); the
// duality inequalities above are only claimed on this class.
bool is_edge_path_plan(const SpaceFunction& f, const CurvePlan& plan);

struct LeibnizReport {
  double lhs;  // Ch_p^{1/p}(fg)
  double rhs;  // |g|_inf Ch_p^{1/p}(f) + |lip g|_inf |f|_p
  bool holds;
};

LeibnizReport leibniz_check(const SpaceFunction& f, const SpaceFunction& g,
                            double p);

}  // namespace mms
