#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mms/geometry.hpp"

namespace mms {

// Segment quadrature conventions for discretize():
//   half_open : n points k*L/n, cell k = [k*L/n, (k+1)*L/n)  (default)
//   closed    : n points k*L/(n-1) including both endpoints, paired with the
//               n equal cells [k*L/n, (k+1)*L/n]  ("closed rule")
// Circle and torus always use midpoint cells centered at the points.
enum class SegmentRule { half_open, closed };

struct FiniteSpace {
  GeodesicTemplate tmpl;
  std::vector<Point> points;
  std::vector<std::vector<double>> dist;  // full symmetric matrix
  std::vector<double> weights;            // the reference measure m
  int basepoint = 0;
  std::vector<int> order_1d;  // indices sorted by coordinate (1-d kinds)

  int size() const { return static_cast<int>(points.size()); }
  double total_mass() const;
  // Nearest point to z in the template metric; smallest index on ties.
  int nearest(const Point& z) const;
  void validate(double tol = 1e-12, bool check_triangle = true) const;
};

using SpacePtr = std::shared_ptr<const FiniteSpace>;

// Builds the distance matrix from the template unless an explicit matrix is
// supplied, then validates.
SpacePtr make_space(const GeodesicTemplate& tmpl, std::vector<Point> points,
                    std::vector<double> weights, int basepoint = 0,
                    std::vector<std::vector<double>> dist = {});

// Structural identity: same template, points, weights (within tol). Distinct
// objects loaded from equal files compare equal.
bool same_space(const FiniteSpace& a, const FiniteSpace& b,
                double tol = 1e-12);

using MeasureSpec = std::function<double(const Point&)>;

// n equally spaced points with cell-averaged weights; preserves the total
// mass of the measure spec to quadrature accuracy (exact for cubics).
SpacePtr discretize(const GeodesicTemplate& tmpl, int n,
                    const MeasureSpec& spec,
                    SegmentRule rule = SegmentRule::half_open);

// An absolutely continuous measure given by its density against m.
struct Density {
  SpacePtr space;
  std::vector<double> values;
  bool probability = true;  // asserts sum(values .* weights) == 1 at 1e-10

  double mass(int i) const { return values[i] * space->weights[i]; }
  double total() const;
  double sup_norm() const;  // ess-sup: ignores points of zero weight
  void validate(double tol = 1e-10) const;
};

Density density_from_masses(SpacePtr space, const std::vector<double>& masses,
                            bool normalize = false);
Density dirac_density(SpacePtr space, int i);
Density uniform_density(SpacePtr space);

// Finite surrogate for C_bs(Z): a versioned family of bounded functions on
// the template with recorded support radii.
struct TestFunction {
  std::string id;
  std::function<double(const Point&)> eval;
  double support_radius;
};

struct TestFamily {
  std::string id;
  std::vector<TestFunction> fns;
};

TestFamily default_test_family(const GeodesicTemplate& tmpl);

struct SpaceSequence {
  GeodesicTemplate tmpl;
  std::vector<SpacePtr> terms;
  SpacePtr limit;
  TestFamily family;
};

// max over the test family of |int f dm_k - int f dm_inf| plus the
// basepoint displacement. Zero means the family cannot tell them apart.
double pmgh_defect(const SpaceSequence& seq, int k);

// Canonical refining sequence used by the experiments: uniform
// discretizations of sizes `ns` plus a finer limit.
SpaceSequence make_refining_sequence(const GeodesicTemplate& tmpl,
                                     const std::vector<int>& ns, int n_limit,
                                     const MeasureSpec& spec,
                                     SegmentRule rule = SegmentRule::half_open);

}  // namespace mms
