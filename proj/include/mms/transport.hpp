#pragma once

#include <optional>
#include <vector>

#include "mms/certificates.hpp"
#include "mms/plan.hpp"
#include "mms/space.hpp"

namespace mms {

struct CouplingEntry {
  int i, j;
  double mass;
};

// A nonnegative mass matrix with prescribed marginals, stored sparsely.
struct Coupling {
  Density source, target;
  std::vector<CouplingEntry> entries;

  void validate(double tol = 1e-9) const;  // row/col sums match marginals
};

struct TransportResult {
  Coupling coupling;
  double value = 0;     // W_q, or the bottleneck value when exponent = inf
  double exponent = 2;  // q, or +inf
  double cost = 0;      // sum alpha d^q (finite q)
  std::vector<double> dual_u, dual_v;  // optimality certificate for q < inf
  double certificate_slack = 0;        // worst complementary-slackness defect
};

// Exact minimizer of sum d^q alpha over admissible couplings, solved by a
// transportation simplex with Bland's rule; value = cost^(1/q).
TransportResult optimal_coupling_q(const Density& mu0, const Density& mu1,
                                   double q);

// Bottleneck transport: smallest threshold in the distance multiset whose
// bipartite feasibility problem admits a full flow.
TransportResult winf(const Density& mu0, const Density& mu1);

struct WqTableRow {
  double q;
  double wq;
};

// W_q along an increasing schedule; checks monotonicity and the approach to
// the bottleneck value.
struct WqTable {
  std::vector<WqTableRow> rows;
  double winf_value = 0;
  bool monotone = true;
  bool close_to_winf = true;
};

WqTable winf_limit_check(const Density& mu0, const Density& mu1,
                         const std::vector<double>& q_schedule,
                         double rel_tol = 0.05);

// One constant-speed geodesic per positive coupling entry, sampled on a
// uniform grid of `steps` intervals. Ke_q^{1/q} of the lift equals the
// transport value exactly; for exponent = inf, Lip equals the bottleneck.
CurvePlan lift_to_dynamical(const TransportResult& result, int steps = 16);

struct GoodInftyPlan {
  CurvePlan plan;
  double winf_value = 0;
  double final_lip = 0;
  std::vector<double> q_schedule;
  std::vector<double> eps;        // eps_k = W_inf (q_k^{1/q_k} - 1)
  std::vector<double> discarded;  // per-k discarded mass, <= 1/q_k
  std::optional<CompressionBound> certificate;
};

// Restriction scheme along q_k -> inf: gate each q_k-optimal lift to curves
// no longer than W_inf + eps_k, keeping the last restricted plan.
GoodInftyPlan good_infty_plan(const Density& mu0, const Density& mu1,
                              const std::vector<double>& q_schedule,
                              int steps = 16,
                              std::optional<CompressionBound> certificate = {});

}  // namespace mms
