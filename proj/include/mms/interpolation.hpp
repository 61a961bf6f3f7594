#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mms/certificates.hpp"
#include "mms/plan.hpp"
#include "mms/space.hpp"
#include "mms/transport.hpp"

namespace mms {

enum class Regime { cd_nonneg, cd_general, mcp };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Shannon entropy int rho log rho dm (0 log 0 = 0) and the N-Renyi relative
// entropy int rho^{1-1/N} dm.
double entropy(const Density& mu);
double renyi(const Density& mu, double N);

struct GateResult {
  std::vector<double> indicator;  // 1 keep / 0 drop, per curve
  double discarded_mass = 0;
  double threshold = 0;   // on d^q(endpoints)
  double mass_bound = 0;  // wq^{(q+1)/2}
};

// Keeps curves with d^q(endpoints) <= wq^{(q-1)/2}; for an optimal leg the
// discarded mass is at most wq^{(q+1)/2} by Chebyshev.
GateResult chebyshev_gate(const CurvePlan& leg, double q, double wq_value);

// Transfers a boundedly supported probability density onto another space of
// the same template: mass-preserving nearest-point pushforward, cutoff
// supported in 2B, clamp at the source sup-norm, renormalization.
Density approx_density(const Density& rho_limit, SpacePtr target, Point center,
                       double radius);

// ---------------------------------------------------------------------------
// Submarginal correction (the M+1-step induction). Works on endpoint masses
// and leg entry masses only, so it runs unchanged over double or an exact
// rational scalar.

template <class S>
struct MarkovLeg {
  std::vector<int> src, dst;  // endpoint point indices, one per entry
  std::vector<S> mass;        // nonnegative; each leg totals 1
};

template <class S>
struct BoundCheck {
  S lhs, rhs;
  bool holds;
};

template <class S>
struct CorrectionResult {
  std::vector<std::vector<S>> point_masses;  // rho_i m per point, normalized
  std::vector<MarkovLeg<S>> legs;            // corrected legs, each totals 1
  S sigma;                                   // sum_j eta_j(Gamma_j^c)
  S retained;                                // mass before renormalization
  bool gates_clean;                          // (a): no mass on gated-out entries
  std::vector<BoundCheck<S>> sup_bound;      // (b) per marginal, needs weights
  std::vector<BoundCheck<S>> l1_bound;       // (c) per marginal
  std::vector<BoundCheck<S>> ke_bound;       // (d) per leg, needs entry costs
};

struct CorrectionHypothesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// point_masses_in: M+1 vectors of endpoint masses (tilde rho_i m), each
// totalling 1; legs_in: M compatible legs; gates: keep-flag per leg entry.
// weights enable the sup-norm check (b); leg_costs (d^q per entry) enable the
// kinetic check (d). Throws CorrectionHypothesisError when sigma > 1/2.
template <class S>
CorrectionResult<S> submarginal_correction(
    const std::vector<std::vector<S>>& point_masses_in,
    const std::vector<MarkovLeg<S>>& legs_in,
    const std::vector<std::vector<char>>& gates,
    const std::vector<S>* weights = nullptr,
    const std::vector<std::vector<S>>* leg_costs = nullptr);

// ---------------------------------------------------------------------------
// W_inf marginal transfer (mass-cutting induction over a near-diagonal
// W_2-optimal coupling of the reference measures).

struct TransferResult {
  SpacePtr reduced_limit;   // limit restricted to (1+eps)B, normalized
  SpacePtr reduced_target;  // term space likewise
  std::vector<Density> densities;  // transferred marginals on reduced_target
  double eps_ball = 0;             // the (1+eps) restriction radius factor
  double eps_n = 0;                // sqrt(W_2) of the reduced references
  double c_n = 0;                  // uniformly spread residual mass
  double c_n_bound = 0;            // eps_n^2 sum_i sup rho_i
  std::vector<double> winf_before, winf_after;
  std::vector<double> sup_before, sup_after;
};

TransferResult winf_marginal_transfer(const std::vector<Density>& rho,
                                      const SpaceSequence& seq, int term,
                                      Point center, double radius);

// ---------------------------------------------------------------------------
// Polygonal geodesic builders.

struct LegDiagnostics {
  double wq = 0;         // per-leg transport value (W_q, or W_inf)
  double discarded = 0;  // gate-discarded mass before correction
  double gate_bound = 0;
  double ke = 0;   // of the corrected leg (finite q)
  double lip = 0;  // of the corrected leg
};

struct PolygonalBuild {
  bool feasible = true;
  std::string note;
  int M = 1;
  double q = 2;  // +inf for the W_inf builder
  Regime regime = Regime::cd_nonneg;
  CurvePlan result;
  std::vector<LegDiagnostics> legs;
  double sigma = 0;  // Sum_n^M, total gate-discarded mass
  double ke_eta = 0, lip_eta = 0, comp_eta = 0;
  double ke_result = 0, lip_result = 0, comp_result = 0;
  double snap_radius = 0;
  // displacement of eta's grid marginals onto the point set; the Jensen and
  // kinetic chain comparisons are exact only when this is zero
  double eta_snap_radius = 0;
  CompressionBound certificate;  // from realized per-leg scales
  double cert_factor = 1;        // M-dependent inflation of the certificate
  double base_sup = 0;           // max endpoint density sup-norm
  // chain inequalities, both sides (finite q only)
  double jensen_lhs = 0, jensen_rhs = 0;
  double kechain_lhs = 0, kechain_rhs = 0;
  std::vector<double> endpoint_l1_shift;  // per grid marginal, from (c)
};

struct BuildParams {
  int lift_steps = 16;
  int interior_samples = 8;
  double K = 0;  // curvature bound entering the regime certificate
  double N = 1;  // dimension bound (mcp regime)
};

// Pipeline of the finite-q polygonal construction: approximate the M+1 grid
// marginals on the target space, solve and lift each leg, gate, correct the
// submarginals, glue. Gates are skipped in the cd_nonneg regime.
PolygonalBuild build_polygonal_q(const CurvePlan& eta, const SpaceSequence& seq,
                                 int term, int M, double q, Regime regime,
                                 const BuildParams& params = {});

// W_inf variant: marginal transfer, then one good infinity plan per leg.
PolygonalBuild build_polygonal_inf(const CurvePlan& eta,
                                   const SpaceSequence& seq, int term, int M,
                                   Regime regime,
                                   const std::vector<double>& q_schedule,
                                   const BuildParams& params = {});

// ---------------------------------------------------------------------------
// Curvature inequality checkers (report residuals; continuum statements are
// verified as trends under refinement, not pass/fail at one n).

struct ConvexityRow {
  double t;
  double lhs, rhs, residual;  // residual = lhs - rhs, <= 0 when satisfied
};

struct ConvexityReport {
  std::vector<ConvexityRow> rows;
  double max_residual = 0;
  double wq = 0;
  bool degenerate = false;
  std::string note;
};

// Entropy convexity along a given plan: Ent(mu_t) against the K-convexity
// chord. A checker for one plan, not a certifier of the CD condition.
ConvexityReport check_cd_convexity(const CurvePlan& plan, double K, double q,
                                   const std::vector<double>& t_samples);

// MCP contraction toward a point mass at o: U_N(mu_t) >= int tau^{(1-t)}
// rho_0^{1-1/N} dm, evaluated on the geodesic contraction plan.
ConvexityReport check_mcp_inequality(const Density& mu0, int o, double K,
                                     double N,
                                     const std::vector<double>& t_samples);

}  // namespace mms

#include "mms/detail/correction.hpp"
