#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mms/calculus.hpp"
#include "mms/interpolation.hpp"
#include "mms/space.hpp"

namespace mms {

// One function per term space plus the limit function, all with the same
// integrability exponent.
struct FunctionSequence {
  const SpaceSequence* seq = nullptr;
  std::vector<SpaceFunction> terms;
  SpaceFunction limit_fn;
  double p = 2;
};

// Restriction of a fixed template function to every space of the sequence.
FunctionSequence restrict_to_sequence(const SpaceSequence& seq,
                                      const std::function<double(const Point&)>& f,
                                      double p);

double lp_norm(const SpaceFunction& f, double p);

// max over the test family of |int phi f_k dm_k - int phi f_inf dm_inf|
double lp_weak_defect(const FunctionSequence& fs, int k);

struct StrongCheckReport {
  std::vector<double> weak_defects;  // per term
  std::vector<double> norms;         // ||f_k||_p per term
  double limit_norm = 0;
  double norm_margin = 0;  // max over tail of ||f_k|| - ||f_inf||
  bool weak = false;
  bool strong = false;
};

// Weak defects plus the norm-limsup margin; for p = 1 the check runs on the
// signed square root sigma(z) = sgn(z) sqrt(|z|) at exponent 2.
StrongCheckReport lp_strong_check(const FunctionSequence& fs,
                                  double tol = 1e-6);

struct CouplingLimitReport {
  std::vector<double> residuals;
  double trend_slope = 0;  // least-squares slope of log-residual vs log-index
};

// Residuals of int f_k g_k dm_k against the limit pairing; exponents must be
// conjugate.
CouplingLimitReport coupling_limit_check(const FunctionSequence& fs,
                                         const FunctionSequence& gs);

// ---------------------------------------------------------------------------

struct CorpusPlan {
  std::string id;
  CurvePlan plan;
  bool edge_path = true;
};

// Versioned plan corpus on the limit space: geodesic pair plans (capped,
// seeded subsample when the pair count is large), product plans between two
// shipped bump densities, and seeded random edge paths. Every plan uses a
// common uniform time grid of `grid_cells` legs.
std::vector<CorpusPlan> make_plan_corpus(SpacePtr limit, uint64_t seed,
                                         int pair_cap, int grid_cells);

struct MoscoConfig {
  Regime regime = Regime::cd_nonneg;
  double p = 2;
  double K = 0;
  double N = 1;
  std::vector<std::pair<int, int>> schedule;  // (M, term index)
  std::vector<double> q_schedule = {2, 4, 8, 16};
  uint64_t corpus_seed = 1;
  int corpus_pair_cap = 4;
  int corpus_grid_cells = 8;
  int lift_steps = 16;
  int interior_samples = 8;
  double tolerance = 1e-8;
  int jobs = 1;
};

struct MoscoRow {
  int M = 1;
  int term = 0;
  std::string plan_id;
  bool edge_path = true;
  bool feasible = true;
  std::string note;
  double pairing_n = 0;      // int f_n d(e1-e0) pi
  double pairing_limit = 0;  // int f_inf d(e1-e0) eta
  double comp = 0, ke = 0, lip = 0;
  double chp_n = 0;     // Ch_p(f_n), or |Df_n| in the BV pipeline
  double rhs = 0;       // Comp^{1/p} Ke^{1/q} Ch^{1/p}, or Comp Lip |Df|
  double slack = 0;     // rhs - pairing_n
  double sigma = 0;
  double jensen_lhs = 0, jensen_rhs = 0;
  double kechain_lhs = 0, kechain_rhs = 0;
  double gate_violation = 0;   // max over legs of discarded - bound
  double gate_discarded = 0;   // discarded mass of the worst leg
  double gate_bound = 0;       // and its Chebyshev bound
  double cert_value = 0, cert_factor = 0;
};

struct MoscoReport {
  std::string kind;  // "sobolev" or "bv"
  MoscoConfig config;
  std::string corpus_id;
  std::vector<MoscoRow> rows;
  std::vector<int> term_sizes;
  std::vector<double> chp_terms;  // Ch_p(f_n) (or |Df_n|) per term
  double chp_limit = 0;
  double liminf_margin = 0;         // Ch(f_inf) - min over the tail third
  double liminf_margin_scaled = 0;  // with the 2^N factor in the mcp regime
  int violations = 0;               // asserted-inequality failures
  int infeasible_cells = 0;
  int exit_code = 0;  // 0 ok, 2 violations, 3 only infeasible cells
};

// Lower-semicontinuity pipeline for the p-Cheeger energy: polygonal builds
// over the schedule, duality rows with every factor reported, liminf margins.
MoscoReport mosco_experiment(const FunctionSequence& fs,
                             const MoscoConfig& config);

// BV pipeline: W_inf polygonal builds and Comp * Lip * |Df| rows.
MoscoReport mosco_experiment_bv(const FunctionSequence& fs,
                                const MoscoConfig& config);

enum class ReportFormat { json, csv, svg };

// Deterministic serialization; returns the files written.
std::vector<std::string> emit_report(const MoscoReport& report,
                                     ReportFormat format,
                                     const std::string& out_dir);

}  // namespace mms
