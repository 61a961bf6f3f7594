#pragma once

#include <string>

namespace mms {

// Distortion coefficient tau_{K,N}^(t)(theta). Dispatches on the sign of K;
// +inf on the supercritical branch K > 0, K theta^2 > (N-1) pi^2.
// N = 1 falls back to the K = 0 branch (tau = t) and is flagged by callers.
double tau(double K, double N, double t, double theta);

// C_{K,N}[r] = (sup_{theta<r} sup_t t / tau_{K,N}^(t)(theta))^N for K < 0,
// and identically 1 for K = 0. The inner supremum is attained in the limit
// t -> 0 where t/tau tends to (sinh(a theta)/(a theta))^{(N-1)/N} with
// a = sqrt(-K/(N-1)); the outer one at theta = r since sinh(x)/x increases.
// Nondecreasing in r, -> 1 as r -> 0. The sign of K is clamped: K^- is used.
double c_kn(double K, double N, double r);

// Closed-form upper bound on the compression of an interpolating plan.
struct CompressionBound {
  enum class Kind { cd_infty, mcp };
  Kind kind = Kind::cd_infty;
  double K = 0;      // curvature lower bound; K^- enters the formulas
  double N = 1;      // dimension upper bound (mcp only)
  double scale = 0;  // the D or Lip argument
  double base = 1;   // max of the endpoint density sup-norms
  double value = 1;  // the certified bound
};

// value = exp(K^-/12 * scale^2) * base
CompressionBound cd_infty_bound(double K, double scale, double base);

// value = 2^N * C_{K^-,N}[scale] * base
CompressionBound mcp_bound(double K, double N, double scale, double base);

std::string to_string(CompressionBound::Kind k);

}  // namespace mms
