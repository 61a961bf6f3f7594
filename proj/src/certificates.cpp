#include "mms/certificates.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mms {

double tau(double K, double N, double t, double theta) {
  if (t < 0 || t > 1) throw std::invalid_argument("tau: t outside [0,1]");
  if (theta < 0) throw std::invalid_argument("tau: negative theta");
  if (N < 1) throw std::invalid_argument("tau: N below 1");
  if (K == 0 || N == 1 || theta == 0) return t;
  const double a = std::sqrt(std::fabs(K) / (N - 1));
  if (K > 0) {
    if (K * theta * theta > (N - 1) * std::numbers::pi * std::numbers::pi)
      return std::numeric_limits<double>::infinity();
    if (t == 0) return 0;
    return std::pow(t, 1.0 / N) *
           std::pow(std::sin(t * theta * a) / std::sin(theta * a),
                    (N - 1) / N);
  }
  if (t == 0) return 0;
  return std::pow(t, 1.0 / N) *
         std::pow(std::sinh(t * theta * a) / std::sinh(theta * a), (N - 1) / N);
}

double c_kn(double K, double N, double r) {
  if (r <= 0) throw std::invalid_argument("c_kn: r must be positive");
  if (N < 1) throw std::invalid_argument("c_kn: N below 1");
  double Kneg = std::fmin(K, 0.0);
  if (Kneg == 0 || N == 1) return 1.0;
  const double a = std::sqrt(-Kneg / (N - 1));
  const double x = a * r;
  // sinh(x)/x evaluated stably near zero
  double ratio = x < 1e-6 ? 1.0 + x * x / 6.0 : std::sinh(x) / x;
  return std::pow(ratio, N - 1);
}

CompressionBound cd_infty_bound(double K, double scale, double base) {
  CompressionBound b;
  b.kind = CompressionBound::Kind::cd_infty;
  b.K = K;
  b.N = std::numeric_limits<double>::infinity();
  b.scale = scale;
  b.base = base;
  double Kneg = std::fmax(-K, 0.0);
  b.value = std::exp(Kneg / 12.0 * scale * scale) * base;
  return b;
}

CompressionBound mcp_bound(double K, double N, double scale, double base) {
  CompressionBound b;
  b.kind = CompressionBound::Kind::mcp;
  b.K = K;
  b.N = N;
  b.scale = scale;
  b.base = base;
  double factor = scale > 0 ? c_kn(std::fmin(K, 0.0), N, scale) : 1.0;
  b.value = std::pow(2.0, N) * factor * base;
  return b;
}

std::string to_string(CompressionBound::Kind k) {
  return k == CompressionBound::Kind::cd_infty ? "cd_infty" : "mcp";
}

}  // namespace mms
