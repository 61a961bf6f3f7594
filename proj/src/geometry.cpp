#include "mms/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace mms {

namespace {

double wrap_mod(double x, double L) {
  double r = std::fmod(x, L);
  if (r < 0) r += L;
  // fmod can return L after the correction when x is a tiny negative number
  if (r >= L) r -= L;
  return r;
}

// Shortest signed displacement from x to y on a circle of circumference L.
// The half-period tie is resolved by orientation.
double circle_delta(double x, double y, double L, TieBreak tb) {
  double d = wrap_mod(y - x, L);
  if (d > L / 2) return d - L;
  if (d == L / 2) return tb == TieBreak::positive_orientation ? d : d - L;
  return d;
}

}  // namespace

double GeodesicTemplate::diameter() const {
  switch (kind) {
    case TemplateKind::segment: return extent[0];
    case TemplateKind::circle: return extent[0] / 2;
    case TemplateKind::torus_grid:
      return std::hypot(extent[0] / 2, extent[1] / 2);
  }
  return 0;
}

Point GeodesicTemplate::canonical(const Point& x) const {
  switch (kind) {
    case TemplateKind::segment:
      if (x[0] < -1e-12 || x[0] > extent[0] + 1e-12)
        throw std::invalid_argument("segment coordinate out of range");
      return {std::fmin(std::fmax(x[0], 0.0), extent[0]), 0.0};
    case TemplateKind::circle:
      return {wrap_mod(x[0], extent[0]), 0.0};
    case TemplateKind::torus_grid:
      return {wrap_mod(x[0], extent[0]), wrap_mod(x[1], extent[1])};
  }
  return x;
}

double GeodesicTemplate::distance(const Point& xa, const Point& ya) const {
  Point x = canonical(xa), y = canonical(ya);
  switch (kind) {
    case TemplateKind::segment: return std::fabs(y[0] - x[0]);
    case TemplateKind::circle: {
      double d = std::fabs(y[0] - x[0]);
      return std::fmin(d, extent[0] - d);
    }
    case TemplateKind::torus_grid: {
      double dx = std::fabs(y[0] - x[0]);
      dx = std::fmin(dx, extent[0] - dx);
      double dy = std::fabs(y[1] - x[1]);
      dy = std::fmin(dy, extent[1] - dy);
      return std::hypot(dx, dy);
    }
  }
  return 0;
}

Point GeodesicTemplate::geodesic_point(const Point& xa, const Point& ya,
                                       double t) const {
  if (t < -1e-12 || t > 1 + 1e-12)
    throw std::invalid_argument("geodesic parameter outside [0,1]");
  t = std::fmin(std::fmax(t, 0.0), 1.0);
  Point x = canonical(xa), y = canonical(ya);
  if (t == 0) return x;
  if (t == 1) return y;
  switch (kind) {
    case TemplateKind::segment:
      return {x[0] + t * (y[0] - x[0]), 0.0};
    case TemplateKind::circle: {
      double delta = circle_delta(x[0], y[0], extent[0], tiebreak);
      return canonical({x[0] + t * delta, 0.0});
    }
    case TemplateKind::torus_grid: {
      double dx = circle_delta(x[0], y[0], extent[0], tiebreak);
      double dy = circle_delta(x[1], y[1], extent[1], tiebreak);
      return canonical({x[0] + t * dx, x[1] + t * dy});
    }
  }
  return x;
}

std::string to_string(TemplateKind k) {
  switch (k) {
    case TemplateKind::segment: return "segment";
    case TemplateKind::circle: return "circle";
    case TemplateKind::torus_grid: return "torus_grid";
  }
  return "segment";
}

TemplateKind template_kind_from_string(const std::string& s) {
  if (s == "segment") return TemplateKind::segment;
  if (s == "circle") return TemplateKind::circle;
  if (s == "torus_grid") return TemplateKind::torus_grid;
  throw std::invalid_argument("unknown template kind: " + s);
}

std::string to_string(TieBreak t) {
  return t == TieBreak::positive_orientation ? "positive_orientation"
                                             : "negative_orientation";
}

TieBreak tiebreak_from_string(const std::string& s) {
  if (s == "positive_orientation") return TieBreak::positive_orientation;
  if (s == "negative_orientation") return TieBreak::negative_orientation;
  throw std::invalid_argument("unknown tiebreak: " + s);
}

}  // namespace mms
