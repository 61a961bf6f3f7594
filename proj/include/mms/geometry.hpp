#pragma once

#include <array>
#include <string>

namespace mms {

enum class TemplateKind { segment, circle, torus_grid };

// Half-period ties on the circle (antipodes) and torus are broken by
// orientation so that geodesic selection is deterministic.
enum class TieBreak { positive_orientation, negative_orientation };

// Second coordinate is unused (0) for the 1-d template kinds.
using Point = std::array<double, 2>;

struct GeodesicTemplate {
  TemplateKind kind = TemplateKind::segment;
  std::array<double, 2> extent{1.0, 0.0};  // L, or (Lx, Ly) for torus_grid
  TieBreak tiebreak = TieBreak::positive_orientation;

  int dim() const { return kind == TemplateKind::torus_grid ? 2 : 1; }
  double diameter() const;

  // Wraps periodic coordinates into [0, L); checks range on the segment.
  Point canonical(const Point& x) const;

  double distance(const Point& x, const Point& y) const;

  // Constant-speed geodesic from x to y evaluated at t in [0, 1].
  // d(gp(s), gp(t)) == |t-s| * d(x,y) holds exactly for all kinds.
  Point geodesic_point(const Point& x, const Point& y, double t) const;

  bool operator==(const GeodesicTemplate&) const = default;
};

std::string to_string(TemplateKind k);
TemplateKind template_kind_from_string(const std::string& s);
std::string to_string(TieBreak t);
TieBreak tiebreak_from_string(const std::string& s);

}  // namespace mms
