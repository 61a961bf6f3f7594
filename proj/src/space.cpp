#include "mms/space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mms {

double FiniteSpace::total_mass() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

int FiniteSpace::nearest(const Point& z) const {
  if (!order_1d.empty()) {
    // binary search over the coordinate order; at most two candidates plus
    // the wrap pair on the circle
    Point c = tmpl.canonical(z);
    auto it = std::lower_bound(
        order_1d.begin(), order_1d.end(), c[0],
        [&](int idx, double v) { return points[idx][0] < v; });
    int best = -1;
    double bd = 0;
    auto consider = [&](int idx) {
      double d = tmpl.distance(points[idx], c);
      if (best < 0 || d < bd || (d == bd && idx < best)) {
        bd = d;
        best = idx;
      }
    };
    if (it != order_1d.end()) consider(*it);
    if (it != order_1d.begin()) consider(*(it - 1));
    if (tmpl.kind == TemplateKind::circle) {
      consider(order_1d.front());
      consider(order_1d.back());
    }
    return best;
  }
  int best = 0;
  double bd = tmpl.distance(points[0], z);
  for (int i = 1; i < size(); ++i) {
    double d = tmpl.distance(points[i], z);
    if (d < bd - 1e-15) {
      bd = d;
      best = i;
    }
  }
  return best;
}

void FiniteSpace::validate(double tol, bool check_triangle) const {
  const int n = size();
  if (n == 0) throw std::invalid_argument("space: no points");
  if (static_cast<int>(weights.size()) != n ||
      static_cast<int>(dist.size()) != n)
    throw std::invalid_argument("space: size mismatch");
  if (basepoint < 0 || basepoint >= n)
    throw std::invalid_argument("space: bad basepoint");
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("space: negative weight");
    total += w;
  }
  if (total <= 0) throw std::invalid_argument("space: zero total mass");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(dist[i].size()) != n)
      throw std::invalid_argument("space: ragged distance matrix");
    if (std::fabs(dist[i][i]) > tol)
      throw std::invalid_argument("space: nonzero diagonal");
    for (int j = 0; j < n; ++j) {
      if (dist[i][j] < 0) throw std::invalid_argument("space: negative dist");
      if (std::fabs(dist[i][j] - dist[j][i]) > tol)
        throw std::invalid_argument("space: asymmetric dist");
      if (i != j && dist[i][j] <= tol)
        throw std::invalid_argument("space: duplicate points");
    }
  }
  if (check_triangle)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (dist[i][j] > dist[i][k] + dist[k][j] + tol)
            throw std::invalid_argument("space: triangle inequality fails");
}

SpacePtr make_space(const GeodesicTemplate& tmpl, std::vector<Point> points,
                    std::vector<double> weights, int basepoint,
                    std::vector<std::vector<double>> dist) {
  auto sp = std::make_shared<FiniteSpace>();
  sp->tmpl = tmpl;
  for (auto& p : points) p = tmpl.canonical(p);
  sp->points = std::move(points);
  sp->weights = std::move(weights);
  sp->basepoint = basepoint;
  const int n = sp->size();
  // template-induced matrices satisfy the triangle inequality by
  // construction; only user-supplied ones need the cubic check
  bool check_triangle = !dist.empty();
  if (dist.empty()) {
    dist.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        dist[i][j] = dist[j][i] = tmpl.distance(sp->points[i], sp->points[j]);
  }
  sp->dist = std::move(dist);
  if (tmpl.kind != TemplateKind::torus_grid) {
    sp->order_1d.resize(n);
    std::iota(sp->order_1d.begin(), sp->order_1d.end(), 0);
    std::sort(sp->order_1d.begin(), sp->order_1d.end(), [&](int a, int b) {
      return sp->points[a][0] < sp->points[b][0];
    });
  }
  sp->validate(1e-12, check_triangle);
  return sp;
}

bool same_space(const FiniteSpace& a, const FiniteSpace& b, double tol) {
  if (!(a.tmpl == b.tmpl) || a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (a.tmpl.distance(a.points[i], b.points[i]) > tol) return false;
    if (std::fabs(a.weights[i] - b.weights[i]) > tol) return false;
  }
  return true;
}

namespace {

// Composite Simpson over [a, b]; exact for cubics.
double integrate(const MeasureSpec& f, double a, double b, int pieces,
                 double y = 0.0) {
  double h = (b - a) / pieces;
  double s = 0;
  for (int k = 0; k < pieces; ++k) {
    double lo = a + k * h, hi = lo + h, mid = 0.5 * (lo + hi);
    s += (h / 6) * (f({lo, y}) + 4 * f({mid, y}) + f({hi, y}));
  }
  return s;
}

}  // namespace

SpacePtr discretize(const GeodesicTemplate& tmpl, int n,
                    const MeasureSpec& spec, SegmentRule rule) {
  if (n < 2) throw std::invalid_argument("discretize: n must be >= 2");
  const double L = tmpl.extent[0];
  std::vector<Point> pts;
  std::vector<double> w;
  const int sub = 16;
  switch (tmpl.kind) {
    case TemplateKind::segment: {
      double cell = L / n;
      for (int k = 0; k < n; ++k) {
        double x = rule == SegmentRule::closed ? k * L / (n - 1) : k * cell;
        pts.push_back({x, 0.0});
        w.push_back(integrate(spec, k * cell, (k + 1) * cell, sub));
      }
      break;
    }
    case TemplateKind::circle: {
      double cell = L / n;
      for (int k = 0; k < n; ++k) {
        double x = k * cell;
        pts.push_back({x, 0.0});
        // midpoint cell [x - cell/2, x + cell/2); the seam cell is split at
        // the wrap point so discontinuities of the measure spec stay exact
        double lo = x - cell / 2, hi = x + cell / 2;
        if (lo < 0)
          w.push_back(integrate(spec, lo + L, L, sub) +
                      integrate(spec, 0, hi, sub));
        else
          w.push_back(integrate(spec, lo, hi, sub));
      }
      break;
    }
    case TemplateKind::torus_grid: {
      double cx = tmpl.extent[0] / n, cy = tmpl.extent[1] / n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Point p{i * cx, j * cy};
          pts.push_back(p);
          // midpoint rule per cell; adequate for the smooth specs shipped
          double v = 0;
          for (int a = 0; a < sub; ++a)
            for (int b = 0; b < sub; ++b)
              v += spec(tmpl.canonical({p[0] + (a + 0.5) * cx / sub - cx / 2,
                                        p[1] + (b + 0.5) * cy / sub - cy / 2}));
          w.push_back(v * cx * cy / (sub * sub));
        }
      break;
    }
  }
  bool positive = false;
  for (double x : w) {
    if (x < 0) throw std::invalid_argument("discretize: negative measure spec");
    positive = positive || x > 0;
  }
  if (!positive) throw std::invalid_argument("discretize: zero measure spec");
  return make_space(tmpl, std::move(pts), std::move(w), 0);
}

double Density::total() const {
  double s = 0;
  for (int i = 0; i < space->size(); ++i) s += mass(i);
  return s;
}

double Density::sup_norm() const {
  double s = 0;
  for (int i = 0; i < space->size(); ++i)
    if (space->weights[i] > 0) s = std::fmax(s, values[i]);
  return s;
}

void Density::validate(double tol) const {
  if (static_cast<int>(values.size()) != space->size())
    throw std::invalid_argument("density: size mismatch");
  for (int i = 0; i < space->size(); ++i)
    if (space->weights[i] > 0 && values[i] < 0)
      throw std::invalid_argument("density: negative value");
  if (probability && std::fabs(total() - 1.0) > tol)
    throw std::invalid_argument("density: not a probability");
}

Density density_from_masses(SpacePtr space, const std::vector<double>& masses,
                            bool normalize) {
  Density d;
  d.space = std::move(space);
  d.values.assign(d.space->size(), 0.0);
  double total = 0;
  for (double m : masses) total += m;
  if (normalize && total <= 0)
    throw std::invalid_argument("density: zero mass");
  for (int i = 0; i < d.space->size(); ++i) {
    double m = normalize ? masses[i] / total : masses[i];
    if (m == 0) continue;
    if (d.space->weights[i] <= 0)
      throw std::invalid_argument("density: mass on a zero-weight point");
    d.values[i] = m / d.space->weights[i];
  }
  d.validate();
  return d;
}

Density dirac_density(SpacePtr space, int i) {
  std::vector<double> m(space->size(), 0.0);
  m[i] = 1.0;
  return density_from_masses(std::move(space), m);
}

Density uniform_density(SpacePtr space) {
  std::vector<double> m(space->size());
  double total = space->total_mass();
  for (int i = 0; i < space->size(); ++i) m[i] = space->weights[i] / total;
  return density_from_masses(std::move(space), m);
}

TestFamily default_test_family(const GeodesicTemplate& tmpl) {
  TestFamily fam;
  fam.id = "fam-v1";
  const double L = tmpl.extent[0];
  const double R = tmpl.diameter();
  auto add = [&](std::string id, std::function<double(const Point&)> f) {
    fam.fns.push_back({std::move(id), std::move(f), R});
  };
  add("one", [](const Point&) { return 1.0; });
  add("coord", [](const Point& p) { return p[0]; });
  add("coord2", [](const Point& p) { return p[0] * p[0]; });
  add("cos1", [L](const Point& p) {
    return std::cos(2 * std::numbers::pi * p[0] / L);
  });
  add("sin1", [L](const Point& p) {
    return std::sin(2 * std::numbers::pi * p[0] / L);
  });
  // hat functions: 1-Lipschitz tents at fixed centers
  for (double c : {0.25, 0.5, 0.75}) {
    double center = c * L;
    add("hat@" + std::to_string(c), [tmpl, center](const Point& p) {
      return std::fmax(0.0, 0.25 - tmpl.distance(p, {center, 0.0}));
    });
  }
  // polynomial times a bump cutoff
  add("bump*coord", [tmpl, L](const Point& p) {
    double d = tmpl.distance(p, {L / 2, 0.0});
    double chi = std::fmax(0.0, 1.0 - 4.0 * d / L);
    return chi * p[0];
  });
  return fam;
}

double pmgh_defect(const SpaceSequence& seq, int k) {
  if (k < 0 || k >= static_cast<int>(seq.terms.size()))
    throw std::invalid_argument("pmgh_defect: bad term index");
  if (seq.family.fns.empty())
    throw std::invalid_argument("pmgh_defect: empty test family");
  const FiniteSpace& X = *seq.terms[k];
  const FiniteSpace& Y = *seq.limit;
  double defect = 0;
  for (const auto& fn : seq.family.fns) {
    double a = 0, b = 0;
    for (int i = 0; i < X.size(); ++i) a += fn.eval(X.points[i]) * X.weights[i];
    for (int j = 0; j < Y.size(); ++j) b += fn.eval(Y.points[j]) * Y.weights[j];
    defect = std::fmax(defect, std::fabs(a - b));
  }
  return defect +
         seq.tmpl.distance(X.points[X.basepoint], Y.points[Y.basepoint]);
}

SpaceSequence make_refining_sequence(const GeodesicTemplate& tmpl,
                                     const std::vector<int>& ns, int n_limit,
                                     const MeasureSpec& spec,
                                     SegmentRule rule) {
  SpaceSequence seq;
  seq.tmpl = tmpl;
  for (int n : ns) seq.terms.push_back(discretize(tmpl, n, spec, rule));
  seq.limit = discretize(tmpl, n_limit, spec, rule);
  seq.family = default_test_family(tmpl);
  return seq;
}

}  // namespace mms
