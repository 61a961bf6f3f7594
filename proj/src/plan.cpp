#include "mms/plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace mms {

void DiscreteCurve::validate() const {
  if (grid.size() < 2 || grid.size() != nodes.size())
    throw std::invalid_argument("curve: grid/node mismatch");
  if (std::fabs(grid.front()) > 1e-12 || std::fabs(grid.back() - 1) > 1e-12)
    throw std::invalid_argument("curve: grid must span [0,1]");
  for (size_t k = 1; k < grid.size(); ++k)
    if (grid[k] <= grid[k - 1])
      throw std::invalid_argument("curve: grid not strictly increasing");
}

Point eval_curve(const GeodesicTemplate& tmpl, const DiscreteCurve& c,
                 double t) {
  if (t <= c.grid.front()) return c.nodes.front();
  if (t >= c.grid.back()) return c.nodes.back();
  auto it = std::upper_bound(c.grid.begin(), c.grid.end(), t);
  size_t k = static_cast<size_t>(it - c.grid.begin()) - 1;
  double t0 = c.grid[k], t1 = c.grid[k + 1];
  double s = (t - t0) / (t1 - t0);
  return tmpl.geodesic_point(c.nodes[k], c.nodes[k + 1], s);
}

std::vector<SpeedSegment> metric_speed(const GeodesicTemplate& tmpl,
                                       const DiscreteCurve& c) {
  std::vector<SpeedSegment> out;
  for (size_t k = 0; k + 1 < c.grid.size(); ++k) {
    double dt = c.grid[k + 1] - c.grid[k];
    double d = tmpl.distance(c.nodes[k], c.nodes[k + 1]);
    out.push_back({c.grid[k], c.grid[k + 1], d / dt});
  }
  return out;
}

CurvePlan make_plan(SpacePtr space, std::vector<DiscreteCurve> curves,
                    std::vector<double> masses) {
  if (curves.size() != masses.size())
    throw std::invalid_argument("plan: curve/mass mismatch");
  CurvePlan plan;
  plan.space = std::move(space);
  double total = 0;
  for (double m : masses) {
    if (m < 0) throw std::invalid_argument("plan: negative mass");
    total += m;
  }
  if (total <= 0) throw std::invalid_argument("plan: zero total mass");
  if (std::fabs(total - 1.0) > 1e-10)
    throw std::invalid_argument("plan: masses must sum to 1");
  for (size_t i = 0; i < curves.size(); ++i) {
    if (masses[i] <= 1e-15) continue;  // drop zero-mass curves
    curves[i].validate();
    plan.curves.push_back(std::move(curves[i]));
    plan.masses.push_back(masses[i]);
  }
  return plan;
}

double ke_q(const CurvePlan& plan, double q) {
  if (!(q > 1)) throw std::invalid_argument("ke_q: exponent must exceed 1");
  double total = 0;
  for (int i = 0; i < plan.size(); ++i) {
    double e = 0;
    for (const auto& seg : metric_speed(plan.space->tmpl, plan.curves[i]))
      e += std::pow(seg.speed, q) * (seg.t1 - seg.t0);
    total += plan.masses[i] * e;
  }
  return total;
}

double lip_const(const CurvePlan& plan) {
  double lip = 0;
  for (int i = 0; i < plan.size(); ++i)
    for (const auto& seg : metric_speed(plan.space->tmpl, plan.curves[i]))
      lip = std::fmax(lip, seg.speed);
  return lip;
}

std::pair<std::vector<double>, double> plan_marginal(const CurvePlan& plan,
                                                     double t) {
  std::vector<double> mass(plan.space->size(), 0.0);
  double snap = 0;
  for (int i = 0; i < plan.size(); ++i) {
    Point z = eval_curve(plan.space->tmpl, plan.curves[i], t);
    int j = plan.space->nearest(z);
    snap = std::fmax(snap, plan.space->tmpl.distance(plan.space->points[j], z));
    mass[j] += plan.masses[i];
  }
  return {mass, snap};
}

CompressionReport compression(const CurvePlan& plan, int interior_samples) {
  CompressionReport rep;
  rep.interior_samples = interior_samples;
  std::set<double> times;
  for (const auto& c : plan.curves) {
    for (double t : c.grid) times.insert(t);
    for (size_t k = 0; k + 1 < c.grid.size(); ++k)
      for (int s = 1; s <= interior_samples; ++s)
        times.insert(c.grid[k] + (c.grid[k + 1] - c.grid[k]) * s /
                                     (interior_samples + 1));
  }
  rep.sample_count = static_cast<int>(times.size());
  for (double t : times) {
    auto [mass, snap] = plan_marginal(plan, t);
    rep.snap_radius = std::fmax(rep.snap_radius, snap);
    for (int x = 0; x < plan.space->size(); ++x) {
      if (mass[x] <= 0) continue;
      if (plan.space->weights[x] <= 0) {
        rep.infinite = true;
        rep.comp = std::numeric_limits<double>::infinity();
        return rep;
      }
      rep.comp = std::fmax(rep.comp, mass[x] / plan.space->weights[x]);
    }
  }
  return rep;
}

CurvePlan restrict_time(const CurvePlan& plan, double s, double t) {
  if (s == t) throw std::invalid_argument("restrict_time: empty window");
  if (s < -1e-12 || s > 1 + 1e-12 || t < -1e-12 || t > 1 + 1e-12)
    throw std::invalid_argument("restrict_time: window outside [0,1]");
  CurvePlan out;
  out.space = plan.space;
  out.masses = plan.masses;
  const auto& tmpl = plan.space->tmpl;
  for (const auto& c : plan.curves) {
    DiscreteCurve rc;
    // r in [0,1] maps to s + r*(t-s); collect knots strictly inside
    double lo = std::fmin(s, t), hi = std::fmax(s, t);
    std::vector<double> inner;
    for (double g : c.grid)
      if (g > lo + 1e-15 && g < hi - 1e-15) inner.push_back(g);
    std::vector<double> source{s};
    source.insert(source.end(), inner.begin(), inner.end());
    if (s > t) std::reverse(source.begin() + 1, source.end());
    source.push_back(t);
    for (double g : source) {
      rc.grid.push_back((g - s) / (t - s));
      rc.nodes.push_back(eval_curve(tmpl, c, g));
    }
    rc.grid.front() = 0.0;
    rc.grid.back() = 1.0;
    out.curves.push_back(std::move(rc));
  }
  return out;
}

CurvePlan restrict_event(const CurvePlan& plan,
                         const std::vector<double>& indicator) {
  if (static_cast<int>(indicator.size()) != plan.size())
    throw std::invalid_argument("restrict_event: indicator size mismatch");
  double retained = 0;
  for (int i = 0; i < plan.size(); ++i) {
    if (indicator[i] < -1e-12 || indicator[i] > 1 + 1e-12)
      throw std::invalid_argument("restrict_event: indicator outside [0,1]");
    retained += plan.masses[i] * indicator[i];
  }
  if (retained <= 1e-15)
    throw std::runtime_error("restrict_event: retained mass is zero");
  std::vector<DiscreteCurve> curves;
  std::vector<double> masses;
  for (int i = 0; i < plan.size(); ++i) {
    double m = plan.masses[i] * indicator[i] / retained;
    if (m <= 1e-15) continue;
    curves.push_back(plan.curves[i]);
    masses.push_back(m);
  }
  // renormalize away the rounding of dropped curves
  double total = 0;
  for (double m : masses) total += m;
  for (double& m : masses) m /= total;
  return make_plan(plan.space, std::move(curves), std::move(masses));
}

namespace {

// Junction key: endpoint coordinates quantized for grouping.
using JunctionKey = std::pair<long long, long long>;

JunctionKey key_of(const Point& p) {
  return {static_cast<long long>(std::llround(p[0] * 1e9)),
          static_cast<long long>(std::llround(p[1] * 1e9))};
}

}  // namespace

CurvePlan glue(const std::vector<CurvePlan>& legs,
               const std::vector<double>& grid) {
  const size_t M = legs.size();
  if (M == 0) throw std::invalid_argument("glue: no legs");
  if (grid.size() != M + 1)
    throw std::invalid_argument("glue: grid size must be legs+1");
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    if (grid[i + 1] <= grid[i])
      throw std::invalid_argument("glue: grid not increasing");
  if (std::fabs(grid.front()) > 1e-12 || std::fabs(grid.back() - 1) > 1e-12)
    throw std::invalid_argument("glue: grid must span [0,1]");

  // per-leg grouping of curves by start key, and outgoing mass per key
  std::vector<std::map<JunctionKey, std::vector<int>>> starts(M);
  std::vector<std::map<JunctionKey, double>> out_mass(M);
  std::vector<std::map<JunctionKey, double>> end_mass(M);
  for (size_t l = 0; l < M; ++l) {
    for (int i = 0; i < legs[l].size(); ++i) {
      JunctionKey ks = key_of(legs[l].curves[i].nodes.front());
      JunctionKey ke = key_of(legs[l].curves[i].nodes.back());
      starts[l][ks].push_back(i);
      out_mass[l][ks] += legs[l].masses[i];
      end_mass[l][ke] += legs[l].masses[i];
    }
  }
  for (size_t l = 0; l + 1 < M; ++l) {
    std::set<JunctionKey> keys;
    for (auto& [k, v] : end_mass[l]) keys.insert(k);
    for (auto& [k, v] : out_mass[l + 1]) keys.insert(k);
    for (const auto& k : keys) {
      double a = end_mass[l].count(k) ? end_mass[l].at(k) : 0.0;
      double b = out_mass[l + 1].count(k) ? out_mass[l + 1].at(k) : 0.0;
      if (std::fabs(a - b) > 1e-9)
        throw std::runtime_error("glue: leg marginals do not match");
    }
  }

  constexpr size_t kMaxPaths = 500000;
  std::vector<DiscreteCurve> curves;
  std::vector<double> masses;

  struct Frame {
    size_t leg;
    double mass;
    std::vector<int> path;  // one curve index per leg so far
  };
  std::vector<Frame> stack;
  for (int i = legs[0].size() - 1; i >= 0; --i)
    stack.push_back({1, legs[0].masses[i], {i}});
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (fr.mass <= 1e-15) continue;
    if (fr.leg == M) {
      DiscreteCurve glued;
      for (size_t l = 0; l < M; ++l) {
        const DiscreteCurve& c = legs[l].curves[fr.path[l]];
        size_t k0 = (l == 0) ? 0 : 1;  // junction node appears once
        for (size_t k = k0; k < c.grid.size(); ++k) {
          glued.grid.push_back(grid[l] + (grid[l + 1] - grid[l]) * c.grid[k]);
          glued.nodes.push_back(c.nodes[k]);
        }
      }
      if (glued.grid.empty() || glued.grid.front() != 0.0) {
        glued.grid.insert(glued.grid.begin(), 0.0);
        glued.nodes.insert(glued.nodes.begin(),
                           legs[0].curves[fr.path[0]].nodes.front());
      }
      glued.grid.front() = 0.0;
      glued.grid.back() = 1.0;
      curves.push_back(std::move(glued));
      masses.push_back(fr.mass);
      if (curves.size() > kMaxPaths)
        throw std::runtime_error("glue: composed path count exceeds limit");
      continue;
    }
    JunctionKey k = key_of(legs[fr.leg - 1].curves[fr.path.back()].nodes.back());
    auto it = starts[fr.leg].find(k);
    if (it == starts[fr.leg].end())
      throw std::runtime_error("glue: dangling junction");
    double total_out = out_mass[fr.leg].at(k);
    for (int ci : it->second) {
      Frame nxt = fr;
      nxt.leg = fr.leg + 1;
      nxt.mass = fr.mass * legs[fr.leg].masses[ci] / total_out;
      nxt.path.push_back(ci);
      stack.push_back(std::move(nxt));
    }
  }
  double total = 0;
  for (double m : masses) total += m;
  for (double& m : masses) m /= total;
  return make_plan(legs[0].space, std::move(curves), std::move(masses));
}

double pairing(const CurvePlan& plan, const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != plan.space->size())
    throw std::invalid_argument("pairing: function size mismatch");
  double s = 0;
  for (int i = 0; i < plan.size(); ++i) {
    int a = plan.space->nearest(plan.curves[i].nodes.front());
    int b = plan.space->nearest(plan.curves[i].nodes.back());
    s += plan.masses[i] * (f[b] - f[a]);
  }
  return s;
}

}  // namespace mms
