#include "mms/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mms {

void SpaceFunction::validate() const {
  const int n = space->size();
  if (static_cast<int>(values.size()) != n ||
      static_cast<int>(neighbors.size()) != n)
    throw std::invalid_argument("function: size mismatch");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("function: non-finite value");
  for (int i = 0; i < n; ++i)
    for (int j : neighbors[i]) {
      if (j < 0 || j >= n || j == i)
        throw std::invalid_argument("function: bad neighbor index");
      if (std::find(neighbors[j].begin(), neighbors[j].end(), i) ==
          neighbors[j].end())
        throw std::invalid_argument("function: asymmetric neighbor graph");
    }
}

std::vector<std::vector<int>> consecutive_neighbor_graph(
    const FiniteSpace& sp) {
  const int n = sp.size();
  std::vector<std::vector<int>> adj(n);
  if (sp.tmpl.kind == TemplateKind::torus_grid) {
    // points come from discretize in row-major g x g order
    int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (g * g != n)
      throw std::invalid_argument("neighbor graph: torus grid is not square");
    auto id = [g](int i, int j) {
      return ((i % g + g) % g) * g + ((j % g + g) % g);
    };
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        adj[id(i, j)].push_back(id(i + 1, j));
        adj[id(i, j)].push_back(id(i - 1, j));
        adj[id(i, j)].push_back(id(i, j + 1));
        adj[id(i, j)].push_back(id(i, j - 1));
      }
    return adj;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return sp.points[a][0] < sp.points[b][0];
  });
  for (int k = 0; k + 1 < n; ++k) {
    adj[order[k]].push_back(order[k + 1]);
    adj[order[k + 1]].push_back(order[k]);
  }
  if (sp.tmpl.kind == TemplateKind::circle && n > 2) {
    adj[order[n - 1]].push_back(order[0]);
    adj[order[0]].push_back(order[n - 1]);
  }
  return adj;
}

SpaceFunction make_function(SpacePtr space, std::vector<double> values,
                            std::vector<std::vector<int>> neighbors) {
  SpaceFunction f;
  f.space = std::move(space);
  f.values = std::move(values);
  f.neighbors =
      neighbors.empty() ? consecutive_neighbor_graph(*f.space) : std::move(neighbors);
  f.validate();
  return f;
}

std::vector<double> local_lip(const SpaceFunction& f) {
  const int n = f.space->size();
  std::vector<double> lip(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j : f.neighbors[i])
      lip[i] = std::fmax(lip[i], std::fabs(f.values[j] - f.values[i]) /
                                     f.space->dist[i][j]);
  return lip;
}

double cheeger_p(const SpaceFunction& f, double p) {
  if (!(p > 1)) throw std::invalid_argument("cheeger_p: p must exceed 1");
  auto lip = local_lip(f);
  double s = 0;
  for (int i = 0; i < f.space->size(); ++i)
    s += std::pow(lip[i], p) * f.space->weights[i];
  return s;
}

double total_variation(const SpaceFunction& f) {
  auto lip = local_lip(f);
  double s = 0;
  for (int i = 0; i < f.space->size(); ++i)
    s += lip[i] * f.space->weights[i];
  return s;
}

bool is_edge_path_plan(const SpaceFunction& f, const CurvePlan& plan) {
  const auto& sp = *plan.space;
  for (const auto& c : plan.curves)
    for (size_t k = 0; k + 1 < c.nodes.size(); ++k) {
      int a = sp.nearest(c.nodes[k]);
      int b = sp.nearest(c.nodes[k + 1]);
      if (sp.tmpl.distance(sp.points[a], c.nodes[k]) > 1e-9) return false;
      if (sp.tmpl.distance(sp.points[b], c.nodes[k + 1]) > 1e-9) return false;
      if (a == b) continue;
      if (std::find(f.neighbors[a].begin(), f.neighbors[a].end(), b) ==
          f.neighbors[a].end())
        return false;
    }
  return true;
}

double duality_ratio_sobolev(const SpaceFunction& f, const CurvePlan& plan,
                             double p, double q) {
  if (std::fabs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
    throw std::invalid_argument("duality: exponents are not conjugate");
  double ke = ke_q(plan, q);
  if (ke <= 0) throw std::invalid_argument("duality: degenerate plan");
  double comp = compression(plan).comp;
  return pairing(plan, f.values) /
         (std::pow(comp, 1.0 / p) * std::pow(ke, 1.0 / q));
}

double duality_ratio_bv(const SpaceFunction& f, const CurvePlan& plan) {
  double lip = lip_const(plan);
  if (lip <= 0) throw std::invalid_argument("duality: degenerate plan");
  double comp = compression(plan).comp;
  return pairing(plan, f.values) / (comp * lip);
}

LeibnizReport leibniz_check(const SpaceFunction& f, const SpaceFunction& g,
                            double p) {
  const int n = f.space->size();
  std::vector<double> fg(n);
  for (int i = 0; i < n; ++i) fg[i] = f.values[i] * g.values[i];
  SpaceFunction prod = make_function(f.space, fg, f.neighbors);
  double lhs = std::pow(cheeger_p(prod, p), 1.0 / p);
  double ginf = 0, lipg_inf = 0, fnorm = 0;
  auto lipg = local_lip(g);
  for (int i = 0; i < n; ++i) {
    ginf = std::fmax(ginf, std::fabs(g.values[i]));
    lipg_inf = std::fmax(lipg_inf, lipg[i]);
    fnorm += std::pow(std::fabs(f.values[i]), p) * f.space->weights[i];
  }
  fnorm = std::pow(fnorm, 1.0 / p);
  double rhs = ginf * std::pow(cheeger_p(f, p), 1.0 / p) + lipg_inf * fnorm;
  return {lhs, rhs, lhs <= rhs + 1e-9};
}

}  // namespace mms
