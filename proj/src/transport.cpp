#include "mms/transport.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "mms/detail/transport_simplex.hpp"

namespace mms {

namespace {

constexpr double kMassTol = 1e-9;

struct SupportAtom {
  int index;    // point index in the space
  double mass;  // positive
};

std::vector<SupportAtom> support_of(const Density& mu) {
  std::vector<SupportAtom> atoms;
  for (int i = 0; i < mu.space->size(); ++i) {
    double m = mu.mass(i);
    if (m > 0) atoms.push_back({i, m});
  }
  if (atoms.empty()) throw std::invalid_argument("transport: empty marginal");
  return atoms;
}

void check_masses(const Density& mu0, const Density& mu1) {
  if (mu0.space->tmpl != mu1.space->tmpl)
    throw std::invalid_argument("transport: marginals on different templates");
  if (std::fabs(mu0.total() - mu1.total()) > kMassTol)
    throw std::invalid_argument("transport: total mass mismatch");
}

double cross_distance(const Density& mu0, const Density& mu1, int i, int j) {
  if (mu0.space.get() == mu1.space.get()) return mu0.space->dist[i][j];
  return mu0.space->tmpl.distance(mu0.space->points[i], mu1.space->points[j]);
}

// Dinic max-flow, exact for integer capacities. Nodes: 0 source,
// 1..nR rows, nR+1..nR+nC cols, last sink.
template <class Cap>
struct Dinic {
  struct Edge {
    int to;
    Cap cap;
    int rev;
  };
  std::vector<std::vector<Edge>> g;
  std::vector<int> level, iter;

  explicit Dinic(int n) : g(n) {}

  void add_edge(int a, int b, Cap c) {
    g[a].push_back({b, c, static_cast<int>(g[b].size())});
    g[b].push_back({a, Cap(0), static_cast<int>(g[a].size()) - 1});
  }

  bool bfs(int s, int t) {
    level.assign(g.size(), -1);
    std::vector<int> q{s};
    level[s] = 0;
    for (size_t h = 0; h < q.size(); ++h) {
      int a = q[h];
      for (const Edge& e : g[a])
        if (e.cap > Cap(0) && level[e.to] < 0) {
          level[e.to] = level[a] + 1;
          q.push_back(e.to);
        }
    }
    return level[t] >= 0;
  }

  Cap dfs(int a, int t, Cap f) {
    if (a == t) return f;
    for (int& i = iter[a]; i < static_cast<int>(g[a].size()); ++i) {
      Edge& e = g[a][i];
      if (e.cap > Cap(0) && level[e.to] == level[a] + 1) {
        Cap d = dfs(e.to, t, std::min(f, e.cap));
        if (d > Cap(0)) {
          e.cap -= d;
          g[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return Cap(0);
  }

  Cap max_flow(int s, int t) {
    Cap flow(0);
    while (bfs(s, t)) {
      iter.assign(g.size(), 0);
      while (true) {
        Cap f = dfs(s, t, std::numeric_limits<Cap>::max());
        if (!(f > Cap(0))) break;
        flow += f;
      }
    }
    return flow;
  }
};

// Continued-fraction reconstruction of a small-denominator rational.
bool to_fraction(double x, long long max_den, long long& num, long long& den) {
  double v = x;
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(v);
    if (fl > 9e17) return false;
    long long a = static_cast<long long>(fl);
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = v - fl;
    if (std::fabs(static_cast<double>(p1) / q1 - x) < 1e-13) break;
    if (rem < 1e-15) break;
    v = 1.0 / rem;
  }
  if (q1 == 0) return false;
  num = p1;
  den = q1;
  return std::fabs(static_cast<double>(num) / den - x) < 1e-12;
}

// Feasibility of transporting all mass across pairs with d <= threshold.
// Rational masses are scaled to integer units (layered augmentation on the
// discretized instance); otherwise real capacities with tolerance 1e-10.
struct BottleneckOracle {
  const std::vector<SupportAtom>&A, &B;
  const Density&mu0, &mu1;
  std::vector<long long> ia, ib;  // integer units, when commensurable
  bool integral = false;
  long long total_units = 0;
  double total_mass = 0;

  BottleneckOracle(const std::vector<SupportAtom>& a,
                   const std::vector<SupportAtom>& b, const Density& m0,
                   const Density& m1)
      : A(a), B(b), mu0(m0), mu1(m1) {
    for (const auto& at : A) total_mass += at.mass;
    long long lcm = 1;
    bool ok = true;
    auto fold = [&](double mass) {
      long long p, q;
      if (!ok || !to_fraction(mass, 1000000, p, q)) {
        ok = false;
        return;
      }
      lcm = std::lcm(lcm, q);
      if (lcm > 10000000) ok = false;
    };
    for (const auto& at : A) fold(at.mass);
    for (const auto& at : B) fold(at.mass);
    if (ok) {
      integral = true;
      for (const auto& at : A)
        ia.push_back(static_cast<long long>(std::llround(at.mass * lcm)));
      for (const auto& at : B)
        ib.push_back(static_cast<long long>(std::llround(at.mass * lcm)));
      long long sa = std::accumulate(ia.begin(), ia.end(), 0LL);
      long long sb = std::accumulate(ib.begin(), ib.end(), 0LL);
      if (sa != sb) integral = false;
      total_units = sa;
    }
  }

  template <class Cap>
  std::pair<bool, std::vector<CouplingEntry>> run(double threshold,
                                                  bool want_flow) const {
    const int nR = static_cast<int>(A.size()), nC = static_cast<int>(B.size());
    Dinic<Cap> net(nR + nC + 2);
    const int src = 0, snk = nR + nC + 1;
    for (int i = 0; i < nR; ++i)
      net.add_edge(src, 1 + i, integral ? Cap(ia[i]) : Cap(A[i].mass));
    for (int j = 0; j < nC; ++j)
      net.add_edge(1 + nR + j, snk, integral ? Cap(ib[j]) : Cap(B[j].mass));
    // exact comparison: thresholds are elements of the distance multiset,
    // so the optimum is a multiset element bit-for-bit
    for (int i = 0; i < nR; ++i)
      for (int j = 0; j < nC; ++j)
        if (cross_distance(mu0, mu1, A[i].index, B[j].index) <= threshold)
          net.add_edge(1 + i, 1 + nR + j,
                       integral ? Cap(total_units) : Cap(total_mass));
    Cap flow = net.max_flow(src, snk);
    bool feasible;
    if (integral)
      feasible = flow >= Cap(total_units);
    else
      feasible = static_cast<double>(flow) >= total_mass - 1e-10;
    std::vector<CouplingEntry> entries;
    if (feasible && want_flow) {
      double unit = integral ? 1.0 / static_cast<double>(total_units) *
                                   total_mass
                             : 1.0;
      for (int i = 0; i < nR; ++i)
        for (const auto& e : net.g[1 + i])
          if (e.to >= 1 + nR && e.to < snk) {
            // shipped amount = reverse capacity
            Cap shipped = net.g[e.to][e.rev].cap;
            double m = integral ? static_cast<double>(shipped) * unit
                                : static_cast<double>(shipped);
            if (m > 1e-15)
              entries.push_back({A[i].index, B[e.to - 1 - nR].index, m});
          }
    }
    return {feasible, entries};
  }

  std::pair<bool, std::vector<CouplingEntry>> feasible(double threshold,
                                                       bool want_flow) const {
    if (integral) return run<long long>(threshold, want_flow);
    return run<double>(threshold, want_flow);
  }
};

}  // namespace

void Coupling::validate(double tol) const {
  std::vector<double> row(source.space->size(), 0.0);
  std::vector<double> col(target.space->size(), 0.0);
  for (const auto& e : entries) {
    if (e.mass < -tol) throw std::invalid_argument("coupling: negative mass");
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  for (int i = 0; i < source.space->size(); ++i)
    if (std::fabs(row[i] - source.mass(i)) > tol)
      throw std::invalid_argument("coupling: row marginal mismatch");
  for (int j = 0; j < target.space->size(); ++j)
    if (std::fabs(col[j] - target.mass(j)) > tol)
      throw std::invalid_argument("coupling: column marginal mismatch");
}

TransportResult optimal_coupling_q(const Density& mu0, const Density& mu1,
                                   double q) {
  if (!(q > 1) || std::isinf(q))
    throw std::invalid_argument("optimal_coupling_q: q must be in (1,inf)");
  check_masses(mu0, mu1);
  auto A = support_of(mu0), B = support_of(mu1);
  const int nR = static_cast<int>(A.size()), nC = static_cast<int>(B.size());
  std::vector<double> supply(nR), demand(nC);
  for (int i = 0; i < nR; ++i) supply[i] = A[i].mass;
  for (int j = 0; j < nC; ++j) demand[j] = B[j].mass;
  // normalize away any residual total-mass gap so the simplex sees a
  // balanced instance
  {
    double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
    double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
    for (double& d : demand) d *= sa / sb;
  }

  TransportResult res;
  res.exponent = q;
  res.coupling.source = mu0;
  res.coupling.target = mu1;
  res.dual_u.assign(mu0.space->size(), 0.0);
  res.dual_v.assign(mu1.space->size(), 0.0);

  // costs d^q span q orders of magnitude: for large integral exponents the
  // double pivot threshold can no longer see genuine improvements, so the
  // instance (doubles are dyadic rationals) is solved exactly instead
  bool integral_q = std::fabs(q - std::llround(q)) < 1e-12;
  if (integral_q && q >= 12) {
    using Rat = boost::multiprecision::cpp_rational;
    const long long qi = std::llround(q);
    std::vector<Rat> rsupply(nR), rdemand(nC);
    // fp crumbs in the masses would ride the longest arcs, and a 1e-17
    // crumb at d^q rates can dominate the whole objective; masses that are
    // recognizably rational are snapped to their exact values first
    bool commensurable = true;
    for (int i = 0; i < nR && commensurable; ++i) {
      long long p, den;
      if (to_fraction(supply[i], 1000000, p, den))
        rsupply[i] = Rat(p, den);
      else
        commensurable = false;
    }
    for (int j = 0; j < nC && commensurable; ++j) {
      long long p, den;
      if (to_fraction(demand[j], 1000000, p, den))
        rdemand[j] = Rat(p, den);
      else
        commensurable = false;
    }
    if (!commensurable) {
      for (int i = 0; i < nR; ++i) rsupply[i] = Rat(supply[i]);
      for (int j = 0; j < nC; ++j) rdemand[j] = Rat(demand[j]);
    }
    // exact proportional rebalance
    {
      Rat sa(0), sb(0);
      for (const Rat& a : rsupply) sa += a;
      for (const Rat& b : rdemand) sb += b;
      if (!(sb > 0)) throw std::invalid_argument("transport: empty demand");
      for (Rat& b : rdemand) b = b * sa / sb;
    }
    std::vector<std::vector<Rat>> cost(nR, std::vector<Rat>(nC));
    for (int i = 0; i < nR; ++i)
      for (int j = 0; j < nC; ++j) {
        Rat base(cross_distance(mu0, mu1, A[i].index, B[j].index));
        Rat acc(1);
        Rat sq = base;
        for (long long e = qi; e > 0; e >>= 1) {
          if (e & 1) acc *= sq;
          if (e > 1) sq *= sq;
        }
        cost[i][j] = acc;
      }
    auto sol = detail::solve_transport<Rat>(rsupply, rdemand, cost, Rat(0));
    res.cost = static_cast<double>(sol.objective);
    res.value = std::pow(std::fmax(res.cost, 0.0), 1.0 / q);
    for (const auto& [arc, f] : sol.flows) {
      double fd = static_cast<double>(f);
      if (fd > 1e-15)
        res.coupling.entries.push_back(
            {A[arc.first].index, B[arc.second].index, fd});
    }
    for (int i = 0; i < nR; ++i)
      res.dual_u[A[i].index] = static_cast<double>(sol.u[i]);
    for (int j = 0; j < nC; ++j)
      res.dual_v[B[j].index] = static_cast<double>(sol.v[j]);
    res.certificate_slack = 0;  // exact arithmetic, eps = 0
    res.coupling.validate();
    return res;
  }

  std::vector<std::vector<double>> cost(nR, std::vector<double>(nC));
  double cmax = 0;
  for (int i = 0; i < nR; ++i)
    for (int j = 0; j < nC; ++j) {
      cost[i][j] =
          std::pow(cross_distance(mu0, mu1, A[i].index, B[j].index), q);
      cmax = std::fmax(cmax, cost[i][j]);
    }
  double eps = cmax > 0 ? 1e-13 * cmax : 1e-300;
  auto sol = detail::solve_transport<double>(supply, demand, cost, eps);

  res.cost = sol.objective;
  res.value = std::pow(std::fmax(sol.objective, 0.0), 1.0 / q);
  for (const auto& [arc, f] : sol.flows)
    if (f > 1e-15)
      res.coupling.entries.push_back({A[arc.first].index, B[arc.second].index, f});
  for (int i = 0; i < nR; ++i) res.dual_u[A[i].index] = sol.u[i];
  for (int j = 0; j < nC; ++j) res.dual_v[B[j].index] = sol.v[j];
  // complementary slackness: flows sit on arcs of zero reduced cost
  double slack = 0;
  for (const auto& [arc, f] : sol.flows)
    slack = std::fmax(slack, std::fabs(f * (cost[arc.first][arc.second] -
                                            sol.u[arc.first] -
                                            sol.v[arc.second])));
  for (int i = 0; i < nR; ++i)
    for (int j = 0; j < nC; ++j)
      slack = std::fmax(slack, std::fmax(0.0, sol.u[i] + sol.v[j] - cost[i][j]));
  res.certificate_slack = slack;
  if (slack > 1e-8 * std::fmax(1.0, cmax))
    throw std::runtime_error("optimal_coupling_q: certificate check failed");
  res.coupling.validate();
  return res;
}

TransportResult winf(const Density& mu0, const Density& mu1) {
  check_masses(mu0, mu1);
  auto A = support_of(mu0), B = support_of(mu1);
  BottleneckOracle oracle(A, B, mu0, mu1);
  std::vector<double> thresholds;
  for (const auto& a : A)
    for (const auto& b : B)
      thresholds.push_back(cross_distance(mu0, mu1, a.index, b.index));
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  int lo = 0, hi = static_cast<int>(thresholds.size()) - 1;
  if (!oracle.feasible(thresholds[hi], false).first)
    throw std::runtime_error("winf: infeasible at maximal threshold");
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (oracle.feasible(thresholds[mid], false).first)
      hi = mid;
    else
      lo = mid + 1;
  }
  auto [ok, entries] = oracle.feasible(thresholds[lo], true);
  if (!ok) throw std::runtime_error("winf: bisection lost feasibility");
  TransportResult res;
  res.exponent = std::numeric_limits<double>::infinity();
  res.value = thresholds[lo];
  res.cost = res.value;
  res.coupling.source = mu0;
  res.coupling.target = mu1;
  res.coupling.entries = std::move(entries);
  res.coupling.validate();
  return res;
}

WqTable winf_limit_check(const Density& mu0, const Density& mu1,
                         const std::vector<double>& q_schedule,
                         double rel_tol) {
  for (size_t k = 1; k < q_schedule.size(); ++k)
    if (q_schedule[k] <= q_schedule[k - 1])
      throw std::invalid_argument("winf_limit_check: schedule not increasing");
  WqTable table;
  table.winf_value = winf(mu0, mu1).value;
  double prev = 0;
  for (double q : q_schedule) {
    double wq = optimal_coupling_q(mu0, mu1, q).value;
    table.rows.push_back({q, wq});
    if (wq < prev - 1e-12) table.monotone = false;
    prev = wq;
  }
  if (!table.rows.empty()) {
    double gap = std::fabs(table.rows.back().wq - table.winf_value);
    table.close_to_winf = gap <= rel_tol * std::fmax(table.winf_value, 1e-300);
  }
  return table;
}

CurvePlan lift_to_dynamical(const TransportResult& result, int steps) {
  if (steps < 1) throw std::invalid_argument("lift: steps must be positive");
  const Coupling& c = result.coupling;
  if (c.source.space.get() != c.target.space.get() &&
      !same_space(*c.source.space, *c.target.space))
    throw std::invalid_argument("lift: coupling must live on one space");
  SpacePtr space = c.source.space;
  std::vector<DiscreteCurve> curves;
  std::vector<double> masses;
  for (const auto& e : c.entries) {
    DiscreteCurve curve;
    for (int k = 0; k <= steps; ++k) {
      double t = static_cast<double>(k) / steps;
      curve.grid.push_back(t);
      curve.nodes.push_back(space->tmpl.geodesic_point(space->points[e.i],
                                                       space->points[e.j], t));
    }
    curves.push_back(std::move(curve));
    masses.push_back(e.mass);
  }
  return make_plan(space, std::move(curves), std::move(masses));
}

GoodInftyPlan good_infty_plan(const Density& mu0, const Density& mu1,
                              const std::vector<double>& q_schedule,
                              int steps,
                              std::optional<CompressionBound> certificate) {
  if (q_schedule.size() < 2)
    throw std::invalid_argument("good_infty_plan: schedule needs >= 2 entries");
  for (size_t k = 0; k < q_schedule.size(); ++k)
    if (q_schedule[k] <= 1 ||
        (k > 0 && q_schedule[k] <= q_schedule[k - 1]))
      throw std::invalid_argument("good_infty_plan: bad schedule");
  GoodInftyPlan out;
  out.q_schedule = q_schedule;
  out.winf_value = winf(mu0, mu1).value;
  out.certificate = std::move(certificate);

  CurvePlan last;
  for (double qk : q_schedule) {
    auto res = optimal_coupling_q(mu0, mu1, qk);
    CurvePlan lift = lift_to_dynamical(res, steps);
    double eps_k = out.winf_value * (std::pow(qk, 1.0 / qk) - 1.0);
    double gate = out.winf_value + eps_k;
    std::vector<double> indicator(lift.size());
    double discarded = 0;
    const auto& tmpl = lift.space->tmpl;
    for (int i = 0; i < lift.size(); ++i) {
      // constant-speed geodesics: int |gdot|^q = d(endpoints)^q
      double d = tmpl.distance(lift.curves[i].nodes.front(),
                               lift.curves[i].nodes.back());
      bool keep = d <= gate + 1e-12;
      indicator[i] = keep ? 1.0 : 0.0;
      if (!keep) discarded += lift.masses[i];
    }
    out.eps.push_back(eps_k);
    out.discarded.push_back(discarded);
    if (discarded >= 1.0 - 1e-12)
      throw std::runtime_error(
          "good_infty_plan: schedule discards all mass at q=" +
          std::to_string(qk));
    last = discarded > 0 ? restrict_event(lift, indicator) : std::move(lift);
  }
  out.final_lip = lip_const(last);
  out.plan = std::move(last);
  return out;
}

}  // namespace mms
