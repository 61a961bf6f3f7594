#include "mms/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

namespace mms {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sigma_sqrt(double z) {
  return z >= 0 ? std::sqrt(z) : -std::sqrt(-z);
}

}  // namespace

FunctionSequence restrict_to_sequence(
    const SpaceSequence& seq, const std::function<double(const Point&)>& f,
    double p) {
  FunctionSequence fs;
  fs.seq = &seq;
  fs.p = p;
  auto restrict_one = [&](SpacePtr sp) {
    std::vector<double> vals;
    for (const auto& pt : sp->points) vals.push_back(f(pt));
    return make_function(sp, std::move(vals));
  };
  for (const auto& term : seq.terms) fs.terms.push_back(restrict_one(term));
  fs.limit_fn = restrict_one(seq.limit);
  return fs;
}

double lp_norm(const SpaceFunction& f, double p) {
  double s = 0;
  for (int i = 0; i < f.space->size(); ++i)
    s += std::pow(std::fabs(f.values[i]), p) * f.space->weights[i];
  return std::pow(s, 1.0 / p);
}

double lp_weak_defect(const FunctionSequence& fs, int k) {
  if (k < 0 || k >= static_cast<int>(fs.terms.size()))
    throw std::invalid_argument("lp_weak_defect: bad index");
  const auto& family = fs.seq->family.fns;
  const SpaceFunction& fk = fs.terms[k];
  const SpaceFunction& fl = fs.limit_fn;
  double defect = 0;
  for (const auto& phi : family) {
    double a = 0, b = 0;
    for (int i = 0; i < fk.space->size(); ++i)
      a += phi.eval(fk.space->points[i]) * fk.values[i] * fk.space->weights[i];
    for (int j = 0; j < fl.space->size(); ++j)
      b += phi.eval(fl.space->points[j]) * fl.values[j] * fl.space->weights[j];
    defect = std::fmax(defect, std::fabs(a - b));
  }
  return defect;
}

StrongCheckReport lp_strong_check(const FunctionSequence& fs, double tol) {
  StrongCheckReport rep;
  FunctionSequence work = fs;
  double p = fs.p;
  if (fs.p == 1.0) {
    // L1-strong is defined through the signed square root at exponent 2
    auto transform = [](const SpaceFunction& f) {
      std::vector<double> v;
      for (double x : f.values) v.push_back(sigma_sqrt(x));
      return make_function(f.space, std::move(v), f.neighbors);
    };
    for (auto& t : work.terms) t = transform(t);
    work.limit_fn = transform(work.limit_fn);
    work.p = 2.0;
    p = 2.0;
  }
  for (int k = 0; k < static_cast<int>(work.terms.size()); ++k) {
    rep.weak_defects.push_back(lp_weak_defect(work, k));
    rep.norms.push_back(lp_norm(work.terms[k], p));
  }
  rep.limit_norm = lp_norm(work.limit_fn, p);
  // limsup margin over the tail third of the sequence
  size_t tail = rep.norms.size() - std::max<size_t>(1, rep.norms.size() / 3);
  rep.norm_margin = -std::numeric_limits<double>::infinity();
  for (size_t k = tail; k < rep.norms.size(); ++k)
    rep.norm_margin = std::fmax(rep.norm_margin, rep.norms[k] - rep.limit_norm);
  rep.weak = rep.weak_defects.empty() ? false
                                      : rep.weak_defects.back() <= tol;
  rep.strong = rep.weak && rep.norm_margin <= tol;
  return rep;
}

CouplingLimitReport coupling_limit_check(const FunctionSequence& fs,
                                         const FunctionSequence& gs) {
  if (std::fabs(1.0 / fs.p + 1.0 / gs.p - 1.0) > 1e-12)
    throw std::invalid_argument("coupling check: exponents not conjugate");
  if (fs.terms.size() != gs.terms.size())
    throw std::invalid_argument("coupling check: length mismatch");
  CouplingLimitReport rep;
  double limit = 0;
  for (int i = 0; i < fs.limit_fn.space->size(); ++i)
    limit += fs.limit_fn.values[i] * gs.limit_fn.values[i] *
             fs.limit_fn.space->weights[i];
  for (size_t k = 0; k < fs.terms.size(); ++k) {
    double v = 0;
    for (int i = 0; i < fs.terms[k].space->size(); ++i)
      v += fs.terms[k].values[i] * gs.terms[k].values[i] *
           fs.terms[k].space->weights[i];
    rep.residuals.push_back(std::fabs(v - limit));
  }
  // least-squares slope of log residual against log(k+1)
  int n = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < rep.residuals.size(); ++k) {
    if (rep.residuals[k] <= 1e-300) continue;
    double x = std::log(static_cast<double>(k + 1));
    double y = std::log(rep.residuals[k]);
    ++n;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.trend_slope =
      n >= 2 ? (n * sxy - sx * sy) / std::fmax(n * sxx - sx * sx, 1e-12) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Constant-speed edge path between two points of a 1-d space on a uniform
// grid whose cell count is a multiple of `align` (so the uniform M-grids of
// the schedule land on knots), padded with a terminal wait.
DiscreteCurve edge_path_curve(const FiniteSpace& sp,
                              const std::vector<int>& order_pos,
                              const std::vector<int>& order, int a, int b,
                              int align) {
  // order: point indices sorted by coordinate; order_pos: inverse
  DiscreteCurve c;
  int pa = order_pos[a], pb = order_pos[b];
  std::vector<int> hops;
  if (sp.tmpl.kind == TemplateKind::circle) {
    const int n = sp.size();
    int fwd = ((pb - pa) % n + n) % n;
    int bwd = n - fwd;
    bool go_fwd = fwd < bwd || (fwd == bwd);  // positive orientation on ties
    int len = std::min(fwd, bwd);
    for (int k = 0; k <= len; ++k) {
      int pos = go_fwd ? (pa + k) % n : ((pa - k) % n + n) % n;
      hops.push_back(order[pos]);
    }
  } else {
    int step = pb >= pa ? 1 : -1;
    for (int pos = pa;; pos += step) {
      hops.push_back(order[pos]);
      if (pos == pb) break;
    }
  }
  int edges = static_cast<int>(hops.size()) - 1;
  int cells = std::max(align, (edges + align - 1) / align * align);
  for (int k = 0; k < static_cast<int>(hops.size()); ++k) {
    c.grid.push_back(static_cast<double>(k) / cells);
    c.nodes.push_back(sp.points[hops[k]]);
  }
  while (static_cast<int>(c.grid.size()) <= cells) {
    c.grid.push_back(static_cast<double>(c.grid.size()) / cells);
    c.nodes.push_back(c.nodes.back());
  }
  c.grid.back() = 1.0;
  return c;
}

std::vector<int> coordinate_order(const FiniteSpace& sp) {
  std::vector<int> order(sp.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return sp.points[x][0] < sp.points[y][0];
  });
  return order;
}

}  // namespace

std::vector<CorpusPlan> make_plan_corpus(SpacePtr limit, uint64_t seed,
                                         int pair_cap, int grid_cells) {
  if (limit->tmpl.kind == TemplateKind::torus_grid)
    throw std::invalid_argument(
        "plan corpus: only 1-d templates are supported");
  std::vector<CorpusPlan> corpus;
  const FiniteSpace& sp = *limit;
  const int n = sp.size();
  auto order = coordinate_order(sp);
  std::vector<int> order_pos(n);
  for (int k = 0; k < n; ++k) order_pos[order[k]] = k;
  std::mt19937_64 rng(seed);

  // geodesic pair plans; seeded subsample when the full enumeration is large
  std::vector<std::pair<int, int>> pairs;
  if (static_cast<long long>(n) * (n - 1) / 2 <= pair_cap) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  } else {
    // spans in [n/4, n/2): wide enough that the support ball of the pair
    // plan stays resolvable on the coarse terms of the canonical sequences
    for (int k = 0; k < pair_cap; ++k) {
      int lo = std::max(1, n / 4);
      int span = lo + static_cast<int>(rng() % static_cast<uint64_t>(
                                           std::max(1, n / 4)));
      int a = static_cast<int>(rng() % static_cast<uint64_t>(n - span));
      pairs.push_back({order[a], order[a + span]});
    }
  }
  int id = 0;
  for (auto [a, b] : pairs) {
    if (a == b) continue;
    CorpusPlan cp;
    cp.id = "pair-" + std::to_string(id++);
    cp.plan = make_plan(
        limit, {edge_path_curve(sp, order_pos, order, a, b, grid_cells)},
        {1.0});
    corpus.push_back(std::move(cp));
  }

  // product plan between two shipped bump densities
  {
    std::vector<std::pair<int, double>> bump0, bump1;
    for (int k = 0; k < n; ++k) {
      double x = sp.points[order[k]][0];
      double c0 = 0.25 * sp.tmpl.extent[0], c1 = 0.7 * sp.tmpl.extent[0];
      double w = 0.12 * sp.tmpl.extent[0];
      double v0 = std::fmax(0.0, 1.0 - std::fabs(x - c0) / w);
      double v1 = std::fmax(0.0, 1.0 - std::fabs(x - c1) / w);
      if (v0 > 0) bump0.push_back({order[k], v0 * sp.weights[order[k]]});
      if (v1 > 0) bump1.push_back({order[k], v1 * sp.weights[order[k]]});
    }
    double t0 = 0, t1 = 0;
    for (auto& [i, v] : bump0) t0 += v;
    for (auto& [i, v] : bump1) t1 += v;
    if (t0 > 0 && t1 > 0) {
      std::vector<DiscreteCurve> curves;
      std::vector<double> masses;
      for (auto& [i, vi] : bump0)
        for (auto& [j, vj] : bump1) {
          curves.push_back(
              edge_path_curve(sp, order_pos, order, i, j, grid_cells));
          masses.push_back(vi / t0 * vj / t1);
        }
      CorpusPlan cp;
      cp.id = "product-bumps";
      cp.plan = make_plan(limit, std::move(curves), std::move(masses));
      corpus.push_back(std::move(cp));
    }
  }

  // seeded random edge paths
  for (int r = 0; r < 3; ++r) {
    std::vector<DiscreteCurve> curves;
    std::vector<double> masses;
    int walkers = 3;
    for (int w = 0; w < walkers; ++w) {
      DiscreteCurve c;
      int pos = static_cast<int>(rng() % static_cast<uint64_t>(n));
      for (int k = 0; k <= grid_cells; ++k) {
        c.grid.push_back(static_cast<double>(k) / grid_cells);
        c.nodes.push_back(sp.points[order[pos]]);
        int step = static_cast<int>(rng() % 3) - 1;
        if (sp.tmpl.kind == TemplateKind::circle)
          pos = ((pos + step) % n + n) % n;
        else
          pos = std::clamp(pos + step, 0, n - 1);
      }
      c.grid.back() = 1.0;
      curves.push_back(std::move(c));
      masses.push_back(0.1 + uniform01(rng));
    }
    double tot = 0;
    for (double m : masses) tot += m;
    for (double& m : masses) m /= tot;
    CorpusPlan cp;
    cp.id = "walk-" + std::to_string(r);
    cp.plan = make_plan(limit, std::move(curves), std::move(masses));
    corpus.push_back(std::move(cp));
  }
  return corpus;
}

namespace {

struct CellTask {
  int M, term;
  const CorpusPlan* plan;
};

void finalize_margins(MoscoReport& rep, const MoscoConfig& cfg) {
  size_t count = rep.chp_terms.size();
  size_t tail = count - std::max<size_t>(1, count / 3);
  double min_tail = std::numeric_limits<double>::infinity();
  for (size_t k = tail; k < count; ++k)
    min_tail = std::fmin(min_tail, rep.chp_terms[k]);
  rep.liminf_margin = rep.chp_limit - min_tail;
  double factor =
      cfg.regime == Regime::mcp ? std::pow(2.0, cfg.N) : 1.0;
  rep.liminf_margin_scaled = rep.chp_limit - factor * min_tail;
  if (rep.violations > 0)
    rep.exit_code = 2;
  else if (!rep.rows.empty() &&
           rep.infeasible_cells == static_cast<int>(rep.rows.size()))
    rep.exit_code = 3;
  else
    rep.exit_code = 0;
}

}  // namespace

MoscoReport mosco_experiment(const FunctionSequence& fs,
                             const MoscoConfig& config) {
  if (!(config.p > 1) || std::isinf(config.p))
    throw std::invalid_argument("mosco: p must be finite and exceed 1");
  const double p = config.p, q = p / (p - 1);
  MoscoReport rep;
  rep.kind = "sobolev";
  rep.config = config;
  const SpaceSequence& seq = *fs.seq;
  for (const auto& t : seq.terms) rep.term_sizes.push_back(t->size());
  for (const auto& f : fs.terms) rep.chp_terms.push_back(cheeger_p(f, p));
  rep.chp_limit = cheeger_p(fs.limit_fn, p);

  auto corpus = make_plan_corpus(seq.limit, config.corpus_seed,
                                 config.corpus_pair_cap,
                                 config.corpus_grid_cells);
  rep.corpus_id = "corpus-v1:" + std::to_string(config.corpus_seed) + ":" +
                  std::to_string(config.corpus_pair_cap) + ":" +
                  std::to_string(config.corpus_grid_cells);

  BuildParams params;
  params.lift_steps = config.lift_steps;
  params.interior_samples = config.interior_samples;
  params.K = config.K;
  params.N = config.N;

  std::vector<CellTask> tasks;
  for (const auto& [M, term] : config.schedule)
    for (const auto& cp : corpus) tasks.push_back({M, term, &cp});

  std::vector<MoscoRow> rows(tasks.size());
  auto run_cell = [&](size_t idx) {
    const CellTask& task = tasks[idx];
    MoscoRow row;
    row.M = task.M;
    row.term = task.term;
    row.plan_id = task.plan->id;
    row.edge_path = task.plan->edge_path;
    row.pairing_limit = pairing(task.plan->plan, fs.limit_fn.values);
    try {
      auto build = build_polygonal_q(task.plan->plan, seq, task.term, task.M,
                                     q, config.regime, params);
      if (!build.feasible) {
        row.feasible = false;
        row.note = build.note;
        rows[idx] = row;
        return;
      }
      const SpaceFunction& fn = fs.terms[task.term];
      row.pairing_n = pairing(build.result, fn.values);
      row.comp = build.comp_result;
      row.ke = build.ke_result;
      row.lip = build.lip_result;
      row.chp_n = rep.chp_terms[task.term];
      row.rhs = std::pow(row.comp, 1.0 / p) * std::pow(row.ke, 1.0 / q) *
                std::pow(row.chp_n, 1.0 / p);
      row.slack = row.rhs - row.pairing_n;
      row.sigma = build.sigma;
      row.jensen_lhs = build.jensen_lhs;
      row.jensen_rhs = build.jensen_rhs;
      row.kechain_lhs = build.kechain_lhs;
      row.kechain_rhs = build.kechain_rhs;
      row.cert_value = build.certificate.value;
      row.cert_factor = build.cert_factor;
      row.gate_violation = -std::numeric_limits<double>::infinity();
      for (const auto& leg : build.legs)
        if (leg.discarded - leg.gate_bound > row.gate_violation) {
          row.gate_violation = leg.discarded - leg.gate_bound;
          row.gate_discarded = leg.discarded;
          row.gate_bound = leg.gate_bound;
        }
      if (build.legs.empty()) row.gate_violation = 0;
    } catch (const std::exception& err) {
      row.feasible = false;
      row.note = err.what();
    }
    rows[idx] = row;
  };

  if (config.jobs > 1) {
    std::vector<std::future<void>> futs;
    std::atomic<size_t> next{0};
    for (int j = 0; j < config.jobs; ++j)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (size_t idx = next.fetch_add(1); idx < tasks.size();
             idx = next.fetch_add(1))
          run_cell(idx);
      }));
    for (auto& f : futs) f.get();
  } else {
    for (size_t idx = 0; idx < tasks.size(); ++idx) run_cell(idx);
  }

  for (auto& row : rows) {
    if (!row.feasible) {
      ++rep.infeasible_cells;
    } else {
      // the duality inequality is asserted on edge-path builds only
      if (row.edge_path && row.slack < -config.tolerance) ++rep.violations;
      if (row.jensen_lhs > row.jensen_rhs + config.tolerance) ++rep.violations;
      if (row.kechain_lhs > row.kechain_rhs + config.tolerance)
        ++rep.violations;
      if (row.gate_violation > config.tolerance) ++rep.violations;
    }
    rep.rows.push_back(std::move(row));
  }
  finalize_margins(rep, config);
  return rep;
}

MoscoReport mosco_experiment_bv(const FunctionSequence& fs,
                                const MoscoConfig& config) {
  MoscoReport rep;
  rep.kind = "bv";
  rep.config = config;
  const SpaceSequence& seq = *fs.seq;
  for (const auto& t : seq.terms) rep.term_sizes.push_back(t->size());
  for (const auto& f : fs.terms) rep.chp_terms.push_back(total_variation(f));
  rep.chp_limit = total_variation(fs.limit_fn);

  auto corpus = make_plan_corpus(seq.limit, config.corpus_seed,
                                 config.corpus_pair_cap,
                                 config.corpus_grid_cells);
  rep.corpus_id = "corpus-v1:" + std::to_string(config.corpus_seed) + ":" +
                  std::to_string(config.corpus_pair_cap) + ":" +
                  std::to_string(config.corpus_grid_cells);

  BuildParams params;
  params.lift_steps = config.lift_steps;
  params.interior_samples = config.interior_samples;
  params.K = config.K;
  params.N = config.N;

  std::vector<CellTask> tasks;
  for (const auto& [M, term] : config.schedule)
    for (const auto& cp : corpus) tasks.push_back({M, term, &cp});

  std::vector<MoscoRow> rows(tasks.size());
  auto run_cell = [&](size_t idx) {
    const CellTask& task = tasks[idx];
    MoscoRow row;
    row.M = task.M;
    row.term = task.term;
    row.plan_id = task.plan->id;
    row.edge_path = task.plan->edge_path;
    row.pairing_limit = pairing(task.plan->plan, fs.limit_fn.values);
    try {
      auto build = build_polygonal_inf(task.plan->plan, seq, task.term, task.M,
                                       config.regime, config.q_schedule,
                                       params);
      if (!build.feasible) {
        row.feasible = false;
        row.note = build.note;
        rows[idx] = row;
        return;
      }
      const SpaceFunction& fn = fs.terms[task.term];
      row.pairing_n = pairing(build.result, fn.values);
      row.comp = build.comp_result;
      row.lip = build.lip_result;
      row.chp_n = rep.chp_terms[task.term];
      row.rhs = row.comp * row.lip * row.chp_n;
      row.slack = row.rhs - row.pairing_n;
      row.sigma = build.sigma;
      row.cert_value = build.certificate.value;
      row.cert_factor = build.cert_factor;
      row.gate_violation = -std::numeric_limits<double>::infinity();
      for (const auto& leg : build.legs)
        if (leg.discarded - leg.gate_bound > row.gate_violation) {
          row.gate_violation = leg.discarded - leg.gate_bound;
          row.gate_discarded = leg.discarded;
          row.gate_bound = leg.gate_bound;
        }
      if (build.legs.empty()) row.gate_violation = 0;
    } catch (const std::exception& err) {
      row.feasible = false;
      row.note = err.what();
    }
    rows[idx] = row;
  };

  if (config.jobs > 1) {
    std::vector<std::future<void>> futs;
    std::atomic<size_t> next{0};
    for (int j = 0; j < config.jobs; ++j)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (size_t idx = next.fetch_add(1); idx < tasks.size();
             idx = next.fetch_add(1))
          run_cell(idx);
      }));
    for (auto& f : futs) f.get();
  } else {
    for (size_t idx = 0; idx < tasks.size(); ++idx) run_cell(idx);
  }

  for (auto& row : rows) {
    if (!row.feasible) {
      ++rep.infeasible_cells;
    } else {
      if (row.edge_path && row.slack < -config.tolerance) ++rep.violations;
      if (row.gate_violation > config.tolerance) ++rep.violations;
    }
    rep.rows.push_back(std::move(row));
  }
  finalize_margins(rep, config);
  return rep;
}

}  // namespace mms
