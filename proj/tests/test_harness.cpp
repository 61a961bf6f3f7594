#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mms/harness.hpp"
#include "mms/json_io.hpp"

using namespace mms;

namespace {

const GeodesicTemplate kSeg{TemplateKind::segment, {1.0, 0.0}};
const GeodesicTemplate kCircle{TemplateKind::circle, {1.0, 0.0}};

MeasureSpec uniform_spec() {
  return [](const Point&) { return 1.0; };
}

}  // namespace

TEST_CASE("lp weak defect decreases along refinements") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32, 64}, 64, uniform_spec());
  auto fs = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 2.0);
  double prev = 1e9;
  for (int k = 0; k < 4; ++k) {
    double d = lp_weak_defect(fs, k);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
  CHECK(lp_weak_defect(fs, 3) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(lp_weak_defect(fs, 17));
}

TEST_CASE("strong check classifications") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32}, 32, uniform_spec());
  // identical constant sequence: strong
  auto fs = restrict_to_sequence(seq, [](const Point&) { return 2.0; }, 2.0);
  auto rep = lp_strong_check(fs);
  CHECK(rep.weak);
  CHECK(rep.strong);
  CHECK(rep.limit_norm == doctest::Approx(2.0));

  // oscillating sign with fixed modulus on a circle: not weak
  auto cseq = make_refining_sequence(kCircle, {32, 32, 32}, 32, uniform_spec());
  FunctionSequence osc;
  osc.seq = &cseq;
  osc.p = 2.0;
  int sign = 1;
  for (const auto& term : cseq.terms) {
    std::vector<double> v;
    for (int i = 0; i < term->size(); ++i)
      v.push_back(sign * std::sin(2 * std::numbers::pi * term->points[i][0]));
    osc.terms.push_back(make_function(term, std::move(v)));
    sign = -sign;
  }
  {
    std::vector<double> v(cseq.limit->size(), 0.0);
    osc.limit_fn = make_function(cseq.limit, std::move(v));
  }
  auto orep = lp_strong_check(osc);
  CHECK_FALSE(orep.weak);
  CHECK_FALSE(orep.strong);

  // p = 1 goes through the signed square root; sign flip of f flips nothing
  auto l1 = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 1.0);
  auto l1rep = lp_strong_check(l1);
  auto flipped = restrict_to_sequence(
      seq, [](const Point& p) { return -p[0]; }, 1.0);
  auto frep = lp_strong_check(flipped);
  CHECK(l1rep.strong == frep.strong);
  for (size_t k = 0; k < l1rep.norms.size(); ++k)
    CHECK(l1rep.norms[k] == doctest::Approx(frep.norms[k]));
}

TEST_CASE("coupling limit residuals") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32}, 64, uniform_spec());
  auto ones = restrict_to_sequence(seq, [](const Point&) { return 1.0; }, 2.0);
  auto rep = coupling_limit_check(ones, ones);
  // probability spaces throughout: residual is the total-mass gap, zero
  for (double r : rep.residuals) CHECK(r == doctest::Approx(0.0).epsilon(1e-10));

  auto f = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 2.0);
  auto rep2 = coupling_limit_check(f, f);
  CHECK(rep2.residuals.back() <= rep2.residuals.front() + 1e-12);

  auto g = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 3.0);
  CHECK_THROWS(coupling_limit_check(f, g));
}

TEST_CASE("plan corpus is deterministic, edge-path, and grid aligned") {
  auto limit = discretize(kSeg, 32, uniform_spec());
  auto a = make_plan_corpus(limit, 5, 4, 8);
  auto b = make_plan_corpus(limit, 5, 4, 8);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() >= 5);  // pairs + product + walks
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].id == b[k].id);
    REQUIRE(a[k].plan.size() == b[k].plan.size());
    for (int c = 0; c < a[k].plan.size(); ++c)
      CHECK(a[k].plan.masses[c] == doctest::Approx(b[k].plan.masses[c]));
    CHECK(a[k].edge_path);
    // knots contain the M-grids for M in {1,2,4,8}
    for (const auto& curve : a[k].plan.curves)
      for (int M : {1, 2, 4, 8})
        for (int i = 1; i < M; ++i) {
          double t = static_cast<double>(i) / M;
          bool found = false;
          for (double gknot : curve.grid)
            if (std::fabs(gknot - t) < 1e-12) found = true;
          CHECK(found);
        }
  }
}

TEST_CASE("mosco experiment smoke (cd, K = 0)") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32}, 64, uniform_spec());
  auto fs = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 2.0);
  MoscoConfig cfg;
  cfg.regime = Regime::cd_nonneg;
  cfg.p = 2.0;
  cfg.schedule = {{1, 0}, {1, 1}, {1, 2}};
  cfg.corpus_pair_cap = 3;
  auto rep = mosco_experiment(fs, cfg);
  CHECK(rep.kind == "sobolev");
  CHECK(rep.violations == 0);
  CHECK(rep.exit_code == 0);
  CHECK(rep.liminf_margin <= 1e-9);
  CHECK(rep.chp_limit == doctest::Approx(1.0));
  for (double chp : rep.chp_terms) CHECK(chp == doctest::Approx(1.0));
  CHECK(rep.rows.size() == 3 * 7);  // 3 cells x (3 pairs + product + 3 walks)
  for (const auto& row : rep.rows) {
    if (!row.feasible) continue;
    CHECK(row.slack >= -1e-8);
    CHECK(row.jensen_lhs <= row.jensen_rhs + 1e-8);
    CHECK(row.kechain_lhs <= row.kechain_rhs + 1e-8);
  }
  // determinism: identical config gives identical serialized reports
  auto rep2 = mosco_experiment(fs, cfg);
  CHECK(report_to_json(rep).dump() == report_to_json(rep2).dump());
  // worker pool does not change the result
  MoscoConfig par = cfg;
  par.jobs = 4;
  auto rep3 = mosco_experiment(fs, par);
  rep3.config.jobs = cfg.jobs;
  CHECK(report_to_json(rep).dump() == report_to_json(rep3).dump());
}

TEST_CASE("mosco experiment mcp uses the scaled margin") {
  auto seq = make_refining_sequence(kSeg, {8, 16}, 32, uniform_spec());
  auto fs = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 2.0);
  MoscoConfig cfg;
  cfg.regime = Regime::mcp;
  cfg.N = 1.0;
  cfg.schedule = {{1, 0}, {1, 1}};
  cfg.corpus_pair_cap = 2;
  auto rep = mosco_experiment(fs, cfg);
  CHECK(rep.violations == 0);
  // Ch(f_inf) - 2^N min tail = 1 - 2 = -1
  CHECK(rep.liminf_margin_scaled == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("mosco bv experiment") {
  auto seq = make_refining_sequence(kSeg, {16, 32}, 32, uniform_spec());
  auto ramp = [](const Point& p) {
    return std::clamp((p[0] - 0.3) / 0.2, 0.0, 1.0);
  };
  auto fs = restrict_to_sequence(seq, ramp, 1.0);
  MoscoConfig cfg;
  cfg.regime = Regime::cd_nonneg;
  cfg.schedule = {{1, 0}, {2, 0}, {1, 1}};
  cfg.corpus_pair_cap = 2;
  cfg.q_schedule = {2, 4, 8};
  auto rep = mosco_experiment_bv(fs, cfg);
  CHECK(rep.kind == "bv");
  CHECK(rep.violations == 0);
  int feasible = 0;
  for (const auto& row : rep.rows)
    if (row.feasible) {
      ++feasible;
      CHECK(row.slack >= -1e-8);
      // K = 0: the certificate inflation factor is identically 1
      CHECK(row.cert_factor == doctest::Approx(1.0));
    }
  CHECK(feasible > 0);
}

TEST_CASE("quadratic margin within tolerance at n = 64") {
  auto seq =
      make_refining_sequence(kSeg, {16, 32, 64}, 128, uniform_spec());
  auto fs = restrict_to_sequence(
      seq, [](const Point& p) { return p[0] * p[0]; }, 2.0);
  MoscoConfig cfg;
  cfg.schedule = {{1, 0}, {1, 1}, {1, 2}};
  cfg.corpus_pair_cap = 2;
  auto rep = mosco_experiment(fs, cfg);
  // continuum Dirichlet integral of x^2 is 4/3; the margin against the tail
  // stays under the 0.02 budget at n = 64
  CHECK(std::fabs(rep.chp_limit - 4.0 / 3) <= 0.02);
  CHECK(rep.liminf_margin <= 0.02);
  CHECK(rep.violations == 0);
}

TEST_CASE("kinetic excess shows the limsup behavior") {
  auto seq = make_refining_sequence(kSeg, {8, 16, 32, 64}, 128, uniform_spec());
  auto corpus = make_plan_corpus(seq.limit, 3, 1, 8);
  BuildParams params;
  params.K = -1.0;
  auto excess = [&](int M, int term) {
    auto b = build_polygonal_q(corpus[0].plan, seq, term, M, 2.0,
                               Regime::cd_general, params);
    REQUIRE(b.feasible);
    REQUIRE(b.ke_eta > 0);
    return std::fmax(b.ke_result / b.ke_eta - 1.0, 0.0);
  };
  // at fixed M the excess over Ke(eta) dies out as n refines
  double prev = 1e300;
  for (int term : {0, 1, 2, 3}) {
    double e = excess(8, term);
    CHECK(e <= prev + 1e-9);
    prev = e;
  }
  CHECK(prev <= 0.05);
  // along a diagonal with n growing ahead of M there is no excess at all
  for (auto [M, term] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{4, 3}})
    CHECK(excess(M, term) <= 1e-9);
}

TEST_CASE("report emission round trip and formats") {
  auto seq = make_refining_sequence(kSeg, {8, 16}, 32, uniform_spec());
  auto fs = restrict_to_sequence(seq, [](const Point& p) { return p[0]; }, 2.0);
  MoscoConfig cfg;
  cfg.schedule = {{1, 0}, {1, 1}};
  cfg.corpus_pair_cap = 2;
  auto rep = mosco_experiment(fs, cfg);

  namespace fs2 = std::filesystem;
  auto dir = fs2::temp_directory_path() / "mms_report_test";
  fs2::remove_all(dir);

  auto files = emit_report(rep, ReportFormat::json, dir.string());
  REQUIRE(files.size() == 1);
  std::ifstream in(files[0]);
  Json parsed;
  in >> parsed;
  CHECK(parsed.dump(2) + "\n" ==
        [&] {
          std::ifstream f(files[0]);
          std::stringstream ss;
          ss << f.rdbuf();
          return ss.str();
        }());
  CHECK(parsed.at("rows").size() == rep.rows.size());

  auto csv = emit_report(rep, ReportFormat::csv, dir.string());
  std::ifstream cf(csv[0]);
  int lines = 0;
  std::string l;
  while (std::getline(cf, l)) ++lines;
  CHECK(lines == static_cast<int>(rep.rows.size()) + 1);

  auto svg = emit_report(rep, ReportFormat::svg, dir.string());
  REQUIRE(svg.size() == 2);
  for (const auto& f : svg) {
    std::ifstream sf(f);
    std::stringstream ss;
    ss << sf.rdbuf();
    std::string s = ss.str();
    CHECK(s.rfind("<?xml", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
  }
  fs2::remove_all(dir);
}
