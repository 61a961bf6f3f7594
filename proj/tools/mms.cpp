// mms - command-line driver for the finite metric-measure-space toolkit.
// Subcommands: space, ot, plan, calc, mosco. All I/O is JSON; results print
// to stdout unless --out is given. Exit codes: 0 ok, 2 inequality violation,
// 3 infeasible cells only, 64 usage, 65 bad input data.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mms/json_io.hpp"

using namespace mms;

namespace {

int emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << "\n";
  }
  return 0;
}

JsonLoader loader_for(const std::string& file) {
  return {std::filesystem::path(file).parent_path().string()};
}

std::vector<double> parse_schedule(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

MoscoConfig config_from_json(const Json& j) {
  MoscoConfig cfg;
  cfg.regime = regime_from_string(j.value("regime", std::string("cd_nonneg")));
  cfg.p = j.value("p", 2.0);
  cfg.K = j.value("K", 0.0);
  cfg.N = j.value("N", 1.0);
  if (j.contains("q_schedule"))
    cfg.q_schedule = j.at("q_schedule").get<std::vector<double>>();
  cfg.corpus_seed = j.value("corpus_seed", 1ULL);
  cfg.corpus_pair_cap = j.value("corpus_pair_cap", 4);
  cfg.corpus_grid_cells = j.value("corpus_grid_cells", 8);
  cfg.lift_steps = j.value("lift_steps", 16);
  cfg.interior_samples = j.value("interior_samples", 8);
  cfg.tolerance = j.value("tolerance", j.value("tolerances", 1e-8));
  return cfg;
}

// schedule entries are [M, n]; n names a term by its point count when it
// matches one, otherwise it is a term index
std::vector<std::pair<int, int>> resolve_schedule(const Json& sched,
                                                  const SpaceSequence& seq) {
  std::vector<std::pair<int, int>> out;
  for (const auto& cell : sched) {
    int M = cell[0].get<int>();
    int n = cell[1].get<int>();
    int term = -1;
    for (size_t k = 0; k < seq.terms.size(); ++k)
      if (seq.terms[k]->size() == n) term = static_cast<int>(k);
    if (term < 0) {
      if (n < 0 || n >= static_cast<int>(seq.terms.size()))
        throw std::invalid_argument("schedule cell matches no term: " +
                                    std::to_string(n));
      term = n;
    }
    out.push_back({M, term});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite metric measure space toolkit"};
  app.require_subcommand(1);
  std::string out;

  // ---- space ----
  auto* space = app.add_subcommand("space", "space generation and inspection");
  space->require_subcommand(1);
  auto* gen = space->add_subcommand("gen", "discretize a template");
  std::string tmpl_kind = "segment", measure = "uniform", rule = "half_open";
  double extent = 1.0;
  int n_points = 16;
  gen->add_option("--template", tmpl_kind, "segment|circle|torus_grid");
  gen->add_option("--L", extent, "template extent");
  gen->add_option("--n", n_points, "number of points")->check(CLI::Range(2, 100000));
  gen->add_option("--measure", measure, "uniform|linear|quadratic|bump");
  gen->add_option("--rule", rule, "half_open|closed (segment cells)");
  auto* defect = space->add_subcommand("defect", "pmGH defect of a term");
  std::string seq_file;
  int term_k = 0;
  defect->add_option("--sequence", seq_file, "sequence JSON")->required();
  defect->add_option("--k", term_k, "term index")->required();

  // ---- ot ----
  auto* ot = app.add_subcommand("ot", "optimal transport");
  ot->require_subcommand(1);
  std::string mu0_file, mu1_file, qcsv = "2,4,8,16,32";
  double q_exp = 2.0;
  int steps = 16;
  auto* wq = ot->add_subcommand("wq", "q-Wasserstein distance");
  wq->add_option("--q", q_exp, "exponent in (1,inf)");
  wq->add_option("--mu0", mu0_file)->required();
  wq->add_option("--mu1", mu1_file)->required();
  auto* winf_cmd = ot->add_subcommand("winf", "bottleneck distance");
  winf_cmd->add_option("--mu0", mu0_file)->required();
  winf_cmd->add_option("--mu1", mu1_file)->required();
  auto* table = ot->add_subcommand("table", "W_q table along a schedule");
  table->add_option("--mu0", mu0_file)->required();
  table->add_option("--mu1", mu1_file)->required();
  table->add_option("--q-schedule", qcsv, "comma separated, increasing");
  auto* lift = ot->add_subcommand("lift", "optimal dynamical plan");
  bool lift_inf = false;
  lift->add_option("--q", q_exp);
  lift->add_flag("--inf", lift_inf, "bottleneck lift");
  lift->add_option("--steps", steps);
  lift->add_option("--mu0", mu0_file)->required();
  lift->add_option("--mu1", mu1_file)->required();

  // ---- plan ----
  auto* plan = app.add_subcommand("plan", "curve plan functionals");
  plan->require_subcommand(1);
  auto* functionals = plan->add_subcommand("functionals", "comp/ke/lip record");
  std::string plan_file;
  std::string ke_qcsv = "2";
  int interior = 8;
  functionals->add_option("--plan", plan_file)->required();
  functionals->add_option("--q", ke_qcsv, "exponents, comma separated");
  functionals->add_option("--interior-samples", interior);
  auto* polygonal = plan->add_subcommand("polygonal", "polygonal geodesic build");
  std::string regime_name = "cd_general", eta_file;
  int M_legs = 4, term_idx = 0;
  double Kc = 0, Nc = 1;
  bool use_inf = false;
  polygonal->add_option("--sequence", seq_file)->required();
  polygonal->add_option("--plan", eta_file)->required();
  polygonal->add_option("--regime", regime_name, "cd_nonneg|cd_general|mcp");
  polygonal->add_option("--q", q_exp);
  polygonal->add_flag("--inf", use_inf, "W_inf build");
  polygonal->add_option("--M", M_legs);
  polygonal->add_option("--term", term_idx);
  polygonal->add_option("--K", Kc);
  polygonal->add_option("--N", Nc);
  polygonal->add_option("--q-schedule", qcsv);

  // ---- calc ----
  auto* calc = app.add_subcommand("calc", "first-order calculus");
  calc->require_subcommand(1);
  std::string f_file, space_file;
  double p_exp = 2.0;
  auto* chp = calc->add_subcommand("chp", "p-Cheeger energy");
  chp->add_option("--p", p_exp);
  chp->add_option("--f", f_file)->required();
  chp->add_option("--space", space_file, "override the function's space_ref");
  auto* tv = calc->add_subcommand("tv", "total variation");
  tv->add_option("--f", f_file)->required();
  tv->add_option("--space", space_file, "override the function's space_ref");
  auto* lip_cmd = calc->add_subcommand("lip", "local Lipschitz constant");
  lip_cmd->add_option("--f", f_file)->required();
  lip_cmd->add_option("--space", space_file, "override the function's space_ref");

  // ---- mosco ----
  auto* mosco = app.add_subcommand("mosco", "liminf experiments");
  mosco->require_subcommand(1);
  auto* run = mosco->add_subcommand("run", "run a configured experiment");
  std::string config_file;
  int jobs = 1;
  run->add_option("--config", config_file)->required();
  run->add_option("--jobs", jobs, "worker pool size");
  auto* report_cmd = mosco->add_subcommand("report", "emit csv/svg from a report");
  std::string report_file, format_name = "csv", out_dir = ".";
  report_cmd->add_option("--report", report_file)->required();
  report_cmd->add_option("--format", format_name, "json|csv|svg");
  report_cmd->add_option("--dir", out_dir);

  for (CLI::App* leaf : {gen, defect, wq, winf_cmd, table, lift, functionals,
                         polygonal, chp, tv, lip_cmd, run, report_cmd})
    leaf->add_option("--out", out, "write the JSON result to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    if (gen->parsed()) {
      GeodesicTemplate t;
      t.kind = template_kind_from_string(tmpl_kind);
      t.extent = {extent, t.kind == TemplateKind::torus_grid ? extent : 0.0};
      auto sp = discretize(t, n_points, named_measure_spec(measure),
                           rule == "closed" ? SegmentRule::closed
                                            : SegmentRule::half_open);
      return emit(space_to_json(*sp), out);
    }
    if (defect->parsed()) {
      auto seq = loader_for(seq_file).load_sequence(
          loader_for(seq_file).read(seq_file));
      Json j;
      j["k"] = term_k;
      j["defect"] = pmgh_defect(seq, term_k);
      j["family"] = seq.family.id;
      return emit(j, out);
    }
    if (wq->parsed() || winf_cmd->parsed() || table->parsed() ||
        lift->parsed()) {
      auto l0 = loader_for(mu0_file);
      auto mu0 = l0.load_density(l0.read(mu0_file));
      auto l1 = loader_for(mu1_file);
      auto mu1 = l1.load_density(l1.read(mu1_file));
      if (wq->parsed())
        return emit(transport_result_to_json(optimal_coupling_q(mu0, mu1, q_exp)),
                    out);
      if (winf_cmd->parsed())
        return emit(transport_result_to_json(winf(mu0, mu1)), out);
      if (table->parsed()) {
        auto tab = winf_limit_check(mu0, mu1, parse_schedule(qcsv));
        Json j;
        j["winf"] = tab.winf_value;
        j["monotone"] = tab.monotone;
        j["close_to_winf"] = tab.close_to_winf;
        Json rows = Json::array();
        for (const auto& r : tab.rows)
          rows.push_back(Json::array({r.q, r.wq}));
        j["rows"] = std::move(rows);
        return emit(j, out);
      }
      auto res = lift_inf ? winf(mu0, mu1) : optimal_coupling_q(mu0, mu1, q_exp);
      return emit(plan_to_json(lift_to_dynamical(res, steps)), out);
    }
    if (functionals->parsed()) {
      auto l = loader_for(plan_file);
      auto cp = l.load_plan(l.read(plan_file));
      auto rep = compression(cp, interior);
      Json j;
      j["comp"] = rep.infinite ? Json("inf") : Json(rep.comp);
      Json kes;
      for (double qv : parse_schedule(ke_qcsv))
        kes[format_double(qv)] = ke_q(cp, qv);
      j["ke_q"] = std::move(kes);
      j["lip"] = lip_const(cp);
      Json meta;
      meta["interior_samples"] = rep.interior_samples;
      meta["sample_count"] = rep.sample_count;
      meta["snap_radius"] = rep.snap_radius;
      j["sampling_meta"] = std::move(meta);
      return emit(j, out);
    }
    if (polygonal->parsed()) {
      auto ls = loader_for(seq_file);
      auto seq = ls.load_sequence(ls.read(seq_file));
      auto lp = loader_for(eta_file);
      auto eta = lp.load_plan(lp.read(eta_file));
      BuildParams params;
      params.K = Kc;
      params.N = Nc;
      PolygonalBuild b =
          use_inf ? build_polygonal_inf(eta, seq, term_idx, M_legs,
                                        regime_from_string(regime_name),
                                        parse_schedule(qcsv), params)
                  : build_polygonal_q(eta, seq, term_idx, M_legs, q_exp,
                                      regime_from_string(regime_name), params);
      return emit(build_to_json(b), out);
    }
    if (chp->parsed() || tv->parsed() || lip_cmd->parsed()) {
      auto l = loader_for(f_file);
      Json jf = l.read(f_file);
      if (!space_file.empty()) jf["space_ref"] = space_file;
      auto f = l.load_function(jf);
      Json j;
      if (chp->parsed()) {
        j["p"] = p_exp;
        j["chp"] = cheeger_p(f, p_exp);
      } else if (tv->parsed()) {
        j["tv"] = total_variation(f);
      } else {
        j["lip"] = local_lip(f);
      }
      return emit(j, out);
    }
    if (run->parsed()) {
      auto l = loader_for(config_file);
      Json j = l.read(config_file);
      auto seq = l.load_sequence(j.at("sequence"));
      MoscoConfig cfg = config_from_json(j);
      cfg.schedule = resolve_schedule(j.at("schedule"), seq);
      cfg.jobs = jobs;
      std::string fname = j.contains("function_sequence")
                              ? j.at("function_sequence").get<std::string>()
                              : j.at("function").get<std::string>();
      std::string kind = j.value("kind", std::string("sobolev"));
      FunctionSequence fs = restrict_to_sequence(
          seq, named_template_function(fname), kind == "bv" ? 1.0 : cfg.p);
      MoscoReport rep = kind == "bv" ? mosco_experiment_bv(fs, cfg)
                                     : mosco_experiment(fs, cfg);
      std::string dir = j.value("out_dir", std::string("."));
      if (const char* env = std::getenv("OUTPUT_DIR")) dir = env;
      emit_report(rep, ReportFormat::json, dir);
      Json summary;
      summary["kind"] = rep.kind;
      summary["liminf_margin"] = rep.liminf_margin;
      summary["liminf_margin_scaled"] = rep.liminf_margin_scaled;
      summary["violations"] = rep.violations;
      summary["infeasible_cells"] = rep.infeasible_cells;
      summary["rows"] = rep.rows.size();
      summary["exit_code"] = rep.exit_code;
      emit(summary, out);
      return rep.exit_code;
    }
    if (report_cmd->parsed()) {
      auto l = loader_for(report_file);
      Json j = l.read(report_file);
      // rebuild the report skeleton needed for csv/svg emission
      MoscoReport rep;
      rep.kind = j.at("kind").get<std::string>();
      rep.term_sizes = j.at("term_sizes").get<std::vector<int>>();
      rep.chp_terms = j.at("chp_terms").get<std::vector<double>>();
      rep.chp_limit = j.at("chp_limit").get<double>();
      for (const auto& jr : j.at("rows")) {
        MoscoRow row;
        row.M = jr.at("M").get<int>();
        row.term = jr.at("term").get<int>();
        row.plan_id = jr.at("plan_id").get<std::string>();
        row.edge_path = jr.at("edge_path").get<bool>();
        row.feasible = jr.at("feasible").get<bool>();
        row.pairing_n = jr.at("pairing_n").get<double>();
        row.pairing_limit = jr.at("pairing_limit").get<double>();
        row.comp = jr.at("comp").get<double>();
        row.ke = jr.at("ke").get<double>();
        row.lip = jr.at("lip").get<double>();
        row.chp_n = jr.at("chp_n").get<double>();
        row.rhs = jr.at("rhs").get<double>();
        row.slack = jr.at("slack").get<double>();
        row.sigma = jr.at("sigma").get<double>();
        row.jensen_lhs = jr.at("jensen")[0].get<double>();
        row.jensen_rhs = jr.at("jensen")[1].get<double>();
        row.kechain_lhs = jr.at("kechain")[0].get<double>();
        row.kechain_rhs = jr.at("kechain")[1].get<double>();
        row.gate_violation = jr.at("gate_violation").get<double>();
        row.cert_value = jr.at("cert_value").get<double>();
        row.cert_factor = jr.at("cert_factor").get<double>();
        if (jr.contains("note")) row.note = jr.at("note").get<std::string>();
        rep.rows.push_back(std::move(row));
      }
      ReportFormat fmt = format_name == "svg"
                             ? ReportFormat::svg
                             : (format_name == "json" ? ReportFormat::json
                                                      : ReportFormat::csv);
      for (const auto& f : emit_report(rep, fmt, out_dir))
        std::cout << f << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 65;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 65;
  }
  return 64;
}
