#include "mms/json_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace mms {

namespace {

Json point_to_json(const Point& p, int dim) {
  if (dim == 1) return Json(p[0]);
  return Json::array({p[0], p[1]});
}

Point point_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() >= 1) {
    Point p{j[0].get<double>(), 0.0};
    if (j.size() > 1) p[1] = j[1].get<double>();
    return p;
  }
  throw std::invalid_argument("json: bad point");
}

}  // namespace

std::string format_double(double v) {
  // shortest representation that round-trips; stable across runs
  std::ostringstream os;
  os.precision(17);
  os << v;
  double back = std::stod(os.str());
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      std::ostringstream t;
      t.precision(prec);
      t << v;
      if (std::stod(t.str()) == v) return t.str();
    }
  }
  return os.str();
}

Json template_to_json(const GeodesicTemplate& t) {
  Json j;
  j["kind"] = to_string(t.kind);
  if (t.kind == TemplateKind::torus_grid)
    j["extent"] = Json::array({t.extent[0], t.extent[1]});
  else
    j["extent"] = t.extent[0];
  j["tiebreak"] = to_string(t.tiebreak);
  return j;
}

GeodesicTemplate template_from_json(const Json& j) {
  GeodesicTemplate t;
  t.kind = template_kind_from_string(j.at("kind").get<std::string>());
  if (j.at("extent").is_array()) {
    t.extent[0] = j.at("extent")[0].get<double>();
    t.extent[1] = j.at("extent")[1].get<double>();
  } else {
    t.extent[0] = j.at("extent").get<double>();
    t.extent[1] = t.kind == TemplateKind::torus_grid ? t.extent[0] : 0.0;
  }
  if (j.contains("tiebreak"))
    t.tiebreak = tiebreak_from_string(j.at("tiebreak").get<std::string>());
  return t;
}

Json space_to_json(const FiniteSpace& sp, bool include_dist) {
  Json j;
  j["template"] = template_to_json(sp.tmpl);
  j["points"] = Json::array();
  for (const auto& p : sp.points)
    j["points"].push_back(point_to_json(p, sp.tmpl.dim()));
  j["weights"] = sp.weights;
  j["basepoint"] = sp.basepoint;
  if (include_dist) j["dist"] = sp.dist;
  return j;
}

SpacePtr space_from_json(const Json& j) {
  GeodesicTemplate t = template_from_json(j.at("template"));
  std::vector<Point> pts;
  for (const auto& p : j.at("points")) pts.push_back(point_from_json(p));
  std::vector<double> w = j.at("weights").get<std::vector<double>>();
  int base = j.value("basepoint", 0);
  std::vector<std::vector<double>> dist;
  if (j.contains("dist"))
    dist = j.at("dist").get<std::vector<std::vector<double>>>();
  return make_space(t, std::move(pts), std::move(w), base, std::move(dist));
}

Json density_to_json(const Density& d) {
  Json j;
  j["space_ref"] = space_to_json(*d.space);
  j["values"] = d.values;
  j["probability"] = d.probability;
  return j;
}

Json plan_to_json(const CurvePlan& p) {
  Json j;
  j["space_ref"] = space_to_json(*p.space);
  j["curves"] = Json::array();
  for (const auto& c : p.curves) {
    Json jc;
    jc["grid"] = c.grid;
    jc["nodes"] = Json::array();
    for (const auto& n : c.nodes)
      jc["nodes"].push_back(point_to_json(n, p.space->tmpl.dim()));
    j["curves"].push_back(std::move(jc));
  }
  j["masses"] = p.masses;
  return j;
}

Json function_to_json(const SpaceFunction& f) {
  Json j;
  j["space_ref"] = space_to_json(*f.space);
  j["values"] = f.values;
  return j;
}

Json JsonLoader::read(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  Json j;
  in >> j;
  return j;
}

SpacePtr JsonLoader::resolve_space(const Json& ref) const {
  if (ref.is_string()) return space_from_json(read(ref.get<std::string>()));
  return space_from_json(ref);
}

Density JsonLoader::load_density(const Json& j) const {
  Density d;
  d.space = resolve_space(j.at("space_ref"));
  d.values = j.at("values").get<std::vector<double>>();
  d.probability = j.value("probability", true);
  d.validate();
  return d;
}

CurvePlan JsonLoader::load_plan(const Json& j) const {
  SpacePtr sp = resolve_space(j.at("space_ref"));
  std::vector<DiscreteCurve> curves;
  for (const auto& jc : j.at("curves")) {
    DiscreteCurve c;
    c.grid = jc.at("grid").get<std::vector<double>>();
    for (const auto& n : jc.at("nodes")) c.nodes.push_back(point_from_json(n));
    curves.push_back(std::move(c));
  }
  std::vector<double> masses = j.at("masses").get<std::vector<double>>();
  return make_plan(sp, std::move(curves), std::move(masses));
}

SpaceFunction JsonLoader::load_function(const Json& j) const {
  SpacePtr sp = resolve_space(j.at("space_ref"));
  return make_function(sp, j.at("values").get<std::vector<double>>());
}

SpaceSequence JsonLoader::load_sequence(const Json& j) const {
  SpaceSequence seq;
  if (j.contains("generate")) {
    const Json& g = j.at("generate");
    seq = make_refining_sequence(
        template_from_json(g.at("template")), g.at("ns").get<std::vector<int>>(),
        g.at("limit_n").get<int>(),
        named_measure_spec(g.value("measure", std::string("uniform"))),
        g.value("rule", std::string("half_open")) == "closed"
            ? SegmentRule::closed
            : SegmentRule::half_open);
    return seq;
  }
  seq.tmpl = template_from_json(j.at("template"));
  for (const auto& t : j.at("terms")) seq.terms.push_back(resolve_space(t));
  seq.limit = resolve_space(j.at("limit"));
  std::string fam = j.value("test_family", std::string("fam-v1"));
  if (fam != "fam-v1")
    throw std::invalid_argument("unknown test family: " + fam);
  seq.family = default_test_family(seq.tmpl);
  for (const auto& t : seq.terms)
    if (!(t->tmpl == seq.tmpl))
      throw std::invalid_argument("sequence: term template mismatch");
  if (!(seq.limit->tmpl == seq.tmpl))
    throw std::invalid_argument("sequence: limit template mismatch");
  return seq;
}

Json transport_result_to_json(const TransportResult& r) {
  Json j;
  j["exponent"] = std::isinf(r.exponent) ? Json("inf") : Json(r.exponent);
  j["value"] = r.value;
  j["cost"] = r.cost;
  Json entries = Json::array();
  for (const auto& e : r.coupling.entries)
    entries.push_back(Json::array({e.i, e.j, e.mass}));
  j["coupling"] = std::move(entries);
  if (!std::isinf(r.exponent)) {
    j["dual_u"] = r.dual_u;
    j["dual_v"] = r.dual_v;
    j["certificate_slack"] = r.certificate_slack;
  } else {
    j["bottleneck"] = r.value;
  }
  return j;
}

namespace {

Json bound_to_json(const CompressionBound& b) {
  Json j;
  j["kind"] = to_string(b.kind);
  j["K"] = b.K;
  j["N"] = std::isinf(b.N) ? Json("inf") : Json(b.N);
  j["scale"] = b.scale;
  j["base"] = b.base;
  j["value"] = b.value;
  return j;
}

}  // namespace

Json build_to_json(const PolygonalBuild& b) {
  Json j;
  j["feasible"] = b.feasible;
  if (!b.note.empty()) j["note"] = b.note;
  j["M"] = b.M;
  j["q"] = std::isinf(b.q) ? Json("inf") : Json(b.q);
  j["regime"] = to_string(b.regime);
  j["sigma"] = b.sigma;
  j["ke_eta"] = b.ke_eta;
  j["lip_eta"] = b.lip_eta;
  j["comp_eta"] = b.comp_eta;
  j["ke_result"] = b.ke_result;
  j["lip_result"] = b.lip_result;
  j["comp_result"] = b.comp_result;
  j["snap_radius"] = b.snap_radius;
  j["eta_snap_radius"] = b.eta_snap_radius;
  j["certificate"] = bound_to_json(b.certificate);
  j["cert_factor"] = b.cert_factor;
  j["jensen"] = Json::array({b.jensen_lhs, b.jensen_rhs});
  j["kechain"] = Json::array({b.kechain_lhs, b.kechain_rhs});
  j["endpoint_l1_shift"] = b.endpoint_l1_shift;
  Json legs = Json::array();
  for (const auto& l : b.legs) {
    Json jl;
    jl["wq"] = l.wq;
    jl["discarded"] = l.discarded;
    jl["gate_bound"] = l.gate_bound;
    jl["ke"] = l.ke;
    jl["lip"] = l.lip;
    legs.push_back(std::move(jl));
  }
  j["legs"] = std::move(legs);
  if (b.feasible) j["result"] = plan_to_json(b.result);
  return j;
}

Json report_to_json(const MoscoReport& r) {
  Json j;
  j["kind"] = r.kind;
  Json cfg;
  cfg["regime"] = to_string(r.config.regime);
  cfg["p"] = r.config.p;
  cfg["K"] = r.config.K;
  cfg["N"] = r.config.N;
  Json sched = Json::array();
  for (auto [M, term] : r.config.schedule)
    sched.push_back(Json::array({M, term}));
  cfg["schedule"] = std::move(sched);
  cfg["q_schedule"] = r.config.q_schedule;
  cfg["corpus_seed"] = r.config.corpus_seed;
  cfg["corpus_pair_cap"] = r.config.corpus_pair_cap;
  cfg["corpus_grid_cells"] = r.config.corpus_grid_cells;
  cfg["lift_steps"] = r.config.lift_steps;
  cfg["interior_samples"] = r.config.interior_samples;
  cfg["tolerance"] = r.config.tolerance;
  j["config"] = std::move(cfg);
  j["corpus_id"] = r.corpus_id;
  j["term_sizes"] = r.term_sizes;
  j["chp_terms"] = r.chp_terms;
  j["chp_limit"] = r.chp_limit;
  j["liminf_margin"] = r.liminf_margin;
  j["liminf_margin_scaled"] = r.liminf_margin_scaled;
  j["violations"] = r.violations;
  j["infeasible_cells"] = r.infeasible_cells;
  j["exit_code"] = r.exit_code;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json jr;
    jr["M"] = row.M;
    jr["term"] = row.term;
    jr["plan_id"] = row.plan_id;
    jr["edge_path"] = row.edge_path;
    jr["feasible"] = row.feasible;
    if (!row.note.empty()) jr["note"] = row.note;
    jr["pairing_n"] = row.pairing_n;
    jr["pairing_limit"] = row.pairing_limit;
    jr["comp"] = row.comp;
    jr["ke"] = row.ke;
    jr["lip"] = row.lip;
    jr["chp_n"] = row.chp_n;
    jr["rhs"] = row.rhs;
    jr["slack"] = row.slack;
    jr["sigma"] = row.sigma;
    jr["jensen"] = Json::array({row.jensen_lhs, row.jensen_rhs});
    jr["kechain"] = Json::array({row.kechain_lhs, row.kechain_rhs});
    jr["gate"] = Json::array({row.gate_discarded, row.gate_bound});
    jr["gate_violation"] = row.gate_violation;
    jr["cert_value"] = row.cert_value;
    jr["cert_factor"] = row.cert_factor;
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::function<double(const Point&)> named_template_function(
    const std::string& name) {
  if (name == "one") return [](const Point&) { return 1.0; };
  if (name == "coord") return [](const Point& p) { return p[0]; };
  if (name == "coord2") return [](const Point& p) { return p[0] * p[0]; };
  if (name == "cos1")
    return [](const Point& p) { return std::cos(2 * std::numbers::pi * p[0]); };
  if (name == "ramp")
    return [](const Point& p) {
      return std::clamp((p[0] - 0.3) / 0.2, 0.0, 1.0);
    };
  if (name == "abs-center")
    return [](const Point& p) { return std::fabs(p[0] - 0.5); };
  throw std::invalid_argument("unknown function name: " + name);
}

std::vector<std::string> shipped_function_names() {
  return {"one", "coord", "coord2", "cos1", "ramp", "abs-center"};
}

MeasureSpec named_measure_spec(const std::string& name) {
  if (name == "uniform") return [](const Point&) { return 1.0; };
  if (name == "linear") return [](const Point& p) { return 2 * p[0]; };
  if (name == "quadratic")
    return [](const Point& p) { return 1.0 + p[0] * p[0]; };
  if (name == "bump")
    return [](const Point& p) {
      return std::fmax(0.1, 1.0 - 4 * (p[0] - 0.5) * (p[0] - 0.5));
    };
  throw std::invalid_argument("unknown measure spec: " + name);
}

// ---------------------------------------------------------------------------
// report emission

namespace {

std::string csv_of_report(const MoscoReport& r) {
  std::ostringstream os;
  os << "M,term,term_size,plan_id,edge_path,feasible,pairing_n,pairing_limit,"
        "comp,ke,lip,chp_n,rhs,slack,sigma,jensen_lhs,jensen_rhs,kechain_lhs,"
        "kechain_rhs,gate_violation,cert_value,cert_factor,note\n";
  for (const auto& row : r.rows) {
    os << row.M << ',' << row.term << ',' << r.term_sizes[row.term] << ','
       << row.plan_id << ',' << row.edge_path << ',' << row.feasible << ','
       << format_double(row.pairing_n) << ',' << format_double(row.pairing_limit)
       << ',' << format_double(row.comp) << ',' << format_double(row.ke) << ','
       << format_double(row.lip) << ',' << format_double(row.chp_n) << ','
       << format_double(row.rhs) << ',' << format_double(row.slack) << ','
       << format_double(row.sigma) << ',' << format_double(row.jensen_lhs)
       << ',' << format_double(row.jensen_rhs) << ','
       << format_double(row.kechain_lhs) << ','
       << format_double(row.kechain_rhs) << ','
       << format_double(row.gate_violation) << ','
       << format_double(row.cert_value) << ',' << format_double(row.cert_factor)
       << ',';
    for (char c : row.note) os << (c == ',' ? ';' : c);
    os << '\n';
  }
  return os.str();
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

std::string svg_chart(const std::string& title,
                      const std::vector<Series>& series) {
  const double W = 640, H = 400, ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.pts) {
      xmin = std::fmin(xmin, x);
      xmax = std::fmax(xmax, x);
      ymin = std::fmin(ymin, y);
      ymax = std::fmax(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  auto X = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto Y = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
     << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        "font-family=\"monospace\" font-size=\"14\">"
     << title << "</text>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"" << H - mb + 16
     << "\" font-family=\"monospace\" font-size=\"10\">" << format_double(xmin)
     << "</text>\n"
     << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
     << format_double(xmax) << "</text>\n"
     << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb
     << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
     << format_double(ymin) << "</text>\n"
     << "<text x=\"" << ml - 4 << "\" y=\"" << mt
     << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
     << format_double(ymax) << "</text>\n";
  int ci = 0;
  for (const auto& s : series) {
    const char* color = colors[ci % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : s.pts) os << X(x) << ',' << Y(y) << ' ';
    os << "\"/>\n";
    for (auto [x, y] : s.pts)
      os << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y)
         << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 14 * (ci + 1)
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" "
          "fill=\""
       << color << "\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<std::string> emit_report(const MoscoReport& report,
                                     ReportFormat format,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& content) {
    fs::path p = fs::path(out_dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    written.push_back(p.string());
  };
  switch (format) {
    case ReportFormat::json:
      write("report.json", report_to_json(report).dump(2) + "\n");
      break;
    case ReportFormat::csv:
      write("rows.csv", csv_of_report(report));
      break;
    case ReportFormat::svg: {
      // margin vs n: worst |pairing residual| per term, plus energies
      std::map<int, double> residual_by_term;
      std::map<int, std::map<int, double>> factor_by_M_term;
      for (const auto& row : report.rows) {
        if (!row.feasible) continue;
        double res = std::fabs(row.pairing_n - row.pairing_limit);
        auto it = residual_by_term.find(row.term);
        if (it == residual_by_term.end())
          residual_by_term[row.term] = res;
        else
          it->second = std::fmax(it->second, res);
        factor_by_M_term[row.M][row.term] = row.cert_factor;
      }
      Series margins{"max |pairing residual|", {}};
      for (auto [term, res] : residual_by_term)
        margins.pts.push_back({static_cast<double>(report.term_sizes[term]),
                               res});
      Series energies{"chp_n", {}};
      for (size_t k = 0; k < report.chp_terms.size(); ++k)
        energies.pts.push_back({static_cast<double>(report.term_sizes[k]),
                                report.chp_terms[k]});
      write("margin_vs_n.svg",
            svg_chart("pairing residual and energy vs n",
                      {margins, energies}));
      Series factors{"cert_factor", {}};
      for (auto& [M, by_term] : factor_by_M_term) {
        double worst = 1;
        for (auto [term, f] : by_term) worst = std::fmax(worst, f);
        factors.pts.push_back({static_cast<double>(M), worst});
      }
      write("factor_vs_M.svg", svg_chart("certificate factor vs M", {factors}));
      break;
    }
  }
  return written;
}

}  // namespace mms
