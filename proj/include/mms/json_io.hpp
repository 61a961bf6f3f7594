#pragma once

#include <json.hpp>
#include <string>

#include "mms/harness.hpp"
#include "mms/interpolation.hpp"
#include "mms/transport.hpp"

namespace mms {

// ordered_json keeps emission deterministic (fixed key order)
using Json = nlohmann::ordered_json;

Json template_to_json(const GeodesicTemplate& t);
GeodesicTemplate template_from_json(const Json& j);

Json space_to_json(const FiniteSpace& sp, bool include_dist = false);
SpacePtr space_from_json(const Json& j);

Json density_to_json(const Density& d);
Json plan_to_json(const CurvePlan& p);
Json function_to_json(const SpaceFunction& f);

// Loader with a base directory: space_ref fields may be file paths or
// inline space objects.
struct JsonLoader {
  std::string base_dir;

  Json read(const std::string& path) const;
  SpacePtr resolve_space(const Json& ref) const;
  Density load_density(const Json& j) const;
  CurvePlan load_plan(const Json& j) const;
  SpaceFunction load_function(const Json& j) const;
  SpaceSequence load_sequence(const Json& j) const;
};

Json transport_result_to_json(const TransportResult& r);
Json build_to_json(const PolygonalBuild& b);
Json report_to_json(const MoscoReport& r);

// Named template functions shipped with the experiments ("funcs-v1").
std::function<double(const Point&)> named_template_function(
    const std::string& name);
std::vector<std::string> shipped_function_names();

// Named measure specs for discretize ("uniform", "linear", "quadratic",
// "bump").
MeasureSpec named_measure_spec(const std::string& name);

std::string format_double(double v);  // deterministic shortest round-trip

}  // namespace mms
