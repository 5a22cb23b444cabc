#include "morseflow/problem.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json_io.h"

namespace morseflow {

namespace detail {

json number_to_json(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

double number_from_json(const json &j, const std::string &field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw ProblemError("field '" + field + "': expected a number");
}

namespace {

void check_keys(const json &j, const std::string &where,
                std::initializer_list<const char *> allowed) {
  if (!j.is_object()) throw ProblemError("field '" + where + "': expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto &item : j.items()) {
    if (!ok.count(item.key())) {
      throw ProblemError("unknown field '" +
                         (where.empty() ? item.key() : where + "." + item.key()) + "'");
    }
  }
}

template <class T>
void read(const json &obj, const char *key, const std::string &where, T &out) {
  if (!obj.contains(key)) return;
  const std::string field = where.empty() ? key : where + "." + key;
  const json &v = obj.at(key);
  if constexpr (std::is_same_v<T, double>) {
    out = number_from_json(v, field);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ProblemError("field '" + field + "': expected a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw ProblemError("field '" + field + "': expected an integer");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        out = v.get<T>();
      } else if (v.get<long long>() < 0) {
        throw ProblemError("field '" + field + "': expected a non-negative integer");
      } else {
        out = static_cast<T>(v.get<long long>());
      }
    } else {
      out = v.get<T>();
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ProblemError("field '" + field + "': expected a string");
    out = v.get<std::string>();
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (!v.is_array()) throw ProblemError("field '" + field + "': expected an array");
    out.clear();
    for (const json &e : v) {
      if (!e.is_string()) {
        throw ProblemError("field '" + field + "': expected an array of strings");
      }
      out.push_back(e.get<std::string>());
    }
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!v.is_array()) throw ProblemError("field '" + field + "': expected an array");
    out.clear();
    for (const json &e : v) out.push_back(number_from_json(e, field));
  } else if constexpr (std::is_same_v<T, std::vector<Interval>>) {
    if (!v.is_array()) throw ProblemError("field '" + field + "': expected an array");
    out.clear();
    for (const json &e : v) {
      if (!e.is_array() || e.size() != 2) {
        throw ProblemError("field '" + field + "': expected [lo, hi] pairs");
      }
      out.push_back({number_from_json(e[0], field), number_from_json(e[1], field)});
    }
  } else {
    static_assert(sizeof(T) == 0, "unsupported field type");
  }
}

json intervals_to_json(const std::vector<Interval> &v) {
  json out = json::array();
  for (const Interval &iv : v) {
    out.push_back({number_to_json(iv.lo), number_to_json(iv.hi)});
  }
  return out;
}

json numbers_to_json(const std::vector<double> &v) {
  json out = json::array();
  for (double x : v) out.push_back(number_to_json(x));
  return out;
}

}  // namespace

json problem_to_json_value(const ProblemSpec &spec) {
  const ProblemTolerances &t = spec.tolerances;
  const ProblemSettings &s = spec.settings;
  json j;
  j["name"] = spec.name;
  j["variables"] = spec.variables;
  j["objective"] = spec.objective;
  j["constraints"] = spec.constraints;
  j["box"] = intervals_to_json(spec.box);
  j["proper_on_box"] = spec.proper_on_box;
  j["seed"] = spec.seed;
  j["tolerances"] = {
      {"rank_tol", t.space.rank_tol},
      {"retract_tol", t.space.retract_tol},
      {"level_tol", t.space.level_tol},
      {"member_tol", t.space.member_tol},
      {"capture_radius", t.space.capture_radius},
      {"max_iter", t.space.max_iter},
      {"singular_seed_density", t.space.singular_seed_density},
      {"crit_tol", t.crit_tol},
      {"cluster_tol", t.cluster_tol},
      {"value_merge_tol", t.value_merge_tol},
      {"gap_tol", t.gap_tol},
      {"grad_tol", t.grad_tol},
      {"check_slack", t.check_slack},
  };
  j["settings"] = {
      {"grid_density", s.grid_density},
      {"classify_probe_radius", s.classify_probe_radius},
      {"fit_samples", s.fit_samples},
      {"fit_radius", s.fit_radius},
      {"delta_cap", s.delta_cap},
      {"safety", s.safety},
      {"verify_starts", s.verify_starts},
      {"bands", intervals_to_json(s.bands)},
      {"cond2_samples", s.cond2_samples},
      {"cond2_sample_fraction", s.cond2_sample_fraction},
      {"radii", numbers_to_json(s.radii)},
      {"cond4_per_radius", s.cond4_per_radius},
      {"tube_rho", s.tube_rho},
      {"slice_probe_radius", s.slice_probe_radius},
      {"max_recorded_trajectories", s.max_recorded_trajectories},
  };
  return j;
}

ProblemSpec problem_from_json_value(const json &j) {
  check_keys(j, "",
             {"name", "variables", "objective", "constraints", "box",
              "proper_on_box", "seed", "tolerances", "settings"});
  for (const char *key : {"name", "variables", "objective", "box"}) {
    if (!j.contains(key)) {
      throw ProblemError(std::string("missing required field '") + key + "'");
    }
  }
  ProblemSpec spec;
  read(j, "name", "", spec.name);
  read(j, "variables", "", spec.variables);
  read(j, "objective", "", spec.objective);
  read(j, "constraints", "", spec.constraints);
  read(j, "box", "", spec.box);
  read(j, "proper_on_box", "", spec.proper_on_box);
  read(j, "seed", "", spec.seed);
  if (j.contains("tolerances")) {
    const json &t = j.at("tolerances");
    check_keys(t, "tolerances",
               {"rank_tol", "retract_tol", "level_tol", "member_tol",
                "capture_radius", "max_iter", "singular_seed_density",
                "crit_tol", "cluster_tol", "value_merge_tol", "gap_tol",
                "grad_tol", "check_slack"});
    ProblemTolerances &o = spec.tolerances;
    read(t, "rank_tol", "tolerances", o.space.rank_tol);
    read(t, "retract_tol", "tolerances", o.space.retract_tol);
    read(t, "level_tol", "tolerances", o.space.level_tol);
    read(t, "member_tol", "tolerances", o.space.member_tol);
    read(t, "capture_radius", "tolerances", o.space.capture_radius);
    read(t, "max_iter", "tolerances", o.space.max_iter);
    read(t, "singular_seed_density", "tolerances", o.space.singular_seed_density);
    read(t, "crit_tol", "tolerances", o.crit_tol);
    read(t, "cluster_tol", "tolerances", o.cluster_tol);
    read(t, "value_merge_tol", "tolerances", o.value_merge_tol);
    read(t, "gap_tol", "tolerances", o.gap_tol);
    read(t, "grad_tol", "tolerances", o.grad_tol);
    read(t, "check_slack", "tolerances", o.check_slack);
  }
  if (j.contains("settings")) {
    const json &s = j.at("settings");
    check_keys(s, "settings",
               {"grid_density", "classify_probe_radius", "fit_samples",
                "fit_radius", "delta_cap", "safety", "verify_starts", "bands",
                "cond2_samples", "cond2_sample_fraction", "radii",
                "cond4_per_radius", "tube_rho", "slice_probe_radius",
                "max_recorded_trajectories"});
    ProblemSettings &o = spec.settings;
    read(s, "grid_density", "settings", o.grid_density);
    read(s, "classify_probe_radius", "settings", o.classify_probe_radius);
    read(s, "fit_samples", "settings", o.fit_samples);
    read(s, "fit_radius", "settings", o.fit_radius);
    read(s, "delta_cap", "settings", o.delta_cap);
    read(s, "safety", "settings", o.safety);
    read(s, "verify_starts", "settings", o.verify_starts);
    read(s, "bands", "settings", o.bands);
    read(s, "cond2_samples", "settings", o.cond2_samples);
    read(s, "cond2_sample_fraction", "settings", o.cond2_sample_fraction);
    read(s, "radii", "settings", o.radii);
    read(s, "cond4_per_radius", "settings", o.cond4_per_radius);
    read(s, "tube_rho", "settings", o.tube_rho);
    read(s, "slice_probe_radius", "settings", o.slice_probe_radius);
    read(s, "max_recorded_trajectories", "settings", o.max_recorded_trajectories);
  }
  return spec;
}

}  // namespace detail

void validate(const ProblemSpec &spec) {
  if (spec.variables.empty()) throw ProblemError("field 'variables': must not be empty");
  std::set<std::string> seen;
  for (const std::string &v : spec.variables) {
    const bool ident = !v.empty() && std::isalpha(static_cast<unsigned char>(v[0])) &&
                       std::all_of(v.begin(), v.end(), [](char c) {
                         return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                       });
    if (!ident) throw ProblemError("field 'variables': '" + v + "' is not an identifier");
    if (!seen.insert(v).second) {
      throw ProblemError("field 'variables': duplicate variable '" + v + "'");
    }
  }
  try {
    parse_polynomial(spec.objective, spec.variables);
  } catch (const ParseError &e) {
    throw ProblemError(std::string("field 'objective': ") + e.what());
  }
  for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
    try {
      parse_polynomial(spec.constraints[i], spec.variables);
    } catch (const ParseError &e) {
      throw ProblemError("field 'constraints[" + std::to_string(i) + "]': " + e.what());
    }
  }
  if (spec.box.size() != spec.variables.size()) {
    throw ProblemError("field 'box': expected one interval per variable");
  }
  for (std::size_t i = 0; i < spec.box.size(); ++i) {
    const Interval &iv = spec.box[i];
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi)) {
      throw ProblemError("field 'box[" + std::to_string(i) +
                         "]': need finite bounds with lo < hi");
    }
  }
  const ProblemSettings &s = spec.settings;
  if (s.grid_density < 2) throw ProblemError("field 'settings.grid_density': must be >= 2");
  for (std::size_t i = 0; i < s.bands.size(); ++i) {
    if (!(s.bands[i].lo < s.bands[i].hi)) {
      throw ProblemError("field 'settings.bands[" + std::to_string(i) +
                         "]': need lo < hi");
    }
  }
  for (std::size_t i = 1; i < s.radii.size(); ++i) {
    if (!(s.radii[i] < s.radii[i - 1])) {
      throw ProblemError("field 'settings.radii': must be strictly decreasing");
    }
  }
  if (!(s.safety > 0.0 && s.safety <= 1.0)) {
    throw ProblemError("field 'settings.safety': must lie in (0, 1]");
  }
  if (!(s.cond2_sample_fraction > 0.0 && s.cond2_sample_fraction <= 1.0)) {
    throw ProblemError("field 'settings.cond2_sample_fraction': must lie in (0, 1]");
  }
  if (s.max_recorded_trajectories < 0) {
    throw ProblemError("field 'settings.max_recorded_trajectories': must be >= 0");
  }
}

ProblemSpec parse_problem(std::string_view json_text) {
  detail::json j;
  try {
    j = detail::json::parse(json_text);
  } catch (const detail::json::parse_error &e) {
    throw ProblemError(std::string("problem file: ") + e.what());
  }
  ProblemSpec spec = detail::problem_from_json_value(j);
  validate(spec);
  return spec;
}

ProblemSpec load_problem(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_problem(buf.str());
  } catch (const ProblemError &e) {
    throw ProblemError(path.string() + ": " + e.what());
  }
}

std::string problem_to_json(const ProblemSpec &spec) {
  return detail::problem_to_json_value(spec).dump(2) + "\n";
}

Objective make_objective(const ProblemSpec &spec) {
  return Objective(parse_polynomial(spec.objective, spec.variables));
}

SingularSpace make_space(const ProblemSpec &spec) {
  PolynomialSystem g(spec.variables);
  for (const std::string &c : spec.constraints) {
    g.push_back(parse_polynomial(c, spec.variables));
  }
  return SingularSpace(std::move(g), spec.box, spec.tolerances.space);
}

std::vector<std::string> benchmark_names() {
  return {"cone", "planes", "quartic", "saddle"};
}

ProblemSpec benchmark(std::string_view name) {
  ProblemSpec spec;
  spec.name = std::string(name);
  spec.proper_on_box = true;
  if (name == "saddle") {
    spec.variables = {"x", "y"};
    spec.objective = "x^2 - y^2";
    spec.box = {{-2, 2}, {-2, 2}};
  } else if (name == "quartic") {
    // x^4 flows slowly near 0; the wider box allows larger steps.
    spec.variables = {"x"};
    spec.objective = "x^4";
    spec.box = {{-10, 10}};
  } else if (name == "planes") {
    spec.variables = {"x", "y"};
    spec.objective = "x^2 - y^2";
    spec.constraints = {"x*y"};
    spec.box = {{-2, 2}, {-2, 2}};
  } else if (name == "cone") {
    spec.variables = {"x", "y", "z"};
    spec.objective = "x";
    spec.constraints = {"x^2 + y^2 - z^2"};
    spec.box = {{-2, 2}, {-2, 2}, {-2, 2}};
  } else {
    throw ProblemError("unknown benchmark '" + std::string(name) + "'");
  }
  validate(spec);
  return spec;
}

}  // namespace morseflow
