#include "morseflow/report.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_io.h"

namespace morseflow {

using detail::json;
using detail::number_from_json;
using detail::number_to_json;

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv-bundle") return ReportFormat::csv_bundle;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

namespace {

json vec_to_json(const Vector &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

Vector vec_from_json(const json &j, const std::string &field) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number_from_json(j[i], field);
  }
  return v;
}

template <class E>
E enum_from_string(const std::string &s, std::initializer_list<E> all) {
  for (E e : all) {
    if (to_string(e) == s) return e;
  }
  throw std::invalid_argument("unknown enum value '" + s + "' in report");
}

Termination termination_from_string(const std::string &s) {
  return enum_from_string<Termination>(
      s, {Termination::reach_level, Termination::converged, Termination::arc_budget,
          Termination::time_budget, Termination::left_box, Termination::step_budget,
          Termination::retraction_failure, Termination::step_underflow});
}

json point_json(const CriticalPoint &cp) {
  return {{"location", vec_to_json(cp.location)},
          {"value", number_to_json(cp.value)},
          {"grad_norm", number_to_json(cp.grad_norm)},
          {"kind", to_string(cp.kind)},
          {"cluster_radius", number_to_json(cp.cluster_radius)},
          {"singular", cp.singular}};
}

CriticalPoint point_from(const json &j) {
  CriticalPoint cp;
  cp.location = vec_from_json(j.at("location"), "location");
  cp.value = number_from_json(j.at("value"), "value");
  cp.grad_norm = number_from_json(j.at("grad_norm"), "grad_norm");
  cp.kind = point_kind_from_string(j.at("kind").get<std::string>());
  cp.cluster_radius = number_from_json(j.at("cluster_radius"), "cluster_radius");
  cp.singular = j.at("singular").get<bool>();
  return cp;
}

json fit_json(const LojasiewiczFit &fit) {
  return {{"theta", number_to_json(fit.theta)},
          {"C", number_to_json(fit.constant_C)},
          {"delta", number_to_json(fit.radius_delta)},
          {"critical_value", number_to_json(fit.critical_value)},
          {"n_samples", fit.n_samples},
          {"envelope_slack", number_to_json(fit.envelope_slack)},
          {"holdout_pass_fraction", number_to_json(fit.holdout_pass_fraction)}};
}

LojasiewiczFit fit_from(const json &j) {
  LojasiewiczFit fit;
  fit.theta = number_from_json(j.at("theta"), "theta");
  fit.constant_C = number_from_json(j.at("C"), "C");
  fit.radius_delta = number_from_json(j.at("delta"), "delta");
  fit.critical_value = number_from_json(j.at("critical_value"), "critical_value");
  fit.n_samples = j.at("n_samples").get<int>();
  fit.envelope_slack = number_from_json(j.at("envelope_slack"), "envelope_slack");
  fit.holdout_pass_fraction =
      number_from_json(j.at("holdout_pass_fraction"), "holdout_pass_fraction");
  return fit;
}

json condition_json(const ConditionReport &rep) {
  json witnesses = json::object();
  for (const auto &[k, v] : rep.witnesses) witnesses[k] = number_to_json(v);
  json series = json::object();
  for (const auto &[k, v] : rep.series) {
    json arr = json::array();
    for (double x : v) arr.push_back(number_to_json(x));
    series[k] = arr;
  }
  json table = json::array();
  for (const ModulusRow &r : rep.modulus_table) {
    table.push_back({number_to_json(r.r), number_to_json(r.d), r.n_landed, r.n_captured});
  }
  return {{"condition", rep.condition},
          {"verdict", to_string(rep.verdict)},
          {"message", rep.message},
          {"witnesses", witnesses},
          {"series", series},
          {"modulus_table", table}};
}

ConditionReport condition_from(const json &j) {
  ConditionReport rep;
  rep.condition = j.at("condition").get<int>();
  rep.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  rep.message = j.at("message").get<std::string>();
  for (const auto &item : j.at("witnesses").items()) {
    rep.witnesses[item.key()] = number_from_json(item.value(), item.key());
  }
  for (const auto &item : j.at("series").items()) {
    std::vector<double> v;
    for (const json &x : item.value()) v.push_back(number_from_json(x, item.key()));
    rep.series[item.key()] = std::move(v);
  }
  for (const json &row : j.at("modulus_table")) {
    ModulusRow r;
    r.r = number_from_json(row.at(0), "modulus_table");
    r.d = number_from_json(row.at(1), "modulus_table");
    r.n_landed = row.at(2).get<int>();
    r.n_captured = row.at(3).get<int>();
    rep.modulus_table.push_back(r);
  }
  return rep;
}

json trajectory_json(const RecordedTrajectory &rt) {
  json samples = json::array();
  for (const FlowSample &s : rt.trajectory.samples) {
    samples.push_back({number_to_json(s.t), vec_to_json(s.y), number_to_json(s.f),
                       number_to_json(s.grad_norm), number_to_json(s.arc_len)});
  }
  return {{"label", rt.label},
          {"direction", to_string(rt.trajectory.direction)},
          {"termination", to_string(rt.trajectory.termination)},
          {"message", rt.trajectory.message},
          {"samples", samples}};
}

RecordedTrajectory trajectory_from(const json &j) {
  RecordedTrajectory rt;
  rt.label = j.at("label").get<std::string>();
  rt.trajectory.direction = j.at("direction").get<std::string>() == "ascend"
                                ? Direction::ascend
                                : Direction::descend;
  rt.trajectory.termination =
      termination_from_string(j.at("termination").get<std::string>());
  rt.trajectory.message = j.at("message").get<std::string>();
  for (const json &s : j.at("samples")) {
    FlowSample fs;
    fs.t = number_from_json(s.at(0), "t");
    fs.y = vec_from_json(s.at(1), "y");
    fs.f = number_from_json(s.at(2), "f");
    fs.grad_norm = number_from_json(s.at(3), "grad_norm");
    fs.arc_len = number_from_json(s.at(4), "arc_len");
    rt.trajectory.samples.push_back(std::move(fs));
  }
  return rt;
}

json report_json(const ExperimentReport &r) {
  json stages = json::array();
  for (Stage s : r.stages) stages.push_back(to_string(s));
  json cps = json::array();
  for (const CriticalPoint &cp : r.critical_points) cps.push_back(point_json(cp));
  json fits = json::array();
  for (const FitEntry &e : r.lojasiewicz_fits) {
    fits.push_back({{"critical_index", e.critical_index},
                    {"fit", e.fit ? fit_json(*e.fit) : json(nullptr)},
                    {"error", e.error}});
  }
  json conds = json::array();
  for (const ConditionReport &c : r.conditions) conds.push_back(condition_json(c));
  json trajs = json::array();
  for (const RecordedTrajectory &t : r.trajectories) trajs.push_back(trajectory_json(t));
  return {{"problem", detail::problem_to_json_value(r.problem)},
          {"stages", stages},
          {"critical_points", cps},
          {"critical_seeds", r.critical_seeds},
          {"critical_discarded", r.critical_discarded},
          {"lojasiewicz_fits", fits},
          {"conditions", conds},
          {"corollary_verdict", to_string(r.corollary_verdict)},
          {"stage_errors", r.stage_errors},
          {"trajectories", trajs}};
}

void write_file(const std::filesystem::path &p, const std::string &content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  out.close();
  if (!out) throw std::runtime_error("error writing " + p.string());
}

std::string csv_quote(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string sanitize(const std::string &label) {
  std::string out;
  for (char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  }
  return out;
}

}  // namespace

std::string critical_points_to_json(const std::vector<CriticalPoint> &cps) {
  json arr = json::array();
  for (const CriticalPoint &cp : cps) arr.push_back(point_json(cp));
  return arr.dump(2) + "\n";
}

std::string fit_to_json(const LojasiewiczFit &fit) { return fit_json(fit).dump(2) + "\n"; }

std::string condition_to_json(const ConditionReport &rep) {
  return condition_json(rep).dump(2) + "\n";
}

std::string report_to_json(const ExperimentReport &report) {
  return report_json(report).dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw std::invalid_argument(std::string("report: ") + e.what());
  }
  try {
    ExperimentReport r;
    r.problem = detail::problem_from_json_value(j.at("problem"));
    for (const json &s : j.at("stages")) {
      const auto parsed = parse_stages(s.get<std::string>());
      r.stages.insert(r.stages.end(), parsed.begin(), parsed.end());
    }
    for (const json &cp : j.at("critical_points")) r.critical_points.push_back(point_from(cp));
    r.critical_seeds = j.at("critical_seeds").get<int>();
    r.critical_discarded = j.at("critical_discarded").get<int>();
    for (const json &e : j.at("lojasiewicz_fits")) {
      FitEntry entry;
      entry.critical_index = e.at("critical_index").get<int>();
      if (!e.at("fit").is_null()) entry.fit = fit_from(e.at("fit"));
      entry.error = e.at("error").get<std::string>();
      r.lojasiewicz_fits.push_back(std::move(entry));
    }
    for (const json &c : j.at("conditions")) r.conditions.push_back(condition_from(c));
    r.corollary_verdict = verdict_from_string(j.at("corollary_verdict").get<std::string>());
    r.stage_errors = j.at("stage_errors").get<std::map<std::string, std::string>>();
    for (const json &t : j.at("trajectories")) r.trajectories.push_back(trajectory_from(t));
    return r;
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("report: ") + e.what());
  }
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport &report,
                                               ReportFormat format,
                                               const std::filesystem::path &out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> files;

  if (format == ReportFormat::json) {
    const fs::path p = out_dir / "report.json";
    write_file(p, report_to_json(report));
    files.push_back(p);
    return files;
  }

  {
    std::string s = "index,kind,value,grad_norm,cluster_radius,singular";
    const std::size_t n = report.problem.variables.size();
    for (std::size_t i = 0; i < n; ++i) s += ",x_" + std::to_string(i + 1);
    s += "\n";
    for (std::size_t k = 0; k < report.critical_points.size(); ++k) {
      const CriticalPoint &cp = report.critical_points[k];
      s += std::to_string(k) + "," + std::string(to_string(cp.kind)) + "," +
           format_double(cp.value) + "," + format_double(cp.grad_norm) + "," +
           format_double(cp.cluster_radius) + "," + (cp.singular ? "1" : "0");
      for (Eigen::Index i = 0; i < cp.location.size(); ++i) {
        s += "," + format_double(cp.location[i]);
      }
      s += "\n";
    }
    files.push_back(out_dir / "critical_points.csv");
    write_file(files.back(), s);
  }
  {
    std::string s =
        "critical_index,theta,C,delta,critical_value,n_samples,envelope_slack,"
        "holdout_pass_fraction,error\n";
    for (const FitEntry &e : report.lojasiewicz_fits) {
      s += std::to_string(e.critical_index);
      if (e.fit) {
        const LojasiewiczFit &f = *e.fit;
        s += "," + format_double(f.theta) + "," + format_double(f.constant_C) + "," +
             format_double(f.radius_delta) + "," + format_double(f.critical_value) +
             "," + std::to_string(f.n_samples) + "," + format_double(f.envelope_slack) +
             "," + format_double(f.holdout_pass_fraction) + ",";
      } else {
        s += ",,,,,,,,";
      }
      s += csv_quote(e.error) + "\n";
    }
    files.push_back(out_dir / "fits.csv");
    write_file(files.back(), s);
  }
  {
    std::string s = "report_index,condition,verdict,witness,value\n";
    for (std::size_t k = 0; k < report.conditions.size(); ++k) {
      const ConditionReport &c = report.conditions[k];
      const std::string head = std::to_string(k) + "," + std::to_string(c.condition) +
                               "," + std::string(to_string(c.verdict)) + ",";
      s += head + "message," + csv_quote(c.message) + "\n";
      for (const auto &[key, v] : c.witnesses) s += head + key + "," + format_double(v) + "\n";
    }
    s += "-1,0," + std::string(to_string(report.corollary_verdict)) + ",corollary,\n";
    files.push_back(out_dir / "conditions.csv");
    write_file(files.back(), s);
  }
  {
    std::string s = "r,d,n_landed,n_captured\n";
    for (const ConditionReport &c : report.conditions) {
      for (const ModulusRow &r : c.modulus_table) {
        s += format_double(r.r) + "," + format_double(r.d) + "," +
             std::to_string(r.n_landed) + "," + std::to_string(r.n_captured) + "\n";
      }
    }
    files.push_back(out_dir / "modulus_table.csv");
    write_file(files.back(), s);
  }
  for (std::size_t k = 0; k < report.trajectories.size(); ++k) {
    std::ostringstream os;
    write_trajectory_csv(os, report.trajectories[k].trajectory);
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03zu", k);
    files.push_back(out_dir / ("trajectory_" + std::string(idx) + "_" +
                               sanitize(report.trajectories[k].label) + ".csv"));
    write_file(files.back(), os.str());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace morseflow
