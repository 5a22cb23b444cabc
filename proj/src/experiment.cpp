#include "morseflow/experiment.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "morseflow/levelmap.h"
#include "morseflow/random.h"

namespace morseflow {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::critical:
      return "critical";
    case Stage::loja:
      return "loja";
    case Stage::cond1:
      return "cond1";
    case Stage::cond2:
      return "cond2";
    case Stage::cond4:
      return "cond4";
  }
  return "unknown";
}

std::vector<Stage> all_stages() {
  return {Stage::critical, Stage::loja, Stage::cond1, Stage::cond2, Stage::cond4};
}

std::vector<Stage> parse_stages(std::string_view text) {
  std::vector<Stage> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view name = text.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      bool found = false;
      for (Stage s : all_stages()) {
        if (to_string(s) == name) {
          if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
          found = true;
        }
      }
      if (!found) {
        throw std::invalid_argument("unknown stage '" + std::string(name) + "'");
      }
    }
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool same_vector(const Vector &a, const Vector &b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

bool same_double(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

bool same_point(const CriticalPoint &a, const CriticalPoint &b) {
  return same_vector(a.location, b.location) && a.value == b.value &&
         a.grad_norm == b.grad_norm && a.kind == b.kind &&
         a.cluster_radius == b.cluster_radius && a.singular == b.singular;
}

bool same_condition(const ConditionReport &a, const ConditionReport &b) {
  if (a.condition != b.condition || a.verdict != b.verdict ||
      a.message != b.message || a.series != b.series ||
      a.witnesses.size() != b.witnesses.size() ||
      a.modulus_table.size() != b.modulus_table.size()) {
    return false;
  }
  for (auto ia = a.witnesses.begin(), ib = b.witnesses.begin();
       ia != a.witnesses.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !same_double(ia->second, ib->second)) return false;
  }
  for (std::size_t i = 0; i < a.modulus_table.size(); ++i) {
    const ModulusRow &x = a.modulus_table[i];
    const ModulusRow &y = b.modulus_table[i];
    if (x.r != y.r || !same_double(x.d, y.d) || x.n_landed != y.n_landed ||
        x.n_captured != y.n_captured) {
      return false;
    }
  }
  return true;
}

bool same_trajectory(const FlowTrajectory &a, const FlowTrajectory &b) {
  if (a.direction != b.direction || a.termination != b.termination ||
      a.message != b.message || a.samples.size() != b.samples.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const FlowSample &x = a.samples[i];
    const FlowSample &y = b.samples[i];
    if (x.t != y.t || !same_vector(x.y, y.y) || x.f != y.f ||
        x.grad_norm != y.grad_norm || x.arc_len != y.arc_len) {
      return false;
    }
  }
  return true;
}

template <class T, class Eq>
bool same_list(const std::vector<T> &a, const std::vector<T> &b, Eq eq) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!eq(a[i], b[i])) return false;
  }
  return true;
}

bool has(const std::vector<Stage> &stages, Stage s) {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

ConditionReport stage_failure(int condition, const std::string &what) {
  ConditionReport rep;
  rep.condition = condition;
  rep.verdict = Verdict::inconclusive;
  rep.message = what;
  return rep;
}

// Distance from c to the nearest other merged critical value.
double critical_value_gap(const std::vector<CriticalPoint> &cps, double c,
                          double merge_tol) {
  double gap = std::numeric_limits<double>::infinity();
  for (const CriticalLevelSet &ls : group_by_value(cps, merge_tol)) {
    const double d = std::abs(ls.value - c);
    if (d > merge_tol) gap = std::min(gap, d);
  }
  return gap;
}

// Points of Z on the critical level within `radius` of cp, excluding cp.
std::vector<Vector> level_starts(const Objective &f, const SingularSpace &space,
                                 const CriticalPoint &cp, double radius, int n,
                                 std::uint64_t seed) {
  std::vector<Vector> out;
  const std::vector<Vector> raw = sample_near(f, space, cp, radius, 4 * n, seed);
  for (const Vector &y : raw) {
    if (static_cast<int>(out.size()) >= n) break;
    Vector p;
    try {
      p = space.project_to_level_set(f, y, cp.value);
    } catch (const RetractionError &) {
      continue;
    }
    const double d = (p - cp.location).norm();
    if (!space.is_member(p) || d >= radius || d < 1e-6 * radius) continue;
    if (std::abs(f.value(p) - cp.value) >= space.tolerances().level_tol) continue;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

bool operator==(const ExperimentReport &a, const ExperimentReport &b) {
  return a.problem == b.problem && a.stages == b.stages &&
         same_list(a.critical_points, b.critical_points, same_point) &&
         a.critical_seeds == b.critical_seeds &&
         a.critical_discarded == b.critical_discarded &&
         a.lojasiewicz_fits == b.lojasiewicz_fits &&
         same_list(a.conditions, b.conditions, same_condition) &&
         a.corollary_verdict == b.corollary_verdict &&
         a.stage_errors == b.stage_errors &&
         same_list(a.trajectories, b.trajectories,
                   [](const RecordedTrajectory &x, const RecordedTrajectory &y) {
                     return x.label == y.label &&
                            same_trajectory(x.trajectory, y.trajectory);
                   });
}

Verdict corollary_verdict(const std::vector<ConditionReport> &conditions,
                          bool proper_on_box) {
  bool seen[5] = {};
  bool any_fail = false;
  bool any_inconclusive = false;
  for (const ConditionReport &c : conditions) {
    if (c.condition >= 0 && c.condition < 5) seen[c.condition] = true;
    any_fail = any_fail || c.verdict == Verdict::fail;
    any_inconclusive = any_inconclusive || c.verdict == Verdict::inconclusive;
  }
  if (any_fail) return Verdict::fail;
  if (any_inconclusive || !seen[1] || !seen[2] || !seen[4] || !proper_on_box) {
    return Verdict::inconclusive;
  }
  return Verdict::pass;
}

int exit_code(const ExperimentReport &report) {
  std::vector<Verdict> verdicts;
  for (const ConditionReport &c : report.conditions) verdicts.push_back(c.verdict);
  if (has(report.stages, Stage::cond1) && has(report.stages, Stage::cond2) &&
      has(report.stages, Stage::cond4)) {
    verdicts.push_back(report.corollary_verdict);
  }
  if (std::find(verdicts.begin(), verdicts.end(), Verdict::fail) != verdicts.end()) {
    return 1;
  }
  if (std::find(verdicts.begin(), verdicts.end(), Verdict::inconclusive) !=
      verdicts.end()) {
    return 2;
  }
  return 0;
}

ExperimentReport run_experiment(const ProblemSpec &spec,
                                const std::vector<Stage> &requested) {
  std::vector<Stage> stages = requested;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  for (Stage s : {Stage::loja, Stage::cond1, Stage::cond4}) {
    if (has(stages, s) && !has(stages, Stage::critical)) {
      throw StageDependencyError("stage " + std::string(to_string(s)) +
                                 " requires stage critical");
    }
  }
  if (has(stages, Stage::cond4) && !has(stages, Stage::loja)) {
    throw StageDependencyError("stage cond4 requires stage loja");
  }
  validate(spec);

  ExperimentReport report;
  report.problem = spec;
  report.stages = stages;
  const Objective f = make_objective(spec);
  const SingularSpace space = make_space(spec);
  const ProblemTolerances &tol = spec.tolerances;
  const ProblemSettings &set = spec.settings;
  auto seed_for = [&](std::string_view stage) { return derive_seed(spec.seed, stage); };
  LevelFlowOptions flow;
  flow.grad_tol = tol.grad_tol;
  const auto max_traj = static_cast<std::size_t>(set.max_recorded_trajectories);
  auto record = [&](std::string label, const FlowTrajectory &t) {
    if (report.trajectories.size() < max_traj) {
      report.trajectories.push_back({std::move(label), t});
    }
  };

  bool critical_ok = false;
  if (has(stages, Stage::critical)) {
    try {
      CriticalSearchOptions co;
      co.grid_density = set.grid_density;
      co.crit_tol = tol.crit_tol;
      co.cluster_tol = tol.cluster_tol;
      CriticalSearchResult found = find_critical_points(f, space, co);
      report.critical_seeds = found.n_seeds;
      report.critical_discarded = found.n_discarded;
      const std::uint64_t cseed = seed_for("classify");
      for (std::size_t i = 0; i < found.points.size(); ++i) {
        ClassifyOptions opt;
        opt.probe_radius = set.classify_probe_radius;
        opt.seed = derive_seed(cseed, static_cast<std::uint64_t>(i));
        found.points[i].kind = classify(f, space, found.points[i], opt);
      }
      report.critical_points = std::move(found.points);
      critical_ok = true;
    } catch (const std::exception &e) {
      report.stage_errors["critical"] = e.what();
    }
  }
  const std::vector<CriticalPoint> &cps = report.critical_points;

  std::vector<double> deltas(cps.size(), 0.0);
  if (has(stages, Stage::loja)) {
    if (!critical_ok) {
      report.stage_errors["loja"] = "critical stage failed";
    } else {
      const std::uint64_t lseed = seed_for("loja");
      const std::uint64_t hseed = seed_for("holdout");
      for (std::size_t i = 0; i < cps.size(); ++i) {
        FitEntry entry;
        entry.critical_index = static_cast<int>(i);
        deltas[i] = set.fit_radius > 0.0
                        ? set.fit_radius
                        : default_delta(space, cps[i], cps, set.delta_cap);
        try {
          FitOptions fo;
          fo.radius = deltas[i];
          fo.n_samples = set.fit_samples;
          fo.seed = derive_seed(lseed, static_cast<std::uint64_t>(i));
          LojasiewiczFit fit = estimate_fit(f, space, cps[i], fo);
          fit.holdout_pass_fraction = holdout_pass_fraction(
              f, space, cps[i], fit, set.fit_samples,
              derive_seed(hseed, static_cast<std::uint64_t>(i)), tol.check_slack);
          entry.fit = fit;
        } catch (const std::exception &e) {
          entry.error = e.what();
        }
        report.lojasiewicz_fits.push_back(std::move(entry));
      }
    }
  }

  if (has(stages, Stage::cond1)) {
    if (!critical_ok) {
      report.conditions.push_back(stage_failure(1, "critical stage failed"));
    } else {
      report.conditions.push_back(
          check_condition1(cps, tol.gap_tol, tol.value_merge_tol));
    }
  }

  if (has(stages, Stage::cond2)) {
    const std::uint64_t seed2 = seed_for("cond2");
    for (std::size_t k = 0; k < set.bands.size(); ++k) {
      try {
        Condition2Options o;
        o.n_samples = set.cond2_samples;
        o.seed = derive_seed(seed2, static_cast<std::uint64_t>(k));
        o.sample_fraction = set.cond2_sample_fraction;
        o.value_merge_tol = tol.value_merge_tol;
        o.flow = flow;
        report.conditions.push_back(check_condition2(
            f, space, set.bands[k].lo, set.bands[k].hi, o));
      } catch (const std::exception &e) {
        report.conditions.push_back(stage_failure(2, e.what()));
      }
    }
  }

  if (has(stages, Stage::cond4)) {
    if (!critical_ok) {
      report.conditions.push_back(stage_failure(4, "critical stage failed"));
    } else {
      std::vector<std::size_t> targets;
      int excluded = 0;
      for (std::size_t i = 0; i < cps.size(); ++i) {
        if (cps[i].kind == PointKind::saddle || cps[i].kind == PointKind::maximum) {
          targets.push_back(i);
        } else if (cps[i].kind != PointKind::minimum) {
          ++excluded;
        }
      }
      if (targets.empty()) {
        ConditionReport rep;
        rep.condition = 4;
        rep.verdict = Verdict::pass;
        rep.message = "vacuous: no non-minimal critical points";
        rep.witnesses["refused"] = 1.0;
        rep.witnesses["n_excluded_degenerate"] = excluded;
        report.conditions.push_back(std::move(rep));
      }
      const std::uint64_t sseed = seed_for("slice");
      const std::uint64_t qseed = seed_for("cond4");
      const std::uint64_t vseed = seed_for("verify");
      for (std::size_t i : targets) {
        const CriticalPoint &cp = cps[i];
        const auto idx = static_cast<std::uint64_t>(i);
        const FitEntry *entry = nullptr;
        for (const FitEntry &e : report.lojasiewicz_fits) {
          if (e.critical_index == static_cast<int>(i)) entry = &e;
        }
        if (entry == nullptr || !entry->fit) {
          ConditionReport rep = stage_failure(
              4, "no Lojasiewicz fit for the critical point" +
                     (entry != nullptr ? ": " + entry->error : std::string()));
          rep.witnesses["critical_index"] = static_cast<double>(i);
          report.conditions.push_back(std::move(rep));
          continue;
        }
        const LojasiewiczFit &fit = *entry->fit;
        try {
          const double gap = critical_value_gap(cps, cp.value, tol.value_merge_tol);
          const double eps = choose_epsilon(fit, set.safety, gap);
          SliceOptions so;
          so.probe_radius = set.slice_probe_radius;
          so.cluster_tol = tol.cluster_tol;
          so.seed = derive_seed(sseed, idx);
          const UnstableSlice slice = unstable_slice(f, space, cp, cp.value - eps, so);
          Condition4Options o4;
          o4.radii = set.radii;
          o4.n_per_radius = set.cond4_per_radius;
          o4.tube_rho = set.tube_rho;
          o4.seed = derive_seed(qseed, idx);
          o4.flow = flow;
          Condition4Trace trace;
          ConditionReport rep = check_condition4(f, space, cp, eps, slice, o4, &trace);
          rep.witnesses["critical_index"] = static_cast<double>(i);
          rep.witnesses["delta"] = fit.radius_delta;
          rep.witnesses["theta"] = fit.theta;
          rep.witnesses["C"] = fit.constant_C;
          rep.witnesses["n_excluded_degenerate"] = excluded;
          for (std::size_t r = 0; r < trace.maps.size(); ++r) {
            const auto &m = trace.maps[r];
            for (std::size_t s = 0; s < m.trajectories.size() && s < 2; ++s) {
              record("cond4_cp" + std::to_string(i) + "_r" + std::to_string(r) +
                         "_s" + std::to_string(s),
                     m.trajectories[s]);
            }
          }

          const std::vector<Vector> starts =
              level_starts(f, space, cp, 0.5 * fit.radius_delta,
                           set.verify_starts, derive_seed(vseed, idx));
          rep.witnesses["verify_n_starts"] = static_cast<double>(starts.size());
          if (!starts.empty()) {
            const FlowEstimateReport v =
                verify_flow_estimates(f, space, cp, fit, eps, starts, tol.check_slack);
            rep.witnesses["verify_n_landed"] = v.n_landed;
            rep.witnesses["verify_n_captured"] = v.n_captured;
            rep.witnesses["verify_check_i"] = v.check_i_fraction;
            rep.witnesses["verify_check_ii"] = v.check_ii_fraction;
            rep.witnesses["verify_check_iii"] = v.check_iii_fraction;
            rep.witnesses["verify_max_total_arc"] = v.max_total_arc;
            rep.witnesses["verify_length_bound"] = v.length_bound;
            for (std::size_t s = 0; s < v.trajectories.size() && s < 2; ++s) {
              record("verify_cp" + std::to_string(i) + "_s" + std::to_string(s),
                     v.trajectories[s]);
            }
          }
          report.conditions.push_back(std::move(rep));
        } catch (const std::exception &e) {
          ConditionReport rep = stage_failure(4, e.what());
          rep.witnesses["critical_index"] = static_cast<double>(i);
          report.conditions.push_back(std::move(rep));
        }
      }
    }
  }

  report.corollary_verdict = corollary_verdict(report.conditions, spec.proper_on_box);
  return report;
}

}  // namespace morseflow
