#include "morseflow/levelmap.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "morseflow/random.h"

namespace morseflow {

std::string_view to_string(PairStatus s) {
  switch (s) {
    case PairStatus::landed:
      return "landed";
    case PairStatus::captured:
      return "captured";
    case PairStatus::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

double level_tol_of(const SingularSpace &space, const LevelFlowOptions &opt) {
  return opt.level_tol > 0.0 ? opt.level_tol : space.tolerances().level_tol;
}

// Flows one point to `target`, picking the direction from f(x).
std::pair<LevelPair, FlowTrajectory> flow_pair(const Objective &f,
                                               const SingularSpace &space,
                                               const Vector &x, double target,
                                               const LevelFlowOptions &opt) {
  LevelPair pair;
  pair.source = x;
  const double fx = f.value(x);
  FlowTrajectory traj = fx > target ? descend_to_level(f, space, x, target, opt)
                                    : ascend_to_level(f, space, x, target, opt);
  pair.image = traj.back().y;
  pair.arc_length = traj.back().arc_len;
  pair.termination = traj.termination;
  switch (traj.termination) {
    case Termination::reach_level:
      pair.status = PairStatus::landed;
      break;
    case Termination::converged:
      pair.status = PairStatus::captured;
      break;
    default:
      pair.status = PairStatus::inconclusive;
      break;
  }
  return {std::move(pair), std::move(traj)};
}

int match_critical(const Vector &y, const std::vector<CriticalPoint> &cps,
                   double radius) {
  int best = -1;
  double best_d = radius;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const double d = (cps[i].location - y).norm();
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

bool lex_less(const Vector &a, const Vector &b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

}  // namespace

LevelSetMap level_map(const Objective &f, const SingularSpace &space, double a,
                      double b, const std::vector<Vector> &sources,
                      const std::vector<CriticalPoint> *cps,
                      const LevelFlowOptions &opt, double match_radius) {
  const double tol = level_tol_of(space, opt);
  for (const Vector &s : sources) {
    if (!space.is_member(s) || std::abs(f.value(s) - a) >= tol) {
      throw std::invalid_argument("level_map: source is not on Z at level a");
    }
  }
  LevelSetMap map;
  map.level_from = a;
  map.level_to = b;
  for (const Vector &s : sources) {
    if (a == b) {
      LevelPair p;
      p.source = s;
      p.image = s;
      p.status = PairStatus::landed;
      map.pairs.push_back(std::move(p));
      FlowTrajectory t;
      t.samples.push_back({0.0, s, f.value(s), riemannian_grad(f, space, s).norm(), 0.0});
      t.termination = Termination::reach_level;
      map.trajectories.push_back(std::move(t));
      continue;
    }
    auto [pair, traj] = flow_pair(f, space, s, b, opt);
    if (cps != nullptr && pair.status != PairStatus::inconclusive) {
      const int k = match_critical(pair.image, *cps, match_radius);
      // Reaching a critical level next to a critical point at that level is
      // the finite-time face of convergence to it.
      if (pair.status == PairStatus::captured ||
          (k >= 0 && std::abs((*cps)[k].value - b) < tol)) {
        pair.status = PairStatus::captured;
        pair.critical_index = k;
      }
    }
    map.pairs.push_back(std::move(pair));
    map.trajectories.push_back(std::move(traj));
  }
  return map;
}

double roundtrip_error(const Objective &f, const SingularSpace &space, double a,
                       double b, const std::vector<Vector> &sources,
                       const LevelFlowOptions &opt) {
  if (a == b) return 0.0;
  const LevelSetMap forward = level_map(f, space, a, b, sources, nullptr, opt);
  double err = 0.0;
  for (const LevelPair &p : forward.pairs) {
    if (p.status != PairStatus::landed) continue;
    const LevelSetMap back = level_map(f, space, b, a, {p.image}, nullptr, opt);
    if (back.pairs.front().status != PairStatus::landed) continue;
    err = std::max(err, (back.pairs.front().image - p.source).norm());
  }
  return err;
}

UnstableSlice unstable_slice(const Objective &f, const SingularSpace &space,
                             const CriticalPoint &cp, double level,
                             const SliceOptions &opt) {
  if (!(level < cp.value)) {
    throw std::invalid_argument("unstable_slice: level must lie below the critical value");
  }
  UnstableSlice slice;
  slice.critical_point = cp;
  slice.level = level;
  const double rho = opt.probe_radius;
  Rng rng(opt.seed);
  std::vector<Vector> probes;
  for (int i = 0; i < opt.n_points; ++i) {
    Vector q;
    try {
      q = space.retract(cp.location + rho * unit_vector(rng, cp.location.size()),
                        std::numeric_limits<double>::infinity());
    } catch (const RetractionError &) {
      continue;
    }
    const double d = (q - cp.location).norm();
    if (!space.is_member(q) || d < 0.25 * rho || d > 2.0 * rho) continue;
    ++slice.n_probes;
    if (f.value(q) < cp.value - opt.curvature_margin * rho * rho) {
      probes.push_back(std::move(q));
    }
  }
  slice.n_descending = static_cast<int>(probes.size());
  if (probes.empty()) {
    throw std::invalid_argument(
        "unstable_slice: no probe descends from the critical point");
  }

  std::vector<Vector> landed;
  for (const Vector &q : probes) {
    const FlowTrajectory t = descend_to_level(f, space, q, level);
    if (t.termination == Termination::reach_level) landed.push_back(t.back().y);
  }

  const double radius = 10.0 * opt.cluster_tol;
  std::vector<std::vector<Vector>> clusters;
  for (Vector &y : landed) {
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const std::vector<Vector> &c) {
                             return (c.front() - y).norm() < radius;
                           });
    if (it == clusters.end()) {
      clusters.push_back({std::move(y)});
    } else {
      it->push_back(std::move(y));
    }
  }

  LevelFlowOptions back;
  back.level_tol = 1e-14;
  for (const auto &c : clusters) {
    Vector centroid = Vector::Zero(c.front().size());
    for (const Vector &y : c) centroid += y;
    centroid /= static_cast<double>(c.size());
    const Vector &rep = *std::min_element(
        c.begin(), c.end(), [&](const Vector &p, const Vector &q) {
          return (p - centroid).norm() < (q - centroid).norm();
        });
    bool ok = false;
    try {
      const FlowTrajectory t = ascend_to_level(f, space, rep, cp.value, back);
      ok = t.ok() && t.termination != Termination::left_box &&
           (t.back().y - cp.location).norm() <= radius;
    } catch (const std::exception &) {
    }
    if (ok) {
      slice.points.push_back(rep);
    } else {
      ++slice.n_rejected;
    }
  }
  std::sort(slice.points.begin(), slice.points.end(), lex_less);
  return slice;
}

ConditionReport check_condition2(const Objective &f, const SingularSpace &space,
                                 double a, double b,
                                 const Condition2Options &opt) {
  if (!(a < b)) throw std::invalid_argument("check_condition2: need a < b");
  ConditionReport rep;
  rep.condition = 2;
  Rng rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Vector center = space.box_center();
  const auto n = static_cast<Eigen::Index>(space.ambient_dim());
  Vector half(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Interval &iv = space.box()[static_cast<std::size_t>(i)];
    half[i] = 0.5 * (iv.hi - iv.lo) * opt.sample_fraction;
  }
  auto in_core = [&](const Vector &y) {
    return ((y - center).cwiseAbs().array() <= half.array()).all();
  };

  std::vector<Vector> samples;
  const long max_attempts =
      static_cast<long>(opt.n_samples) * opt.max_attempts_per_sample;
  long attempts = 0;
  while (attempts < max_attempts &&
         static_cast<int>(samples.size()) < opt.n_samples) {
    ++attempts;
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = center[i] + half[i] * unit(rng);
    try {
      x = space.retract(x, std::numeric_limits<double>::infinity());
    } catch (const RetractionError &) {
      continue;
    }
    if (!space.is_member(x) || !in_core(x)) continue;
    const double fx = f.value(x);
    if (!(fx > a && fx < b)) continue;
    samples.push_back(std::move(x));
  }

  int reached = 0;
  int converged = 0;
  int inconclusive = 0;
  int left_box = 0;
  int failed = 0;
  std::vector<double> limit_values;
  for (const Vector &x : samples) {
    for (Direction dir : {Direction::descend, Direction::ascend}) {
      FlowTrajectory t;
      try {
        t = dir == Direction::descend ? descend_to_level(f, space, x, a, opt.flow)
                                      : ascend_to_level(f, space, x, b, opt.flow);
      } catch (const std::exception &) {
        ++inconclusive;
        continue;
      }
      if (t.termination == Termination::reach_level) {
        ++reached;
      } else if (t.termination == Termination::converged) {
        const double v = t.back().f;
        if (v >= a - opt.value_merge_tol && v <= b + opt.value_merge_tol) {
          ++converged;
          limit_values.push_back(v);
        } else {
          ++failed;
        }
      } else {
        ++inconclusive;
        if (t.termination == Termination::left_box) ++left_box;
      }
    }
  }
  std::sort(limit_values.begin(), limit_values.end());
  limit_values.erase(std::unique(limit_values.begin(), limit_values.end(),
                                 [&](double p, double q) {
                                   return q - p <= opt.value_merge_tol;
                                 }),
                     limit_values.end());

  rep.witnesses["a"] = a;
  rep.witnesses["b"] = b;
  rep.witnesses["n_samples"] = static_cast<double>(samples.size());
  rep.witnesses["n_attempts"] = static_cast<double>(attempts);
  rep.witnesses["n_reach_level"] = reached;
  rep.witnesses["n_converged"] = converged;
  rep.witnesses["n_inconclusive"] = inconclusive;
  rep.witnesses["n_left_box"] = left_box;
  rep.witnesses["n_fail"] = failed;
  rep.series["limit_values"] = limit_values;
  if (failed > 0) {
    rep.verdict = Verdict::fail;
    rep.message = "a flow converged to a limit outside the band";
  } else if (inconclusive > 0) {
    rep.verdict = Verdict::inconclusive;
    rep.message = "flows left the box or exhausted a budget";
  } else {
    rep.verdict = Verdict::pass;
    if (samples.empty()) rep.message = "vacuous: no samples in the band";
  }
  return rep;
}

ConditionReport check_condition4(const Objective &f, const SingularSpace &space,
                                 const CriticalPoint &cp, double eps,
                                 const UnstableSlice &slice,
                                 const Condition4Options &opt,
                                 Condition4Trace *trace) {
  if (cp.kind == PointKind::minimum) {
    throw std::invalid_argument("check_condition4: critical point is a minimum");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("check_condition4: eps must be positive");
  if (opt.radii.empty()) throw std::invalid_argument("check_condition4: no radii");
  for (std::size_t i = 1; i < opt.radii.size(); ++i) {
    if (!(opt.radii[i] < opt.radii[i - 1])) {
      throw std::invalid_argument("check_condition4: radii must be strictly decreasing");
    }
  }
  ConditionReport rep;
  rep.condition = 4;
  const double target = cp.value - eps;
  rep.witnesses["eps"] = eps;
  rep.witnesses["target_level"] = target;
  rep.witnesses["tube_rho"] = opt.tube_rho;
  rep.witnesses["n_slice_points"] = static_cast<double>(slice.points.size());
  if (slice.points.empty()) {
    rep.verdict = Verdict::inconclusive;
    rep.message = "empty unstable slice";
    return rep;
  }

  int inconclusive = 0;
  bool all_captured_somewhere = false;
  const auto dim = cp.location.size();
  for (std::size_t i = 0; i < opt.radii.size(); ++i) {
    const double r = opt.radii[i];
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vector> sources;
    for (int attempt = 0;
         attempt < 200 * opt.n_per_radius &&
         static_cast<int>(sources.size()) < opt.n_per_radius;
         ++attempt) {
      const double rr = r * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
      Vector y;
      try {
        y = space.retract(cp.location + rr * unit_vector(rng, dim),
                          std::numeric_limits<double>::infinity());
      } catch (const RetractionError &) {
        continue;
      }
      if (!space.is_member(y) || (y - cp.location).norm() > r) continue;
      sources.push_back(std::move(y));
    }

    LevelSetMap map;
    map.level_from = std::numeric_limits<double>::quiet_NaN();
    map.level_to = target;
    ModulusRow row;
    row.r = r;
    for (const Vector &y : sources) {
      auto [pair, traj] = flow_pair(f, space, y, target, opt.flow);
      switch (pair.status) {
        case PairStatus::landed: {
          ++row.n_landed;
          double nearest = std::numeric_limits<double>::infinity();
          for (const Vector &s : slice.points) {
            nearest = std::min(nearest, (pair.image - s).norm());
          }
          row.d = std::max(row.d, nearest);
          break;
        }
        case PairStatus::captured:
          ++row.n_captured;
          break;
        case PairStatus::inconclusive:
          ++inconclusive;
          break;
      }
      map.pairs.push_back(std::move(pair));
      map.trajectories.push_back(std::move(traj));
    }
    if (row.n_landed == 0) {
      all_captured_somewhere = true;
      row.d = std::numeric_limits<double>::quiet_NaN();
    }
    rep.modulus_table.push_back(row);
    if (trace != nullptr) trace->maps.push_back(std::move(map));
  }

  bool monotone = true;
  for (std::size_t i = 1; i < rep.modulus_table.size(); ++i) {
    const double prev = rep.modulus_table[i - 1].d;
    const double cur = rep.modulus_table[i].d;
    if (std::isfinite(prev) && std::isfinite(cur) &&
        cur > prev * (1.0 + opt.monotone_slack) + opt.noise_floor) {
      monotone = false;
    }
  }
  const double d_last = rep.modulus_table.back().d;
  rep.witnesses["d_min_radius"] = d_last;
  rep.witnesses["monotone"] = monotone ? 1.0 : 0.0;
  rep.witnesses["n_inconclusive"] = inconclusive;
  if (all_captured_somewhere) {
    rep.verdict = Verdict::inconclusive;
    rep.message = "every sample at some radius was captured";
  } else if (inconclusive > 0) {
    rep.verdict = Verdict::inconclusive;
    rep.message = "flows left the box or exhausted a budget";
  } else if (monotone && d_last < opt.tube_rho) {
    rep.verdict = Verdict::pass;
  } else {
    rep.verdict = Verdict::fail;
    rep.message = monotone ? "d(r) at the smallest radius exceeds tube_rho"
                           : "d(r) increases as r shrinks";
  }
  return rep;
}

}  // namespace morseflow
