#include "barrierflow/flow.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace barrierflow {

void FlowConfig::validate() const {
  if (!(h > 0)) throw ConfigError("flow step h must be positive");
  if (!(t_max > 0)) throw ConfigError("flow horizon t_max must be positive");
  if (!(interior_safety > 0 && interior_safety < 1)) {
    throw ConfigError("interior_safety must lie in (0,1)");
  }
  if (record_dt < 0) throw ConfigError("record_dt must be nonnegative");
}

FlowTrace integrate(const Problem& problem, const BarrierKernel& kernel,
                    const Vector& x0, const FlowConfig& config) {
  config.validate();
  if (!kernel.interior(x0) || !problem.region.contains(x0) ||
      !problem.manifold.contains(x0)) {
    throw DomainViolation("flow: initial point must be strictly interior on M");
  }

  std::mt19937_64 rng(0);
  FlowTrace trace;
  Vector x = x0;
  double t = 0.0;
  double next_record = 0.0;

  const bool watching = config.watch_center.has_value();
  bool inside = watching &&
                (x - *config.watch_center).lpNorm<Eigen::Infinity>() < config.watch_eps;

  auto record = [&](double tt) {
    trace.samples.push_back({tt, x, problem.oracle.value(x)});
  };
  record(0.0);
  if (config.record_dt > 0) next_record = config.record_dt;

  Vector d = problem.oracle.subgrad(x, rng);
  while (t < config.t_max) {
    const Vector w = stable_direction(problem, kernel, x, d);
    if (w.norm() == 0.0) {
      // exact equilibrium; nothing moves
      t = config.t_max;
      break;
    }
    double h = std::min(config.h, config.t_max - t);
    Vector cand;
    const double gauge0 = problem.region.gauge(x);
    for (int halving = 0;; ++halving) {
      bool feasible = true;
      try {
        cand = retract(problem.manifold, x, -h * w, problem.region);
      } catch (const RetractionFailed&) {
        feasible = false;
      }
      if (feasible && (!std::isfinite(gauge0) ||
                       problem.region.gauge(cand) >= config.interior_safety * gauge0)) {
        break;
      }
      if (halving >= 200) {
        throw NoConvergence("flow: interior-safety cap could not be satisfied");
      }
      h *= 0.5;
    }
    x = std::move(cand);
    t += h;
    d = problem.oracle.subgrad(x, rng);

    if (watching) {
      const bool now_inside =
          (x - *config.watch_center).lpNorm<Eigen::Infinity>() < config.watch_eps;
      if (now_inside != inside) {
        trace.events.push_back({t, now_inside});
        inside = now_inside;
      }
    }
    if (config.record_dt == 0.0 || t >= next_record) {
      record(t);
      next_record += config.record_dt;
    }
  }
  if (trace.samples.empty() || trace.samples.back().t < t) record(t);

  trace.terminal_x = x;
  trace.terminal_stable_residual = stable_residual(problem, kernel, x, d);
  return trace;
}

namespace {

// Interior point at sup-norm distance delta from xbar: move along the tangent
// direction toward the problem's default start, normalized in the sup norm,
// then retract.
Vector start_at_distance(const Problem& problem, const BarrierKernel& kernel,
                         const Vector& xbar, double delta) {
  Vector dir = problem.start - xbar;
  const Matrix Ax = problem.manifold.jacobian(xbar);
  if (Ax.rows() > 0) {
    // Euclidean tangent projection is enough here; the retraction fixes the rest.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Ax * Ax.transpose());
    dir -= Ax.transpose() * cod.solve(Ax * dir);
  }
  const double norm = dir.lpNorm<Eigen::Infinity>();
  if (norm == 0.0) throw ConfigError("escape: default start coincides with xbar");
  Vector x0 = retract(problem.manifold, xbar, (delta / norm) * dir, problem.region);
  if (!problem.region.contains(x0) || !kernel.interior(x0)) {
    throw DomainViolation("escape: constructed start is not interior");
  }
  return x0;
}

}  // namespace

std::vector<ExitRecord> escape_experiment(const Problem& problem,
                                          const BarrierKernel& kernel,
                                          const Vector& xbar, double eps,
                                          std::span<const double> deltas,
                                          const FlowConfig& config) {
  if (!(eps > 0)) throw ConfigError("escape: eps must be positive");
  std::vector<ExitRecord> table;
  table.reserve(deltas.size());

  for (double delta : deltas) {
    ExitRecord rec{delta, 0.0, false, 0};
    if (delta >= eps) {
      // starts outside the neighborhood
      rec.exited = true;
      table.push_back(rec);
      continue;
    }
    const Vector x0 = start_at_distance(problem, kernel, xbar, delta);
    FlowConfig cfg = config;
    cfg.watch_center = xbar;
    cfg.watch_eps = eps;
    cfg.record_dt = std::max(config.record_dt, 10 * config.h);
    const FlowTrace trace = integrate(problem, kernel, x0, cfg);

    bool exited = false;
    for (const auto& ev : trace.events) {
      if (!ev.entry && !exited) {
        rec.t_exit = ev.t;
        exited = true;
      } else if (ev.entry && exited) {
        ++rec.reentries;
      }
    }
    rec.exited = exited;
    if (!exited) rec.t_exit = config.t_max;  // NoExit finding, reported as such
    table.push_back(rec);
  }
  return table;
}

ClusterSummary omega_limit_estimate(const Problem& problem, const BarrierKernel& kernel,
                                    const FlowTrace& trace, double tail_fraction,
                                    double cluster_radius) {
  if (!(tail_fraction > 0 && tail_fraction <= 1)) {
    throw ConfigError("tail_fraction must lie in (0,1]");
  }
  const size_t total = trace.samples.size();
  const size_t tail_start = total - std::max<size_t>(1, size_t(tail_fraction * total));

  ClusterSummary out;
  std::mt19937_64 rng(0);
  for (size_t i = tail_start; i < total; ++i) {
    const Vector& x = trace.samples[i].x;
    const Vector d = problem.oracle.subgrad(x, rng);
    out.max_tail_stable_residual =
        std::max(out.max_tail_stable_residual, stable_residual(problem, kernel, x, d));
    bool placed = false;
    for (size_t c = 0; c < out.centroids.size(); ++c) {
      if ((x - out.centroids[c]).lpNorm<Eigen::Infinity>() <= cluster_radius) {
        // running mean
        out.centroids[c] += (x - out.centroids[c]) / double(out.counts[c] + 1);
        ++out.counts[c];
        placed = true;
        break;
      }
    }
    if (!placed) {
      out.centroids.push_back(x);
      out.counts.push_back(1);
    }
  }
  return out;
}

}  // namespace barrierflow
