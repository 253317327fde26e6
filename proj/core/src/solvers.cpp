#include "barrierflow/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>

namespace barrierflow {

namespace {
constexpr int kStepMaxHalvings = 60;
constexpr double kDualNewtonTol = 1e-11;
constexpr int kDualNewtonMaxIter = 200;
}  // namespace

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta > 0)) throw ConfigError("step size must be positive");
  StepSchedule s;
  s.kind = Kind::constant;
  s.eta0 = eta;
  return s;
}

StepSchedule StepSchedule::polynomial(double eta0, double alpha) {
  if (!(eta0 > 0)) throw ConfigError("step size must be positive");
  if (!(alpha > 0.5 && alpha <= 1.0)) {
    throw ConfigError("polynomial schedule needs alpha in (0.5, 1]");
  }
  StepSchedule s;
  s.kind = Kind::polynomial;
  s.eta0 = eta0;
  s.alpha = alpha;
  return s;
}

double StepSchedule::eta(long k) const {
  double e = eta0;
  if (kind == Kind::polynomial) e = eta0 / std::pow(double(k + 1), alpha);
  if (cap) e = std::min(e, *cap);
  return e;
}

std::string to_string(Scheme s) { return s == Scheme::rhb ? "rhb" : "mirror"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "rhb") return Scheme::rhb;
  if (s == "mirror") return Scheme::mirror;
  throw ConfigError("scheme must be 'rhb' or 'mirror'");
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(stop_tol > 0)) throw ConfigError("stop_tol must be positive");
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
  if (noise_bound < 0) throw ConfigError("noise bound must be nonnegative");
  (void)schedule.eta(0);
}

// ---------------------------------------------------------------------------
// RHB step
// ---------------------------------------------------------------------------

StepResult rhb_step(const BarrierKernel& kernel, const Manifold& manifold,
                    const OpenRegion& region, const Vector& x, const Vector& d,
                    const Vector& xi, double eta) {
  const Vector w = project_tangent(kernel, manifold, x,
                                   kernel.hess_inv_apply(x, d + xi));
  const Vector raw = x - eta * w;

  StepResult out;
  if (manifold.is_affine()) {
    Vector step = -eta * w;
    Vector cand = x + step;
    int halvings = 0;
    while (!region.contains(cand)) {
      if (++halvings > kStepMaxHalvings) {
        throw StepRejected("raw step cannot be brought inside the region");
      }
      step *= 0.5;
      cand = x + step;
    }
    out.x = std::move(cand);
    out.halvings = halvings;
  } else {
    out.x = retract(manifold, x, -eta * w, region);
  }
  out.delta_norm = (out.x - raw).norm() / eta;
  return out;
}

double safe_step_threshold(const BarrierKernel& kernel, int n, double M_d,
                           double M_xi, double M_hat) {
  if (!kernel.lhscb_theta(n).has_value()) {
    throw NotSelfConcordant(kernel.id() +
                            " is not a logarithmically homogeneous self-concordant barrier");
  }
  if (!(M_d > 0 && M_hat > 0 && M_xi >= 0)) {
    throw ConfigError("safe step threshold needs positive bounds");
  }
  const double s = M_d + M_xi;
  return 1.0 / (M_hat * s * s);
}

double estimate_metric_bound(const Problem& problem, const BarrierKernel& kernel,
                             const SolverConfig& pilot) {
  const Trace trace = run(problem, kernel, pilot);
  const int n = problem.dim();
  double bound = 0.0;
  for (const auto& row : trace.rows) {
    Matrix Hinv(n, n);
    for (int i = 0; i < n; ++i) {
      Hinv.col(i) = kernel.hess_inv_apply(row.x, Vector::Unit(n, i));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Hinv + Hinv.transpose()));
    bound = std::max(bound, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return bound;
}

// ---------------------------------------------------------------------------
// Mirror step
// ---------------------------------------------------------------------------

namespace {

bool is_simplex(const Manifold& manifold) {
  if (!manifold.is_affine() || manifold.codim() != 1) return false;
  return (manifold.A().array() == 1.0).all() && manifold.b()[0] == 1.0;
}

}  // namespace

Vector mirror_step_dual_newton(const BarrierKernel& kernel, const Manifold& manifold,
                               const Vector& x, const Vector& d, const Vector& xi,
                               double eta) {
  if (!manifold.is_affine()) {
    throw ConfigError("mirror step requires an affine manifold");
  }
  const Vector g = d + xi;
  const Vector phi_x = kernel.grad(x);
  const int m = manifold.codim();
  if (m == 0) return kernel.mirror_inverse(phi_x - eta * g);

  const Matrix& A = manifold.A();
  const Vector& b = manifold.b();

  auto primal_at = [&](const Vector& y) {
    return kernel.mirror_inverse(phi_x - eta * (g - A.transpose() * y));
  };

  Vector y = Vector::Zero(m);
  Vector xp;
  // Some dual iterates may leave the range of the mirror map; treat that as
  // an infinite residual and damp.
  auto residual_at = [&](const Vector& ytry, Vector& xout) -> double {
    try {
      xout = primal_at(ytry);
    } catch (const RangeViolation&) {
      return std::numeric_limits<double>::infinity();
    } catch (const NoConvergence&) {
      return std::numeric_limits<double>::infinity();
    }
    return (A * xout - b).lpNorm<Eigen::Infinity>();
  };

  double res = residual_at(y, xp);
  if (std::isinf(res)) throw DualNewtonFailed("mirror step: infeasible dual start");
  for (int it = 0; it < kDualNewtonMaxIter; ++it) {
    if (res <= kDualNewtonTol) return xp;
    // F(y) = A x(y) - b, F'(y) = eta A H(x(y))^{-1} A'
    Matrix W(xp.size(), m);
    for (int j = 0; j < m; ++j) {
      W.col(j) = kernel.hess_inv_apply(xp, A.row(j).transpose());
    }
    Eigen::LLT<Matrix> llt(eta * (A * W));
    if (llt.info() != Eigen::Success) {
      throw DualNewtonFailed("mirror step: singular dual Jacobian");
    }
    const Vector delta = -llt.solve(A * xp - b);
    double t = 1.0;
    Vector ytry, xtry;
    double rtry = std::numeric_limits<double>::infinity();
    for (int ls = 0; ls < 60; ++ls) {
      ytry = y + t * delta;
      rtry = residual_at(ytry, xtry);
      if (rtry < res) break;
      t *= 0.5;
    }
    if (!(rtry < res)) {
      throw DualNewtonFailed("mirror step: no progress, residual " + std::to_string(res));
    }
    y = ytry;
    xp = xtry;
    res = rtry;
  }
  if (res <= kDualNewtonTol) return xp;
  throw DualNewtonFailed("mirror step: residual " + std::to_string(res));
}

Vector mirror_step(const BarrierKernel& kernel, const Manifold& manifold,
                   const Vector& x, const Vector& d, const Vector& xi, double eta) {
  if (!manifold.is_affine()) {
    throw ConfigError("mirror step requires an affine manifold");
  }
  if (kernel.kind() == KernelKind::entropy) {
    const Vector g = d + xi;
    if (manifold.codim() == 0) {
      return (x.array() * (-eta * g.array()).exp()).eval();
    }
    if (is_simplex(manifold)) {
      const Vector w = x.array() * (-eta * g.array()).exp();
      return w / w.sum();
    }
  }
  return mirror_step_dual_newton(kernel, manifold, x, d, xi, eta);
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

Trace run(const Problem& problem, const BarrierKernel& kernel,
          const SolverConfig& config) {
  return run(problem, kernel, config, problem.start);
}

Trace run(const Problem& problem, const BarrierKernel& kernel,
          const SolverConfig& config, const Vector& x0) {
  config.validate();
  if (!kernel.interior(x0) || !problem.region.contains(x0) ||
      !problem.manifold.contains(x0)) {
    throw DomainViolation("run: initial point must be strictly interior on M");
  }
  const auto t_start = std::chrono::steady_clock::now();

  NoiseSource noise(config.noise_bound, config.seed);
  std::mt19937_64 oracle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const int n = static_cast<int>(x0.size());

  Trace trace;
  Vector x = x0;

  auto record = [&](long k, double eta, const Vector& d) {
    TraceRow row;
    row.k = k;
    row.x = x;
    row.f = problem.oracle.value(x);
    row.eta = eta;
    row.stable_res = stable_residual(problem, kernel, x, d);
    const auto aset = problem.region.active_set(x);
    const Matrix Gall = problem.region.g_jacobian(x);
    Matrix Gt(n, aset.size());
    for (size_t c = 0; c < aset.size(); ++c) Gt.col(c) = Gall.row(aset[c]).transpose();
    row.kkt_res = kkt_nnls(d, problem.manifold.jacobian(x).transpose(), Gt).residual;
    row.gauge = problem.region.gauge(x);
    trace.rows.push_back(std::move(row));
  };

  long k = 0;
  for (; k < config.max_iters; ++k) {
    const Vector d = problem.oracle.subgrad(x, oracle_rng);
    const double res = stable_residual(problem, kernel, x, d);
    const double eta = config.schedule.eta(k);
    if (k % config.record_every == 0) record(k, eta, d);
    if (res <= config.stop_tol) break;

    const Vector xi = noise.sample(n);
    if (config.scheme == Scheme::rhb) {
      auto step = rhb_step(kernel, problem.manifold, problem.region, x, d, xi, eta);
      trace.halvings_total += step.halvings;
      x = std::move(step.x);
    } else {
      x = mirror_step(kernel, problem.manifold, x, d, xi, eta);
    }
  }
  trace.iters = k;

  {
    std::mt19937_64 rng_final(0);
    const Vector d = problem.oracle.subgrad(x, rng_final);
    if (trace.rows.empty() || trace.rows.back().k != k) {
      record(k, config.schedule.eta(k), d);
    }
  }
  trace.terminal = classify(problem, kernel, x, config.tau_stable, config.tau_kkt);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return trace;
}

}  // namespace barrierflow
