#include "barrierflow/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace barrierflow {

namespace {
constexpr double kOffManifoldTol = 1e-6;
constexpr double kNnlsTol = 1e-10;
constexpr double kBoundaryGauge = 1e-12;
}  // namespace

std::string to_string(Classification c) {
  switch (c) {
    case Classification::interior_stationary:
      return "interior-stationary";
    case Classification::boundary_stationary:
      return "boundary-stationary";
    case Classification::spurious:
      return "spurious";
    case Classification::nonstationary:
      return "nonstationary";
  }
  return "?";
}

Classification classification_from_string(const std::string& s) {
  if (s == "interior-stationary") return Classification::interior_stationary;
  if (s == "boundary-stationary") return Classification::boundary_stationary;
  if (s == "spurious") return Classification::spurious;
  if (s == "nonstationary") return Classification::nonstationary;
  throw ConfigError("unknown classification '" + s + "'");
}

std::string to_string(CompCheck c) {
  switch (c) {
    case CompCheck::holds:
      return "holds";
    case CompCheck::strictly_violated:
      return "strictly_violated";
    case CompCheck::indeterminate:
      return "indeterminate";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Nonnegative least squares with a free block
// ---------------------------------------------------------------------------

namespace {

// Plain Lawson-Hanson NNLS: min ||E z - f||, z >= 0.
Vector nnls(const Matrix& E, const Vector& f) {
  const int q = static_cast<int>(E.cols());
  Vector z = Vector::Zero(q);
  std::vector<bool> passive(q, false);
  const double tol = kNnlsTol * (1.0 + f.norm());

  for (int outer = 0; outer < 3 * q + 10; ++outer) {
    const Vector w = E.transpose() * (f - E * z);
    int best = -1;
    double wbest = tol;
    for (int i = 0; i < q; ++i) {
      if (!passive[i] && w[i] > wbest) {
        wbest = w[i];
        best = i;
      }
    }
    if (best < 0) break;
    passive[best] = true;

    for (int inner = 0; inner < 3 * q + 10; ++inner) {
      std::vector<int> P;
      for (int i = 0; i < q; ++i) {
        if (passive[i]) P.push_back(i);
      }
      Matrix Ep(E.rows(), P.size());
      for (size_t c = 0; c < P.size(); ++c) Ep.col(c) = E.col(P[c]);
      const Vector zp = Ep.colPivHouseholderQr().solve(f);
      if ((zp.array() > 0.0).all()) {
        z.setZero();
        for (size_t c = 0; c < P.size(); ++c) z[P[c]] = zp[c];
        break;
      }
      // backtrack toward the feasible iterate
      double alpha = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < P.size(); ++c) {
        if (zp[c] <= 0.0) {
          const double zi = z[P[c]];
          alpha = std::min(alpha, zi / (zi - zp[c]));
        }
      }
      for (size_t c = 0; c < P.size(); ++c) {
        z[P[c]] += alpha * (zp[c] - z[P[c]]);
        if (z[P[c]] <= kNnlsTol) {
          z[P[c]] = 0.0;
          passive[P[c]] = false;
        }
      }
    }
  }
  return z;
}

}  // namespace

KktLeastSquares kkt_nnls(const Vector& d, const Matrix& At, const Matrix& Gt) {
  const int m = static_cast<int>(At.cols());
  const int q = static_cast<int>(Gt.cols());
  KktLeastSquares out;

  // Project the free block out: with Q an orthonormal basis of range(At),
  // min_{lambda>=0} ||(I-QQ')(d + Gt lambda)|| is a plain NNLS.
  Matrix Q(d.size(), 0);
  Eigen::HouseholderQR<Matrix> qr;
  if (m > 0) {
    qr.compute(At);
    Q = qr.householderQ() * Matrix::Identity(d.size(), m);
  }
  auto deflate = [&Q](const Vector& w) -> Vector {
    if (Q.cols() == 0) return w;
    return w - Q * (Q.transpose() * w);
  };

  if (q > 0) {
    Matrix E(d.size(), q);
    for (int c = 0; c < q; ++c) E.col(c) = -deflate(Gt.col(c));
    out.lambda = nnls(E, deflate(d));
  } else {
    out.lambda = Vector::Zero(0);
  }

  const Vector rhs = d + (q > 0 ? (Gt * out.lambda).eval() : Vector::Zero(d.size()).eval());
  if (m > 0) {
    out.mu = -qr.solve(rhs);
  } else {
    out.mu = Vector::Zero(0);
  }
  Vector res = rhs;
  if (m > 0) res += At * out.mu;
  out.residual = res.norm();
  return out;
}

// ---------------------------------------------------------------------------
// Stable direction with boundary extension
// ---------------------------------------------------------------------------

namespace {

Vector hinv_extended(const BarrierKernel& kernel, const Vector& x, const Vector& v) {
  if (kernel.gauge(x) > kBoundaryGauge) return kernel.hess_inv_apply(x, v);
  return kernel.hess_inv_apply_extended(x, v);
}

struct ExtendedDual {
  Vector direction;  // P_x H^{-1} d
  Vector y;
  Vector s;
};

ExtendedDual extended_projection(const Problem& problem, const BarrierKernel& kernel,
                                 const Vector& x, const Vector& d) {
  ExtendedDual out;
  const Matrix Ax = problem.manifold.jacobian(x);
  const int m = static_cast<int>(Ax.rows());
  const Vector u = hinv_extended(kernel, x, d);
  if (m == 0) {
    out.direction = u;
    out.y = Vector::Zero(0);
    out.s = d;
    return out;
  }
  Matrix W(x.size(), m);
  for (int j = 0; j < m; ++j) {
    W.col(j) = hinv_extended(kernel, x, Ax.row(j).transpose());
  }
  // Rank can drop on the boundary; use a minimum-norm solve there.
  const Matrix G = Ax * W;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(G);
  out.y = cod.solve(Ax * u);
  out.direction = u - W * out.y;
  out.s = d - Ax.transpose() * out.y;
  return out;
}

}  // namespace

Vector stable_direction(const Problem& problem, const BarrierKernel& kernel,
                        const Vector& x, const Vector& d) {
  return extended_projection(problem, kernel, x, d).direction;
}

double stable_residual(const Problem& problem, const BarrierKernel& kernel,
                       const Vector& x, const Vector& d) {
  return stable_direction(problem, kernel, x, d).norm();
}

StationarityReport classify(const Problem& problem, const BarrierKernel& kernel,
                            const Vector& x, double tau_stable, double tau_kkt) {
  require_finite(x, "classify point");
  if (!problem.manifold.contains(x, kOffManifoldTol)) {
    throw DomainViolation("classify: point off the manifold");
  }
  if (!problem.region.in_closure(x)) {
    throw DomainViolation("classify: point outside the closed region");
  }

  StationarityReport rep;
  rep.x = x;
  rep.tau_stable = tau_stable;
  rep.tau_kkt = tau_kkt;

  std::mt19937_64 rng(0);
  const Vector d = problem.oracle.subgrad(x, rng);

  const auto dual = extended_projection(problem, kernel, x, d);
  rep.stable_residual = dual.direction.norm();
  rep.y = dual.y;
  rep.s = dual.s;

  rep.active = problem.region.active_set(x);
  const Matrix Ax = problem.manifold.jacobian(x);
  const Matrix Gall = problem.region.g_jacobian(x);
  Matrix Gt(x.size(), rep.active.size());
  for (size_t c = 0; c < rep.active.size(); ++c) {
    Gt.col(c) = Gall.row(rep.active[c]).transpose();
  }
  const auto kkt = kkt_nnls(d, Ax.transpose(), Gt);
  rep.kkt_residual = kkt.residual;
  rep.kkt_mu = kkt.mu;
  rep.kkt_lambda = kkt.lambda;

  if (problem.region.kind() == OpenRegion::Kind::orthant) {
    rep.comp_gap = (rep.s + x).minCoeff();
  } else {
    rep.comp_gap = std::numeric_limits<double>::quiet_NaN();
  }

  const bool stable = rep.stable_residual <= tau_stable;
  const bool kkt_ok = rep.kkt_residual <= tau_kkt;
  if (!stable) {
    rep.classification = Classification::nonstationary;
  } else if (!kkt_ok) {
    rep.classification = Classification::spurious;
  } else {
    rep.classification = rep.active.empty() ? Classification::interior_stationary
                                            : Classification::boundary_stationary;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Complementarity over the multiplier polytope
// ---------------------------------------------------------------------------

CompCheck complementarity_check(const Problem& problem,
                                const StationarityReport& report, double tol) {
  if (problem.region.kind() != OpenRegion::Kind::orthant) {
    throw UnsupportedRegion("complementarity check needs an orthant region");
  }
  const Vector& x = report.x;
  if ((report.s + x).minCoeff() >= -tol) return CompCheck::holds;

  // Valid multipliers keep the slack zero on the inactive coordinates:
  // (d - A_x' y)_i = 0 for x_i > active_tol. Maximize min_i(s_i + x_i) over
  // that affine family.
  std::mt19937_64 rng(0);
  const Vector d = problem.oracle.subgrad(x, rng);
  const Matrix At = problem.manifold.jacobian(x).transpose();  // n x m
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(At.cols());

  std::vector<int> inactive;
  for (int i = 0; i < n; ++i) {
    if (x[i] > problem.region.active_tol()) inactive.push_back(i);
  }
  Matrix Bi(inactive.size(), m);
  Vector di(inactive.size());
  for (size_t r = 0; r < inactive.size(); ++r) {
    Bi.row(r) = At.row(inactive[r]);
    di[r] = d[inactive[r]];
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Bi);
  const Vector y0 = cod.solve(di);
  if ((Bi * y0 - di).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + di.norm())) {
    return CompCheck::indeterminate;  // no multiplier zeroes the inactive slack
  }
  const int k = m - static_cast<int>(cod.rank());

  auto min_gap = [&](const Vector& y) {
    return (d - At * y + x).minCoeff();
  };

  double best = min_gap(y0);
  if (k > 0) {
    // Free multiplier directions remain; sample the null space at desk scale.
    Eigen::JacobiSVD<Matrix> svd(Bi, Eigen::ComputeFullV);
    const Matrix Z = svd.matrixV().rightCols(k);
    std::mt19937_64 sampler(1);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 2000; ++trial) {
      Vector w(k);
      for (int i = 0; i < k; ++i) w[i] = gauss(sampler);
      const double scale = std::pow(10.0, (trial % 9) - 4);
      best = std::max(best, min_gap(y0 + scale * (Z * w)));
    }
    if (best < -tol) return CompCheck::indeterminate;
  }
  return best < -tol ? CompCheck::strictly_violated : CompCheck::holds;
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

namespace {

Vector draw_in_ball(std::mt19937_64& rng, int n, double eps) {
  if (n == 0 || eps == 0.0) return Vector::Zero(n);
  std::normal_distribution<double> gauss;
  Vector dir(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double radius = eps * std::pow(uni(rng), 1.0 / n);
  return (radius / norm) * dir;
}

}  // namespace

PerturbedProblem perturb(const Problem& problem, KernelPtr kernel, double eps,
                         uint64_t seed) {
  if (eps < 0) throw ConfigError("perturbation radius must be nonnegative");
  std::mt19937_64 rng(seed);
  PerturbedProblem pp;
  pp.base = problem;
  pp.u = draw_in_ball(rng, problem.manifold.codim(), eps);
  pp.v = draw_in_ball(rng, problem.dim(), eps);
  // On orthant problems the induced slack s = -H(x) v stays in the dual cone
  // when v is drawn from the negative orthant.
  if (problem.region.kind() == OpenRegion::Kind::orthant) {
    pp.v = -pp.v.cwiseAbs();
  }

  pp.perturbed = problem;
  pp.perturbed.name = problem.name + "+perturbed";
  pp.perturbed.known_points.clear();
  pp.perturbed.content_id = problem.content_id + ";perturbed-seed=" + std::to_string(seed);

  const Vector u = pp.u;
  const Vector v = pp.v;
  if (problem.manifold.is_affine()) {
    pp.perturbed.manifold.set_b(problem.manifold.b() - u);
  } else {
    const Manifold& base_m = problem.manifold;
    pp.perturbed.manifold = Manifold::nonlinear(
        base_m.name() + "+u", base_m.ambient_dim(), base_m.codim(),
        [base_m, u](const Vector& x) { return (base_m.constraint(x) + u).eval(); },
        [base_m](const Vector& x) { return base_m.jacobian(x); });
  }

  auto base_oracle = problem.oracle;
  KernelPtr k = std::move(kernel);
  pp.perturbed.oracle.value = [base_oracle, k, v](const Vector& x) {
    return base_oracle.value(x) + k->grad(x).dot(v);
  };
  pp.perturbed.oracle.subgrad = [base_oracle, k, v](const Vector& x,
                                                    std::mt19937_64& rng2) {
    return (base_oracle.subgrad(x, rng2) + k->hess_apply(x, v)).eval();
  };
  pp.perturbed.oracle.lipschitz_bound = base_oracle.lipschitz_bound;  // + O(eps)
  pp.perturbed.oracle.differentiable_at = base_oracle.differentiable_at;
  return pp;
}

std::pair<Vector, Vector> perturbed_residual_system(const PerturbedProblem& pp,
                                                    const BarrierKernel& kernel,
                                                    const Vector& x, const Vector& y) {
  if (!kernel.interior(x)) {
    throw DomainViolation("perturbed system: point not interior");
  }
  std::mt19937_64 rng(0);
  const Vector d = pp.base.oracle.subgrad(x, rng);
  const Matrix Ax = pp.base.manifold.jacobian(x);
  const Vector r1 =
      kernel.hess_inv_apply(x, d - Ax.transpose() * y) + pp.v;
  const Vector r2 = pp.base.manifold.constraint(x) + pp.u;
  return {r1, r2};
}

bool slack_sign_check_psd(const Matrix& X, const Matrix& V) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) {
    throw DomainViolation("slack sign check: X must be positive definite");
  }
  const Matrix Vs = 0.5 * (V + V.transpose());
  const Matrix Xi = llt.solve(Matrix::Identity(X.rows(), X.cols()));
  const Matrix s = -Xi * Vs * Xi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace barrierflow
