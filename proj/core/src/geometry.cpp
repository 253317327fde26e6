#include "barrierflow/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace barrierflow {

namespace {
constexpr double kManifoldTol = 1e-8;
constexpr double kRetractTol = 1e-10;
constexpr int kRetractMaxNewton = 50;
constexpr int kRetractMaxHalvings = 60;
constexpr double kRankRatio = 1e-10;

void check_row_rank(const Matrix& A, const std::string& who) {
  if (A.rows() == 0) return;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv.minCoeff() <= kRankRatio * sv.maxCoeff()) {
    throw RankDeficient(who + ": constraint Jacobian is not of full row rank");
  }
}
}  // namespace

// ---------------------------------------------------------------------------
// Manifold
// ---------------------------------------------------------------------------

Manifold Manifold::affine(Matrix A, Vector b) {
  if (A.rows() != b.size()) throw ConfigError("affine manifold: A rows != b size");
  check_row_rank(A, "affine manifold");
  Manifold m;
  m.affine_ = true;
  m.n_ = static_cast<int>(A.cols());
  m.m_ = static_cast<int>(A.rows());
  m.name_ = "affine";
  m.A_ = std::move(A);
  m.b_ = std::move(b);
  return m;
}

Manifold Manifold::free_space(int ambient_dim) {
  return affine(Matrix::Zero(0, ambient_dim), Vector::Zero(0));
}

Manifold Manifold::nonlinear(std::string name, int ambient_dim, int codim,
                             ConstraintFn c, JacobianFn jac) {
  Manifold m;
  m.affine_ = false;
  m.n_ = ambient_dim;
  m.m_ = codim;
  m.name_ = std::move(name);
  m.c_ = std::move(c);
  m.jac_ = std::move(jac);
  return m;
}

Manifold Manifold::sphere(int ambient_dim) {
  return nonlinear(
      "sphere", ambient_dim, 1,
      [](const Vector& x) {
        Vector c(1);
        c[0] = x.squaredNorm() - 1.0;
        return c;
      },
      [](const Vector& x) {
        Matrix J(1, x.size());
        J.row(0) = 2.0 * x.transpose();
        return J;
      });
}

Vector Manifold::constraint(const Vector& x) const {
  if (affine_) return A_ * x - b_;
  return c_(x);
}

Matrix Manifold::jacobian(const Vector& x) const {
  if (affine_) return A_;
  Matrix J = jac_(x);
  check_row_rank(J, "manifold '" + name_ + "'");
  return J;
}

bool Manifold::contains(const Vector& x, double tol) const {
  if (m_ == 0) return true;
  return constraint(x).lpNorm<Eigen::Infinity>() <= tol;
}

const Matrix& Manifold::A() const {
  if (!affine_) throw ConfigError("A() on a nonlinear manifold");
  return A_;
}

const Vector& Manifold::b() const {
  if (!affine_) throw ConfigError("b() on a nonlinear manifold");
  return b_;
}

void Manifold::set_b(Vector b) {
  if (!affine_) throw ConfigError("set_b() on a nonlinear manifold");
  if (b.size() != m_) throw ConfigError("set_b(): size mismatch");
  b_ = std::move(b);
}

// ---------------------------------------------------------------------------
// OpenRegion
// ---------------------------------------------------------------------------

bool OpenRegion::contains(const Vector& x) const {
  switch (kind_) {
    case Kind::free:
      return x.allFinite();
    case Kind::orthant:
      return (x.array() > 0.0).all();
    case Kind::ball:
      return x.norm() < 1.0;
  }
  return false;
}

double OpenRegion::gauge(const Vector& x) const {
  switch (kind_) {
    case Kind::free:
      return std::numeric_limits<double>::infinity();
    case Kind::orthant:
      return x.minCoeff();
    case Kind::ball:
      return 1.0 - x.norm();
  }
  return -1.0;
}

bool OpenRegion::in_closure(const Vector& x, double tol) const {
  if (kind_ == Kind::free) return x.allFinite();
  return gauge(x) >= -tol;
}

int OpenRegion::num_inequalities(int n) const {
  switch (kind_) {
    case Kind::free:
      return 0;
    case Kind::orthant:
      return n;
    case Kind::ball:
      return 1;
  }
  return 0;
}

Vector OpenRegion::g(const Vector& x) const {
  switch (kind_) {
    case Kind::free:
      return Vector::Zero(0);
    case Kind::orthant:
      return -x;
    case Kind::ball: {
      Vector v(1);
      v[0] = x.squaredNorm() - 1.0;
      return v;
    }
  }
  return Vector::Zero(0);
}

Matrix OpenRegion::g_jacobian(const Vector& x) const {
  const int n = static_cast<int>(x.size());
  switch (kind_) {
    case Kind::free:
      return Matrix::Zero(0, n);
    case Kind::orthant:
      return -Matrix::Identity(n, n);
    case Kind::ball: {
      Matrix J(1, n);
      J.row(0) = 2.0 * x.transpose();
      return J;
    }
  }
  return Matrix::Zero(0, n);
}

std::vector<int> OpenRegion::active_set(const Vector& x) const {
  std::vector<int> J;
  const Vector gv = g(x);
  for (int i = 0; i < gv.size(); ++i) {
    if (gv[i] >= -active_tol_) J.push_back(i);
  }
  return J;
}

// ---------------------------------------------------------------------------
// Metric projection and search direction
// ---------------------------------------------------------------------------

namespace {

struct ProjectionFactors {
  Matrix W;                   // H^{-1} A', n x m
  Eigen::LLT<Matrix> gram;    // Cholesky of A H^{-1} A'
  Matrix Ax;                  // m x n Jacobian at x
};

ProjectionFactors factor_projection(const BarrierKernel& kernel,
                                    const Manifold& manifold, const Vector& x) {
  ProjectionFactors f;
  f.Ax = manifold.jacobian(x);
  const int m = static_cast<int>(f.Ax.rows());
  f.W.resize(x.size(), m);
  for (int j = 0; j < m; ++j) {
    f.W.col(j) = kernel.hess_inv_apply(x, f.Ax.row(j).transpose());
  }
  if (m > 0) {
    const Matrix G = f.Ax * f.W;
    f.gram.compute(G);
    if (f.gram.info() != Eigen::Success) {
      throw RankDeficient("A H^{-1} A' is numerically singular");
    }
  }
  return f;
}

void check_point(const BarrierKernel& kernel, const Manifold& manifold,
                 const Vector& x) {
  if (!kernel.interior(x)) {
    throw DomainViolation("point not interior to the kernel domain");
  }
  if (!manifold.contains(x, kManifoldTol)) {
    throw DomainViolation("point not on the manifold");
  }
}

}  // namespace

Vector project_tangent(const BarrierKernel& kernel, const Manifold& manifold,
                       const Vector& x, const Vector& u) {
  check_point(kernel, manifold, x);
  if (manifold.codim() == 0) return u;
  const auto f = factor_projection(kernel, manifold, x);
  const Vector t = f.gram.solve(f.Ax * u);
  return u - f.W * t;
}

DualData search_direction(const BarrierKernel& kernel, const Manifold& manifold,
                          const Vector& x, const Vector& d) {
  check_point(kernel, manifold, x);
  DualData out;
  if (manifold.codim() == 0) {
    out.y = Vector::Zero(0);
    out.s = d;
    out.v = -kernel.hess_inv_apply(x, d);
    return out;
  }
  const auto f = factor_projection(kernel, manifold, x);
  const Vector hinv_d = kernel.hess_inv_apply(x, d);
  out.y = f.gram.solve(f.Ax * hinv_d);
  out.s = d - f.Ax.transpose() * out.y;
  out.v = -kernel.hess_inv_apply(x, out.s);
  return out;
}

Vector retract(const Manifold& manifold, const Vector& x, const Vector& step,
               const OpenRegion& region) {
  require_finite(step, "retraction step");
  if (manifold.is_affine()) {
    Vector z = x + step;
    if (region.contains(z)) return z;
    throw RetractionFailed("affine retraction left the open region");
  }
  Vector tangent = step;
  for (int h = 0; h <= kRetractMaxHalvings; ++h) {
    Vector z = x + tangent;
    bool restored = false;
    for (int it = 0; it < kRetractMaxNewton; ++it) {
      const Vector c = manifold.constraint(z);
      if (c.lpNorm<Eigen::Infinity>() <= kRetractTol) {
        restored = true;
        break;
      }
      const Matrix J = manifold.jacobian(z);
      // Gauss-Newton correction z <- z - J'(J J')^{-1} c
      Eigen::LLT<Matrix> llt(J * J.transpose());
      if (llt.info() != Eigen::Success) {
        throw RankDeficient("retraction: J J' singular");
      }
      z -= J.transpose() * llt.solve(c);
    }
    if (restored && region.contains(z)) return z;
    tangent *= 0.5;
  }
  throw RetractionFailed("retraction failed after " +
                         std::to_string(kRetractMaxHalvings) + " halvings");
}

std::vector<RetractionRatio> first_order_retraction_check(
    const Manifold& manifold, const BarrierKernel& kernel, const OpenRegion& region,
    const Vector& x, const Vector& d, std::span<const double> etas) {
  const Vector w = project_tangent(kernel, manifold, x,
                                   kernel.hess_inv_apply(x, d));
  std::vector<RetractionRatio> table;
  table.reserve(etas.size());
  for (double eta : etas) {
    const Vector raw = x - eta * w;
    const Vector retracted = retract(manifold, x, -eta * w, region);
    table.push_back({eta, (retracted - raw).norm() / eta});
  }
  return table;
}

}  // namespace barrierflow
