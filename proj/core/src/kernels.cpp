#include "barrierflow/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace barrierflow {

namespace {

// Below this gauge a factorization of H is no longer trustworthy and the
// point is treated as numerically on the boundary.
constexpr double kBoundaryGauge = 1e-14;

constexpr double kMirrorTol = 1e-12;
constexpr int kMirrorMaxIter = 100;

}  // namespace

void BarrierKernel::require_interior(const Vector& x) const {
  require_finite(x, "kernel argument");
  if (!(gauge(x) > 0.0)) {
    throw DomainViolation(id() + ": point on or outside the domain boundary");
  }
}

void BarrierKernel::require_factorizable(const Vector& x) const {
  require_interior(x);
  if (gauge(x) < kBoundaryGauge) {
    throw SingularMetric(id() + ": point numerically on the boundary, gauge=" +
                         std::to_string(gauge(x)));
  }
}

Vector BarrierKernel::hess_inv_apply_extended(const Vector& x, const Vector& v) const {
  if (gauge(x) > 0.0) return hess_inv_apply(x, v);
  throw ExtensionUnavailable(id() + ": no boundary extension of H^{-1}");
}

double BarrierKernel::bregman(const Vector& x, const Vector& y) const {
  require_interior(y);
  require_finite(x, "bregman first argument");
  if (gauge(x) < 0.0) {
    throw DomainViolation(id() + ": bregman first argument outside closed domain");
  }
  // Same evaluation path for interior x so that D(x,x) is exactly zero; the
  // closure extension only serves genuine boundary arguments.
  const double value_x = gauge(x) > 0.0 ? value(x) : value_closure(x);
  return value_x - value(y) - grad(y).dot(x - y);
}

namespace {

// ---------------------------------------------------------------------------
// entropy: phi(x) = sum x_i (log x_i - 1) on the positive orthant
//   grad = log x, H = Diag(1/x), H^{-1} = Diag(x), mirror inverse x = exp(z)
// ---------------------------------------------------------------------------
class EntropyKernel final : public BarrierKernel {
 public:
  EntropyKernel() : BarrierKernel(KernelKind::entropy, "entropy") {}

  double value(const Vector& x) const override {
    require_interior(x);
    return (x.array() * (x.array().log() - 1.0)).sum();
  }
  Vector grad(const Vector& x) const override {
    require_interior(x);
    return x.array().log();
  }
  Vector hess_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() / x.array();
  }
  Vector hess_inv_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() * x.array();
  }
  Vector mirror_inverse(const Vector& z) const override {
    require_finite(z, "mirror argument");
    return z.array().exp();
  }
  double gauge(const Vector& x) const override { return x.minCoeff(); }
  std::optional<double> strong_convexity_mu(double box_hi) const override {
    return 1.0 / box_hi;
  }

  bool extends_to_boundary() const override { return true; }
  Vector hess_inv_apply_extended(const Vector& x, const Vector& v) const override {
    return v.array() * x.array();
  }

 protected:
  double value_closure(const Vector& x) const override {
    double s = 0;
    for (int i = 0; i < x.size(); ++i) {
      if (x[i] > 0) s += x[i] * (std::log(x[i]) - 1.0);  // 0 log 0 := 0
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// neg_log: phi(x) = -sum log x_i, theta = n LHSCB for the orthant
//   grad = -1/x, H = Diag(1/x^2), H^{-1} = Diag(x^2), mirror inverse x = -1/z
// ---------------------------------------------------------------------------
class NegLogKernel final : public BarrierKernel {
 public:
  NegLogKernel() : BarrierKernel(KernelKind::neg_log, "neglog") {}

  double value(const Vector& x) const override {
    require_interior(x);
    return -x.array().log().sum();
  }
  Vector grad(const Vector& x) const override {
    require_interior(x);
    return -x.array().inverse();
  }
  Vector hess_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() / x.array().square();
  }
  Vector hess_inv_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() * x.array().square();
  }
  Vector mirror_inverse(const Vector& z) const override {
    require_finite(z, "mirror argument");
    if ((z.array() >= 0.0).any()) {
      throw RangeViolation("neglog: mirror argument must be componentwise negative");
    }
    return -z.array().inverse();
  }
  double gauge(const Vector& x) const override { return x.minCoeff(); }
  std::optional<double> lhscb_theta(int n) const override { return double(n); }
  std::optional<double> strong_convexity_mu(double box_hi) const override {
    return 1.0 / (box_hi * box_hi);
  }
};

// ---------------------------------------------------------------------------
// power: phi(x) = sum x_i^{2-p} / ((2-p)(1-p)), p in (1,2)
//   grad = x^{1-p}/(1-p), H = Diag(x^{-p}), H^{-1} = Diag(x^p)
//   mirror inverse by safeguarded per-coordinate Newton on the gradient map
// ---------------------------------------------------------------------------
class PowerKernel final : public BarrierKernel {
 public:
  explicit PowerKernel(double p)
      : BarrierKernel(KernelKind::power, "power:" + std::to_string(p)), p_(p) {
    if (!(p > 1.0 && p < 2.0)) {
      throw ConfigError("power kernel exponent must lie in (1,2)");
    }
  }

  double value(const Vector& x) const override {
    require_interior(x);
    return x.array().pow(2.0 - p_).sum() / ((2.0 - p_) * (1.0 - p_));
  }
  Vector grad(const Vector& x) const override {
    require_interior(x);
    return x.array().pow(1.0 - p_) / (1.0 - p_);
  }
  Vector hess_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() * x.array().pow(-p_);
  }
  Vector hess_inv_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    return v.array() * x.array().pow(p_);
  }
  Vector mirror_inverse(const Vector& z) const override {
    require_finite(z, "mirror argument");
    if ((z.array() >= 0.0).any()) {
      throw RangeViolation("power: mirror argument must be componentwise negative");
    }
    Vector x(z.size());
    for (int i = 0; i < z.size(); ++i) x[i] = invert_coordinate(z[i]);
    return x;
  }
  double gauge(const Vector& x) const override { return x.minCoeff(); }
  std::optional<double> strong_convexity_mu(double box_hi) const override {
    return std::pow(box_hi, -p_);
  }

 private:
  // Solve t^{1-p}/(1-p) = z for t > 0, z < 0.
  double invert_coordinate(double z) const {
    double t = 1.0;
    for (int it = 0; it < kMirrorMaxIter; ++it) {
      const double g = std::pow(t, 1.0 - p_) / (1.0 - p_) - z;
      if (std::abs(g) <= kMirrorTol) return t;
      const double dg = std::pow(t, -p_);
      double step = -g / dg;
      double tnew = t + step;
      // halve until positive
      while (tnew <= 0.0) {
        step *= 0.5;
        tnew = t + step;
        if (std::abs(step) < 1e-300) break;
      }
      t = tnew;
    }
    const double res = std::abs(std::pow(t, 1.0 - p_) / (1.0 - p_) - z);
    if (res > kMirrorTol) {
      throw NoConvergence("power mirror inverse: residual " + std::to_string(res));
    }
    return t;
  }

  double p_;
};

// ---------------------------------------------------------------------------
// ball: phi(x) = -sqrt(1-||x||^2) on the open unit ball
//   grad = x/s with s = sqrt(1-||x||^2)
//   H = I/s + x x'/s^3,  H^{-1} = s (I - x x')
// ---------------------------------------------------------------------------
class BallKernel final : public BarrierKernel {
 public:
  BallKernel() : BarrierKernel(KernelKind::ball, "ball") {}

  double value(const Vector& x) const override {
    require_interior(x);
    return -std::sqrt(1.0 - x.squaredNorm());
  }
  Vector grad(const Vector& x) const override {
    require_interior(x);
    return x / std::sqrt(1.0 - x.squaredNorm());
  }
  Vector hess_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    const double s = std::sqrt(1.0 - x.squaredNorm());
    return v / s + x * (x.dot(v) / (s * s * s));
  }
  Vector hess_inv_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    const double s = std::sqrt(1.0 - x.squaredNorm());
    return s * (v - x * x.dot(v));
  }
  Vector mirror_inverse(const Vector& z) const override {
    require_finite(z, "mirror argument");
    // Damped Newton on grad(x) = z from the ball center.
    Vector x = Vector::Zero(z.size());
    for (int it = 0; it < kMirrorMaxIter; ++it) {
      const Vector g = grad(x) - z;
      if (g.lpNorm<Eigen::Infinity>() <= kMirrorTol) return x;
      Vector step = -hess_inv_apply(x, g);
      Vector xnew = x + step;
      while (xnew.squaredNorm() >= 1.0) {
        step *= 0.5;
        xnew = x + step;
      }
      x = xnew;
    }
    const double res = (grad(x) - z).lpNorm<Eigen::Infinity>();
    if (res > kMirrorTol) {
      throw NoConvergence("ball mirror inverse: residual " + std::to_string(res));
    }
    return x;
  }
  double gauge(const Vector& x) const override { return 1.0 - x.norm(); }
  std::optional<double> strong_convexity_mu(double) const override { return 1.0; }

  bool extends_to_boundary() const override { return true; }
  Vector hess_inv_apply_extended(const Vector& x, const Vector& v) const override {
    const double sq = std::max(0.0, 1.0 - x.squaredNorm());
    return std::sqrt(sq) * (v - x * x.dot(v));
  }

 protected:
  double value_closure(const Vector& x) const override {
    return -std::sqrt(std::max(0.0, 1.0 - x.squaredNorm()));
  }
};

// ---------------------------------------------------------------------------
// log_det: phi(X) = -log det X on the positive-definite cone, theta = d.
// Points are symmetric matrices in the scaled upper-triangle embedding.
//   grad = svec(-X^{-1}), H[V] = X^{-1} V X^{-1}, H^{-1}[V] = X V X
// ---------------------------------------------------------------------------
class LogDetKernel final : public BarrierKernel {
 public:
  LogDetKernel() : BarrierKernel(KernelKind::log_det, "logdet") {}

  double value(const Vector& x) const override {
    require_interior(x);
    const Matrix X = svec_to_sym(x);
    Eigen::LLT<Matrix> llt(X);
    return -2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  Vector grad(const Vector& x) const override {
    require_interior(x);
    return sym_to_svec(-inverse_of(x));
  }
  Vector hess_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    const Matrix Xi = inverse_of(x);
    const Matrix V = svec_to_sym(v);
    return sym_to_svec(Xi * V * Xi);
  }
  Vector hess_inv_apply(const Vector& x, const Vector& v) const override {
    require_factorizable(x);
    const Matrix X = svec_to_sym(x);
    const Matrix V = svec_to_sym(v);
    return sym_to_svec(X * V * X);
  }
  Vector mirror_inverse(const Vector& z) const override {
    require_finite(z, "mirror argument");
    const Matrix Z = svec_to_sym(z);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z);
    if (es.eigenvalues().maxCoeff() >= 0.0) {
      throw RangeViolation("logdet: mirror argument must be negative definite");
    }
    // Damped Newton on -X^{-1} = Z; Newton direction solves X^{-1} D X^{-1} = -G.
    const int d = static_cast<int>(Z.rows());
    Matrix X = Matrix::Identity(d, d);
    for (int it = 0; it < kMirrorMaxIter; ++it) {
      const Matrix G = -X.inverse() - Z;
      if (sym_to_svec(G).lpNorm<Eigen::Infinity>() <= kMirrorTol) return sym_to_svec(X);
      Matrix D = -X * G * X;
      Matrix Xnew = X + D;
      while (Eigen::LLT<Matrix>(Xnew).info() != Eigen::Success) {
        D *= 0.5;
        Xnew = X + D;
      }
      X = Xnew;
    }
    const double res = sym_to_svec((-X.inverse() - Z).eval()).lpNorm<Eigen::Infinity>();
    if (res > kMirrorTol) {
      throw NoConvergence("logdet mirror inverse: residual " + std::to_string(res));
    }
    return sym_to_svec(X);
  }
  double gauge(const Vector& x) const override {
    Eigen::SelfAdjointEigenSolver<Matrix> es(svec_to_sym(x));
    return es.eigenvalues().minCoeff();
  }
  std::optional<double> lhscb_theta(int n) const override {
    return double(svec_order(n));
  }
  std::optional<double> strong_convexity_mu(double box_hi) const override {
    return 1.0 / (box_hi * box_hi);
  }

 private:
  Matrix inverse_of(const Vector& x) const {
    const Matrix X = svec_to_sym(x);
    Eigen::LLT<Matrix> llt(X);
    if (llt.info() != Eigen::Success) {
      throw SingularMetric("logdet: Cholesky failed");
    }
    return llt.solve(Matrix::Identity(X.rows(), X.cols()));
  }
};

}  // namespace

KernelPtr make_kernel(const std::string& id) {
  if (id == "entropy") return std::make_shared<EntropyKernel>();
  if (id == "neglog") return std::make_shared<NegLogKernel>();
  if (id == "ball") return std::make_shared<BallKernel>();
  if (id == "logdet") return std::make_shared<LogDetKernel>();
  if (id.rfind("power:", 0) == 0) {
    return std::make_shared<PowerKernel>(std::stod(id.substr(6)));
  }
  throw ConfigError("unknown kernel id '" + id + "'");
}

MetricWorkspace::MetricWorkspace(KernelPtr kernel, Vector x)
    : kernel_(std::move(kernel)), x_(std::move(x)) {
  switch (kernel_->kind()) {
    case KernelKind::entropy:
      diag_h_ = x_.array().inverse();
      diag_hinv_ = x_;
      break;
    case KernelKind::neg_log:
      diag_h_ = x_.array().square().inverse();
      diag_hinv_ = x_.array().square();
      break;
    case KernelKind::power:
      diag_h_ = kernel_->hess_apply(x_, Vector::Ones(x_.size()));
      diag_hinv_ = diag_h_.array().inverse();
      break;
    case KernelKind::ball:
      scalar_ = std::sqrt(1.0 - x_.squaredNorm());
      if (!(scalar_ > 0)) throw SingularMetric("ball workspace at boundary");
      break;
    case KernelKind::log_det: {
      mat_ = svec_to_sym(x_);
      Eigen::LLT<Matrix> llt(mat_);
      if (llt.info() != Eigen::Success) throw SingularMetric("logdet workspace: not PD");
      mat_inv_ = llt.solve(Matrix::Identity(mat_.rows(), mat_.cols()));
      break;
    }
  }
}

Vector MetricWorkspace::h_apply(const Vector& v) const {
  switch (kernel_->kind()) {
    case KernelKind::entropy:
    case KernelKind::neg_log:
    case KernelKind::power:
      return v.array() * diag_h_.array();
    case KernelKind::ball:
      return v / scalar_ + x_ * (x_.dot(v) / (scalar_ * scalar_ * scalar_));
    case KernelKind::log_det:
      return sym_to_svec(mat_inv_ * svec_to_sym(v) * mat_inv_);
  }
  throw Error("unreachable");
}

Vector MetricWorkspace::h_inv_apply(const Vector& v) const {
  switch (kernel_->kind()) {
    case KernelKind::entropy:
    case KernelKind::neg_log:
    case KernelKind::power:
      return v.array() * diag_hinv_.array();
    case KernelKind::ball:
      return scalar_ * (v - x_ * x_.dot(v));
    case KernelKind::log_det:
      return sym_to_svec(mat_ * svec_to_sym(v) * mat_);
  }
  throw Error("unreachable");
}

}  // namespace barrierflow
