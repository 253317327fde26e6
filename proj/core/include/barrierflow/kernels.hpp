#pragma once

#include <memory>
#include <optional>
#include <string>

#include "barrierflow/types.hpp"

namespace barrierflow {

enum class KernelKind { entropy, neg_log, power, ball, log_det };

// A Legendre barrier kernel phi on an open convex domain C. The Hessian of phi
// induces the Riemannian metric <u,v>_x = u' H(x) v used throughout; the
// gradient map and its inverse are the mirror map pair.
//
// Domains: positive orthant (entropy, neg_log, power), open unit ball (ball),
// positive-definite cone in svec coordinates (log_det).
class BarrierKernel {
 public:
  virtual ~BarrierKernel() = default;

  KernelKind kind() const { return kind_; }
  const std::string& id() const { return id_; }

  virtual double value(const Vector& x) const = 0;
  virtual Vector grad(const Vector& x) const = 0;
  virtual Vector hess_apply(const Vector& x, const Vector& v) const = 0;
  virtual Vector hess_inv_apply(const Vector& x, const Vector& v) const = 0;

  // Solves grad(x) = z for x. Closed form for entropy and neg_log; safeguarded
  // per-coordinate Newton for power; damped Newton for ball and log_det
  // (tolerance 1e-12 on the sup-norm gradient residual, at most 100 steps,
  // step halving to stay interior).
  virtual Vector mirror_inverse(const Vector& z) const = 0;

  // D(x,y) = phi(x) - phi(y) - <grad(y), x-y>. x may lie on the boundary when
  // phi extends continuously there (entropy with 0 log 0 := 0, ball); y must
  // be interior.
  double bregman(const Vector& x, const Vector& y) const;

  // Distance-to-boundary gauge: min x_i, 1 - ||x||, or lambda_min(X).
  virtual double gauge(const Vector& x) const = 0;
  bool interior(const Vector& x) const { return x.allFinite() && gauge(x) > 0.0; }

  // Barrier parameter theta for logarithmically homogeneous self-concordant
  // kernels: n for neg_log, d for log_det, nullopt otherwise. The argument is
  // the ambient vector length.
  virtual std::optional<double> lhscb_theta(int n) const {
    (void)n;
    return std::nullopt;
  }

  // Strong convexity modulus valid on the compact slab of the domain where
  // the coordinate scale (componentwise bound, ball radius, or largest
  // eigenvalue) stays below box_hi; nullopt when none is declared.
  virtual std::optional<double> strong_convexity_mu(double box_hi) const {
    (void)box_hi;
    return std::nullopt;
  }

  // Continuous extension of H(x)^{-1} to the closed domain, available for the
  // kernels where the product flattens at the boundary (entropy: Diag(x),
  // ball: sqrt(1-||x||^2)(I - x x')). Others throw ExtensionUnavailable.
  virtual bool extends_to_boundary() const { return false; }
  virtual Vector hess_inv_apply_extended(const Vector& x, const Vector& v) const;

 protected:
  BarrierKernel(KernelKind kind, std::string id) : kind_(kind), id_(std::move(id)) {}
  // phi(x) at a closed-domain point, for bregman's first argument. Defaults to
  // value(); entropy and ball override with their continuous extensions.
  virtual double value_closure(const Vector& x) const { return value(x); }

  void require_interior(const Vector& x) const;
  void require_factorizable(const Vector& x) const;

 private:
  KernelKind kind_;
  std::string id_;
};

using KernelPtr = std::shared_ptr<const BarrierKernel>;

// Kernel ids: "entropy", "neglog", "power:P" with P in (1,2), "ball", "logdet".
KernelPtr make_kernel(const std::string& id);

// Single-owner cache of the metric at a fixed point: holds whatever H(x)
// needs (diagonals, or the matrix factorization) so repeated applies do not
// refactorize. Not shared across threads.
class MetricWorkspace {
 public:
  MetricWorkspace(KernelPtr kernel, Vector x);

  const Vector& point() const { return x_; }
  Vector h_apply(const Vector& v) const;
  Vector h_inv_apply(const Vector& v) const;

 private:
  KernelPtr kernel_;
  Vector x_;
  Vector diag_h_;      // diagonal kernels
  Vector diag_hinv_;
  Matrix mat_;         // ball: cached x; log_det: X
  Matrix mat_inv_;     // log_det: X^{-1}
  double scalar_ = 0;  // ball: sqrt(1-||x||^2)
};

}  // namespace barrierflow
