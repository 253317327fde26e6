#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "barrierflow/kernels.hpp"
#include "barrierflow/types.hpp"

namespace barrierflow {

// The smooth manifold part of the feasible set: either an affine subspace
// {x : A x = b} with A of full row rank, or a nonlinear {x : c(x) = 0} given
// by evaluation maps. Codimension zero (no constraint) is the affine case
// with an empty A.
class Manifold {
 public:
  using ConstraintFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  static Manifold affine(Matrix A, Vector b);
  static Manifold free_space(int ambient_dim);
  static Manifold nonlinear(std::string name, int ambient_dim, int codim,
                            ConstraintFn c, JacobianFn jac);
  // Registry-named nonlinear manifold: the unit sphere ||x||^2 = 1.
  static Manifold sphere(int ambient_dim);

  bool is_affine() const { return affine_; }
  int ambient_dim() const { return n_; }
  int codim() const { return m_; }
  const std::string& name() const { return name_; }

  Vector constraint(const Vector& x) const;  // A x - b, or c(x)
  Matrix jacobian(const Vector& x) const;    // m x n; rank-checked for nonlinear
  bool contains(const Vector& x, double tol = 1e-8) const;

  const Matrix& A() const;
  const Vector& b() const;
  void set_b(Vector b);  // used by problem perturbation

 private:
  Manifold() = default;

  bool affine_ = true;
  int n_ = 0;
  int m_ = 0;
  std::string name_;
  Matrix A_;
  Vector b_;
  ConstraintFn c_;
  JacobianFn jac_;
};

// The open region C. Registry problems use the whole space, the positive
// orthant {x > 0}, or the open unit ball {||x|| < 1}; each carries its
// inequality description g(x) < 0 and an active-set tolerance.
class OpenRegion {
 public:
  enum class Kind { free, orthant, ball };

  explicit OpenRegion(Kind kind, double active_tol = 1e-7)
      : kind_(kind), active_tol_(active_tol) {}

  Kind kind() const { return kind_; }
  double active_tol() const { return active_tol_; }

  bool contains(const Vector& x) const;
  // Distance-to-boundary gauge; +inf for the free region.
  double gauge(const Vector& x) const;
  bool in_closure(const Vector& x, double tol = 1e-9) const;

  int num_inequalities(int n) const;
  Vector g(const Vector& x) const;            // inequality values
  Matrix g_jacobian(const Vector& x) const;   // rows are grad g_i
  std::vector<int> active_set(const Vector& x) const;  // {i : g_i >= -active_tol}

 private:
  Kind kind_;
  double active_tol_;
};

// Primal-dual data of the metric projection subproblem
//   min_{A_x v = 0}  <d, v> + (1/2) ||v||_x^2
// with v = -P_x H^{-1} d, y = (A H^{-1} A')^{-1} A H^{-1} d, s = d - A' y,
// so that H v + s = 0 and A_x v = 0.
struct DualData {
  Vector v;
  Vector y;
  Vector s;
};

// P_x u = u - H^{-1} A' (A H^{-1} A')^{-1} A u, the H-metric projection onto
// the tangent space of M at x.
Vector project_tangent(const BarrierKernel& kernel, const Manifold& manifold,
                       const Vector& x, const Vector& u);

DualData search_direction(const BarrierKernel& kernel, const Manifold& manifold,
                          const Vector& x, const Vector& d);

// Returns a point on M inside C. Affine manifolds use the identity retraction;
// nonlinear ones run Gauss-Newton feasibility restoration, with step halving
// on the tangent step if the corrected point leaves C.
Vector retract(const Manifold& manifold, const Vector& x, const Vector& step,
               const OpenRegion& region);

struct RetractionRatio {
  double eta;
  double ratio;  // ||R_x(-eta w) - (x - eta w)|| / eta
};

std::vector<RetractionRatio> first_order_retraction_check(
    const Manifold& manifold, const BarrierKernel& kernel, const OpenRegion& region,
    const Vector& x, const Vector& d, std::span<const double> etas);

}  // namespace barrierflow
