#pragma once

#include <string>
#include <utility>
#include <vector>

#include "barrierflow/kernels.hpp"
#include "barrierflow/oracles.hpp"

namespace barrierflow {

enum class Classification {
  interior_stationary,
  boundary_stationary,
  spurious,
  nonstationary,
};

std::string to_string(Classification c);
Classification classification_from_string(const std::string& s);

// Stationarity diagnosis at a point of M intersected with closure(C).
//
// stable_residual gauges membership in the stable set of the flow,
// ||P_x H^{-1} d|| with the boundary-extended operator; kkt_residual is the
// true first-order measure min_{mu, lambda>=0} ||d + A_x' mu + sum lambda_j
// grad g_j|| over the active set. A point is spurious exactly when the first
// is below tolerance and the second is not.
struct StationarityReport {
  Vector x;
  double stable_residual = 0;
  double kkt_residual = 0;
  double comp_gap = 0;  // min_i (s_i + x_i) on orthant regions, NaN otherwise
  Vector s;             // dual slack d - A_x' y
  Vector y;             // manifold multiplier from the metric projection
  Vector kkt_mu;        // manifold multiplier from the KKT least-squares
  Vector kkt_lambda;    // active inequality multipliers (size |J|)
  std::vector<int> active;
  Classification classification = Classification::nonstationary;
  double tau_stable = 0;
  double tau_kkt = 0;
};

StationarityReport classify(const Problem& problem, const BarrierKernel& kernel,
                            const Vector& x, double tau_stable = 1e-7,
                            double tau_kkt = 1e-5);

// The boundary-extended projected direction P_x H^{-1} d and its norm.
Vector stable_direction(const Problem& problem, const BarrierKernel& kernel,
                        const Vector& x, const Vector& d);
double stable_residual(const Problem& problem, const BarrierKernel& kernel,
                       const Vector& x, const Vector& d);

enum class CompCheck { holds, strictly_violated, indeterminate };
std::string to_string(CompCheck c);

// Complementarity s(x) + x >= 0 for orthant regions. "strictly_violated"
// means no valid multiplier choice can repair it, decided over the multiplier
// polytope; the decision is metric-free, so no kernel is needed.
CompCheck complementarity_check(const Problem& problem,
                                const StationarityReport& report, double tol);

// Perturbed problem f_v(x) = f(x) + <grad phi(x), v>, c_u(x) = c(x) + u.
// The perturbed subgradient selection is d(x) + H(x) v.
struct PerturbedProblem {
  Problem base;
  Problem perturbed;
  Vector u;
  Vector v;
};

PerturbedProblem perturb(const Problem& problem, KernelPtr kernel, double eps,
                         uint64_t seed);

// Residuals of the perturbed stable system at (x, y):
//   r1 = H^{-1}(d - A_x' y) + v,   r2 = c(x) + u.
std::pair<Vector, Vector> perturbed_residual_system(const PerturbedProblem& pp,
                                                    const BarrierKernel& kernel,
                                                    const Vector& x, const Vector& y);

// For the log_det kernel: s = -X^{-1} V X^{-1}; returns whether s is positive
// definite. True whenever V is negative definite.
bool slack_sign_check_psd(const Matrix& X, const Matrix& V);

// min over (mu free, lambda >= 0) of ||d + At mu + Gt lambda||, where At is
// n x m and Gt is n x q. Active-set iteration in the Lawson-Hanson style.
struct KktLeastSquares {
  Vector mu;
  Vector lambda;
  double residual = 0;
};
KktLeastSquares kkt_nnls(const Vector& d, const Matrix& At, const Matrix& Gt);

}  // namespace barrierflow
