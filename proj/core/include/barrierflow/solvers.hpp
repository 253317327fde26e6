#pragma once

#include <optional>

#include "barrierflow/diagnostics.hpp"
#include "barrierflow/kernels.hpp"
#include "barrierflow/oracles.hpp"

namespace barrierflow {

// eta_k = eta0 (constant) or eta0 / (k+1)^alpha with alpha in (0.5, 1], which
// keeps the sum divergent while eta_k = o(1/log k). An optional cap clamps
// from above.
struct StepSchedule {
  enum class Kind { constant, polynomial };
  Kind kind = Kind::constant;
  double eta0 = 0.05;
  double alpha = 0.0;
  std::optional<double> cap;

  static StepSchedule constant(double eta);
  static StepSchedule polynomial(double eta0, double alpha);
  double eta(long k) const;
};

enum class Scheme { rhb, mirror };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SolverConfig {
  StepSchedule schedule;
  long max_iters = 1000;
  Scheme scheme = Scheme::rhb;
  double noise_bound = 0.0;
  uint64_t seed = 0;
  double stop_tol = 1e-8;  // on the stable residual
  long record_every = 1;
  double tau_stable = 1e-7;  // classification tolerances for the terminal report
  double tau_kkt = 1e-5;

  void validate() const;
};

struct TraceRow {
  long k = 0;
  Vector x;
  double f = 0;
  double eta = 0;
  double stable_res = 0;
  double kkt_res = 0;
  double gauge = 0;
};

struct Trace {
  std::vector<TraceRow> rows;
  StationarityReport terminal;
  long iters = 0;
  double wall_seconds = 0;
  long halvings_total = 0;  // interior-safety halvings over the whole run
};

struct StepResult {
  Vector x;
  // Retraction defect of the realized update, ||x+ - raw|| / eta, the
  // discretization's Delta_k.
  double delta_norm = 0;
  int halvings = 0;
};

// One step x+ = R_x(-eta P_{T_x M} H^{-1}(d + xi)). On affine manifolds the
// retraction is the identity; if the raw step leaves C (possible only for
// non-LHSCB kernels) it is halved until interior, and StepRejected is thrown
// if 60 halvings do not suffice.
StepResult rhb_step(const BarrierKernel& kernel, const Manifold& manifold,
                    const OpenRegion& region, const Vector& x, const Vector& d,
                    const Vector& xi, double eta);

// Safe stepsize 1/(M_hat (M_d + M_xi)^2) for logarithmically homogeneous
// self-concordant kernels; every step of that length stays in the Dikin
// ellipsoid and hence interior. Throws NotSelfConcordant otherwise.
double safe_step_threshold(const BarrierKernel& kernel, int n, double M_d,
                           double M_xi, double M_hat);

// Estimate for M_hat when no a-priori bound is available: the largest
// spectral norm of H(x_k)^{-1} along a pilot run.
double estimate_metric_bound(const Problem& problem, const BarrierKernel& kernel,
                             const SolverConfig& pilot);

// Mirror-descent step on an affine manifold:
//   x+ = argmin <d + xi, x> + (1/eta) D_phi(x, x_k)  s.t.  A x = b,
// i.e. grad phi(x+) = grad phi(x_k) - eta (d + xi - A' y), A x+ = b.
// Closed forms are used for the entropy kernel (unconstrained and simplex);
// everything else goes through a damped Newton iteration on the dual y.
Vector mirror_step(const BarrierKernel& kernel, const Manifold& manifold,
                   const Vector& x, const Vector& d, const Vector& xi, double eta);

// The generic dual-Newton path, bypassing closed forms (used by equivalence
// checks).
Vector mirror_step_dual_newton(const BarrierKernel& kernel, const Manifold& manifold,
                               const Vector& x, const Vector& d, const Vector& xi,
                               double eta);

Trace run(const Problem& problem, const BarrierKernel& kernel,
          const SolverConfig& config);
Trace run(const Problem& problem, const BarrierKernel& kernel,
          const SolverConfig& config, const Vector& x0);

}  // namespace barrierflow
