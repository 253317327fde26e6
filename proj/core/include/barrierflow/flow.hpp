#pragma once

#include <optional>
#include <span>

#include "barrierflow/diagnostics.hpp"
#include "barrierflow/kernels.hpp"
#include "barrierflow/oracles.hpp"

namespace barrierflow {

// Explicit-Euler integration of the interior subgradient flow
//   dx/dt = -P_{T_x M} H(x)^{-1} d(x),
// with an interior-safety cap: each step is shortened until the boundary
// gauge shrinks by at most the factor interior_safety.
struct FlowConfig {
  double h = 1e-4;
  double t_max = 10.0;
  double interior_safety = 0.5;
  double record_dt = 0.0;  // 0: record every step
  // Optional sup-norm neighborhood watch; entry/exit events are logged.
  std::optional<Vector> watch_center;
  double watch_eps = 0.0;

  void validate() const;
};

struct FlowSample {
  double t;
  Vector x;
  double f;
};

struct FlowEvent {
  double t;
  bool entry;  // true: entered the watched neighborhood, false: left it
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  std::vector<FlowEvent> events;
  Vector terminal_x;
  double terminal_stable_residual = 0;
};

FlowTrace integrate(const Problem& problem, const BarrierKernel& kernel,
                    const Vector& x0, const FlowConfig& config);

struct ExitRecord {
  double delta;
  double t_exit;   // first time ||x - xbar||_inf >= eps (0 when starting outside)
  bool exited;
  int reentries;   // times the trajectory re-entered the neighborhood afterwards
};

// Starts at sup-norm distance delta from xbar (toward the problem's default
// interior point, retracted to M), integrates, and reports exit times from
// the neighborhood {||x - xbar||_inf < eps}.
std::vector<ExitRecord> escape_experiment(const Problem& problem,
                                          const BarrierKernel& kernel,
                                          const Vector& xbar, double eps,
                                          std::span<const double> deltas,
                                          const FlowConfig& config);

struct ClusterSummary {
  std::vector<Vector> centroids;
  std::vector<int> counts;
  double max_tail_stable_residual = 0;
};

// Clusters the tail of a trajectory (greedy, sup-norm radius) and reports the
// largest stable residual seen over the tail.
ClusterSummary omega_limit_estimate(const Problem& problem, const BarrierKernel& kernel,
                                    const FlowTrace& trace, double tail_fraction,
                                    double cluster_radius = 1e-3);

}  // namespace barrierflow
