#include <doctest.h>

#include <cmath>
#include <sstream>

#include "barrierflow/solvers.hpp"
#include "oracle_support.hpp"

using namespace barrierflow;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<int>(v.size()));
  int i = 0;
  for (double t : v) x[i++] = t;
  return x;
}

Manifold simplex(int n) {
  return Manifold::affine(Matrix::Ones(1, n), Vector::Ones(1));
}

}  // namespace

TEST_CASE("step schedules") {
  const auto c = StepSchedule::constant(0.1);
  CHECK(c.eta(0) == 0.1);
  CHECK(c.eta(1000) == 0.1);

  const auto p = StepSchedule::polynomial(1.0, 0.75);
  CHECK(p.eta(0) == 1.0);
  CHECK(p.eta(15) == doctest::Approx(1.0 / std::pow(16.0, 0.75)));

  auto capped = StepSchedule::polynomial(1.0, 0.6);
  capped.cap = 0.05;
  CHECK(capped.eta(0) == 0.05);

  CHECK_THROWS_AS(StepSchedule::constant(0.0), ConfigError);
  CHECK_THROWS_AS(StepSchedule::polynomial(1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(StepSchedule::polynomial(1.0, 1.5), ConfigError);
}

TEST_CASE("rhb step: worked simplex value and fixed point") {
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  const Vector x = vec({0.5, 0.5});

  const auto step =
      rhb_step(*kernel, p.manifold, p.region, x, vec({-1, 0}), Vector::Zero(2), 0.1);
  CHECK((step.x - vec({0.525, 0.475})).norm() <= 1e-14);
  CHECK(step.delta_norm == 0.0);  // identity retraction
  CHECK(step.halvings == 0);

  // zero direction: exact fixed point
  const auto still =
      rhb_step(*kernel, p.manifold, p.region, x, vec({2, -1}), vec({-2, 1}), 0.1);
  CHECK((still.x - x).norm() == 0.0);
}

TEST_CASE("rhb step on nn-pca stays on the sphere inside the orthant") {
  const Problem p = registry_get("nn-pca");
  auto kernel = make_kernel(p.default_kernel);
  std::mt19937_64 rng(3);
  Vector x = p.start;
  for (int k = 0; k < 50; ++k) {
    const Vector d = p.oracle.subgrad(x, rng);
    const auto step = rhb_step(*kernel, p.manifold, p.region, x, d, Vector::Zero(5), 0.05);
    x = step.x;
    REQUIRE(std::abs(x.norm() - 1.0) <= 1e-10);
    REQUIRE((x.array() > 0.0).all());
  }
}

TEST_CASE("rhb step halves when the raw step would leave the region") {
  // entropy has no Dikin guarantee; force a huge step and watch the halving
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  const auto step = rhb_step(*kernel, p.manifold, p.region, vec({0.5, 0.5}),
                             vec({-1, 0}), Vector::Zero(2), 5.0);
  CHECK(step.halvings > 0);
  CHECK(p.region.contains(step.x));
  CHECK(step.delta_norm > 0.0);  // realized update deviates from the raw one
}

TEST_CASE("safe step threshold formula and applicability") {
  auto neglog = make_kernel("neglog");
  CHECK(safe_step_threshold(*neglog, 4, 3.0, 1.0, 1.0) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(safe_step_threshold(*neglog, 4, 1.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(safe_step_threshold(*neglog, 4, 1.0, 1.0, 4.0) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(safe_step_threshold(*make_kernel("logdet"), 6, 3.0, 1.0, 1.0) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-15));

  for (const char* id : {"entropy", "power:1.5", "ball"}) {
    CHECK_THROWS_AS(safe_step_threshold(*make_kernel(id), 4, 1.0, 0.0, 1.0),
                    NotSelfConcordant);
  }
}

TEST_CASE("mirror step closed forms") {
  auto entropy = make_kernel("entropy");
  const double e = std::exp(1.0);

  // unconstrained: x o exp(-eta d)
  const Vector un = mirror_step(*entropy, Manifold::free_space(2), vec({1, 1}),
                                vec({1, 0}), Vector::Zero(2), 1.0);
  CHECK((un - vec({1.0 / e, 1.0})).norm() <= 1e-15);

  // simplex, zero direction: fixed point
  const Manifold M = simplex(2);
  const Vector x = vec({0.5, 0.5});
  CHECK((mirror_step(*entropy, M, x, Vector::Zero(2), Vector::Zero(2), 1.0) - x)
            .norm() <= 1e-15);

  // simplex worked value: exponentiated gradient
  const Vector xp = mirror_step(*entropy, M, x, vec({-1, 0}), Vector::Zero(2), 1.0);
  CHECK(xp[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
  CHECK(xp[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));
}

TEST_CASE("mirror closed forms agree with the generic dual-Newton path") {
  std::mt19937_64 rng(7);
  auto entropy = make_kernel("entropy");
  const Manifold M = simplex(4);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = oracle::random_orthant_point(rng, 4);
    x /= x.sum();
    const Vector d = oracle::random_vector(rng, 4);
    const double eta = 0.05 + 0.2 * (trial % 4);
    const Vector closed = mirror_step(*entropy, M, x, d, Vector::Zero(4), eta);
    const Vector newton =
        mirror_step_dual_newton(*entropy, M, x, d, Vector::Zero(4), eta);
    REQUIRE((closed - newton).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("dual-Newton mirror step satisfies the stationarity system") {
  // neglog kernel on a random affine manifold: grad phi(x+) - grad phi(x)
  // + eta d must lie in the row space of A, and A x+ = b
  std::mt19937_64 rng(11);
  auto neglog = make_kernel("neglog");
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4;
    const Vector x0 = oracle::random_orthant_point(rng, n, 0.4, 1.6);
    Matrix A(2, n);
    A.row(0) = Vector::Ones(n).transpose();
    A.row(1) = oracle::random_vector(rng, n).transpose();
    const Manifold M = Manifold::affine(A, A * x0);
    const Vector d = oracle::random_vector(rng, n);
    const double eta = 0.05;

    const Vector xp = mirror_step_dual_newton(*neglog, M, x0, d, Vector::Zero(n), eta);
    REQUIRE((A * xp - M.b()).lpNorm<Eigen::Infinity>() <= 1e-9);
    const Vector g = neglog->grad(xp) - neglog->grad(x0) + eta * d;
    // remove the row-space component; the remainder must vanish
    const Vector rem =
        g - A.transpose() * (A * A.transpose()).llt().solve(A * g);
    REQUIRE(rem.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + g.norm()));
  }
}

TEST_CASE("rhb and mirror are the same first-order discretization") {
  // same x, d: the two steps differ by O(eta^2), constant bounded by 5 M_d^2
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  const Vector x = vec({0.3, 0.7});
  const Vector d = vec({-1, 0});
  double prev_ratio = -1;
  for (double eta : {1e-2, 1e-3, 1e-4}) {
    const auto a = rhb_step(*kernel, p.manifold, p.region, x, d, Vector::Zero(2), eta);
    const Vector b = mirror_step(*kernel, p.manifold, x, d, Vector::Zero(2), eta);
    const double diff = (a.x - b).norm();
    CHECK(diff <= 5.0 * eta * eta * 1.0);  // M_d = 1
    const double ratio = diff / (eta * eta);
    if (prev_ratio > 0) {
      // O(eta^2): the normalized ratio stays within a factor of two
      CHECK(ratio <= 2.0 * prev_ratio);
      CHECK(ratio >= 0.1 * prev_ratio);
    }
    prev_ratio = ratio;
  }
}

TEST_CASE("entropy interpolation ratio vanishes with eta") {
  // || x - eta x o d - x o exp(-eta d) || / eta -> 0
  const Vector x = vec({0.6, 0.4});
  const Vector d = vec({1.0, -2.0});
  double first = -1, last = -1;
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const Vector euler = x - eta * (x.array() * d.array()).matrix();
    const Vector mirror = (x.array() * (-eta * d.array()).exp()).matrix();
    const double ratio = (euler - mirror).norm() / eta;
    if (first < 0) first = ratio;
    last = ratio;
  }
  CHECK(last < first / 100.0);
}

TEST_CASE("neglog-simplex interpolation ratios (reported, not asserted)") {
  // the corresponding condition for neglog on the simplex is an open
  // empirical question; the grid is reported for inspection only
  auto neglog = make_kernel("neglog");
  const Manifold M = simplex(3);
  Vector x = vec({0.2, 0.3, 0.5});
  const Vector d = vec({-1.0, 0.5, 0.25});
  std::ostringstream table;
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    const Vector xp = mirror_step_dual_newton(*neglog, M, x, d, Vector::Zero(3), eta);
    // recover the dual from the mirror identity and form the Euler point
    const Vector g = (neglog->grad(x) - neglog->grad(xp)) / eta;  // = d - A'y
    const Vector euler = x - eta * neglog->hess_inv_apply(x, g);
    const double ratio = (euler - xp).norm() / eta;
    CHECK(std::isfinite(ratio));
    table << "eta=" << eta << " ratio=" << ratio << "\n";
  }
  MESSAGE(table.str());
}

TEST_CASE("run on lin-simplex follows the scalar logistic recursion") {
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  SolverConfig cfg;
  cfg.schedule = StepSchedule::constant(0.05);
  cfg.max_iters = 500;
  cfg.stop_tol = 1e-300;
  const Trace trace = run(p, *kernel, cfg, vec({0.5, 0.5}));

  double x1 = 0.5;
  for (const auto& row : trace.rows) {
    const double ref = oracle::rhb_scalar_recursion(0.5, 0.05, row.k);
    REQUIRE(std::abs(row.x[0] - ref) <= 1e-6);
    (void)x1;
  }
  CHECK(trace.rows.back().x[0] >= 0.99);
}

TEST_CASE("flat-simplex run stops immediately at its start") {
  const Problem p = registry_get("flat-simplex:3");
  auto kernel = make_kernel("entropy");
  SolverConfig cfg;
  cfg.schedule = StepSchedule::constant(0.05);
  cfg.max_iters = 100;
  const Trace trace = run(p, *kernel, cfg);
  CHECK(trace.iters == 0);
  CHECK((trace.rows.back().x - p.start).norm() == 0.0);
  CHECK(trace.terminal.classification == Classification::interior_stationary);
}

TEST_CASE("l1-simplex run reaches the stop tolerance") {
  const Problem p = registry_get("l1-simplex");
  auto kernel = make_kernel("entropy");
  SolverConfig cfg;
  cfg.schedule = StepSchedule::constant(0.05);
  cfg.max_iters = 2000;
  cfg.stop_tol = 1e-9;
  const Trace trace = run(p, *kernel, cfg);
  CHECK(trace.rows.back().stable_res <= 1e-9);
  CHECK(trace.terminal.classification == Classification::interior_stationary);
}

TEST_CASE("noise-free descent and interiority on every registry problem") {
  for (const auto& name : registry_names()) {
    const Problem p = registry_get(name);
    auto kernel = make_kernel(p.default_kernel);
    for (Scheme scheme : {Scheme::rhb, Scheme::mirror}) {
      if (scheme == Scheme::mirror && !p.manifold.is_affine()) continue;
      SolverConfig cfg;
      cfg.schedule = StepSchedule::constant(0.05);
      cfg.max_iters = 300;
      cfg.scheme = scheme;
      cfg.stop_tol = 1e-12;
      const Trace trace = run(p, *kernel, cfg);
      for (size_t i = 0; i < trace.rows.size(); ++i) {
        const auto& row = trace.rows[i];
        REQUIRE(p.region.contains(row.x));
        REQUIRE(p.manifold.contains(row.x, 1e-8));
        if (i > 0) REQUIRE(row.f <= trace.rows[i - 1].f + 1e-12);
      }
    }
  }
}

TEST_CASE("polynomial schedule run decays the step as recorded") {
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  SolverConfig cfg;
  cfg.schedule = StepSchedule::polynomial(0.1, 0.8);
  cfg.max_iters = 50;
  cfg.stop_tol = 1e-300;
  const Trace trace = run(p, *kernel, cfg);
  for (const auto& row : trace.rows) {
    CHECK(row.eta == doctest::Approx(0.1 / std::pow(double(row.k + 1), 0.8)));
  }
}

TEST_CASE("runs are deterministic under the seed, including noise") {
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel(p.default_kernel);
  SolverConfig cfg;
  cfg.schedule = StepSchedule::constant(0.02);
  cfg.max_iters = 200;
  cfg.noise_bound = 0.5;
  cfg.seed = 7;
  cfg.stop_tol = 1e-300;
  const Trace a = run(p, *kernel, cfg);
  const Trace b = run(p, *kernel, cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE((a.rows[i].x - b.rows[i].x).norm() == 0.0);
    REQUIRE(a.rows[i].f == b.rows[i].f);
  }
}

TEST_CASE("mirror run that numerically converges ends KKT-stationary") {
  // displacement of the last 100 iterates below 1e-10 => kkt residual <= 1e-6
  const Problem p = registry_get("lin-simplex");
  auto kernel = make_kernel("entropy");
  SolverConfig cfg;
  cfg.schedule = StepSchedule::constant(0.05);
  cfg.scheme = Scheme::mirror;
  cfg.max_iters = 3000;
  cfg.stop_tol = 1e-12;
  const Trace trace = run(p, *kernel, cfg);

  double max_disp = 0.0;
  const size_t nrows = trace.rows.size();
  REQUIRE(nrows > 100);
  for (size_t i = nrows - 100; i < nrows; ++i) {
    max_disp = std::max(max_disp, (trace.rows[i].x - trace.rows[i - 1].x).norm());
  }
  REQUIRE(max_disp <= 1e-10);
  CHECK(trace.terminal.kkt_residual <= 1e-6);
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_iters = 10;
  cfg.stop_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.stop_tol = 1e-8;
  cfg.record_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("metric bound estimate covers the trajectory") {
  // neglog on the simplex: H^{-1} = Diag(x^2), so the spectral norm along any
  // feasible trajectory stays below 1 and the pilot picks up the maximum seen
  const Problem p = registry_get("lin-simplex");
  auto neglog = make_kernel("neglog");
  SolverConfig pilot;
  pilot.schedule = StepSchedule::constant(0.01);
  pilot.max_iters = 200;
  pilot.stop_tol = 1e-300;
  const double m_hat = estimate_metric_bound(p, *neglog, pilot);
  CHECK(m_hat > 0.25);  // at least the start value max x_i^2 = 0.25... grows toward 1
  CHECK(m_hat <= 1.0);
  const double eta_bar = safe_step_threshold(*neglog, 2, 1.0, 0.0, m_hat);
  CHECK(eta_bar >= 1.0);
}
