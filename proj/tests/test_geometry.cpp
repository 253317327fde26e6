#include <doctest.h>

#include <array>
#include <cmath>

#include "barrierflow/geometry.hpp"
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

// random affine manifold through a given interior point
Manifold random_affine_through(std::mt19937_64& rng, const Vector& x0, int m) {
  const int n = static_cast<int>(x0.size());
  Matrix A(m, n);
  for (int i = 0; i < m; ++i) A.row(i) = oracle::random_vector(rng, n).transpose();
  return Manifold::affine(A, A * x0);
}

}  // namespace

TEST_CASE("affine manifold validates row rank") {
  Matrix A(2, 3);
  A << 1, 1, 1, 2, 2, 2;
  CHECK_THROWS_AS(Manifold::affine(A, Vector::Zero(2)), RankDeficient);
  A.row(1) << 1, 0, -1;
  CHECK_NOTHROW(Manifold::affine(A, Vector::Zero(2)));
}

TEST_CASE("sphere jacobian matches finite differences of c") {
  const Manifold sph = Manifold::sphere(3);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x = oracle::random_vector(rng, 3);
    x /= x.norm();
    const Matrix J = sph.jacobian(x);
    const Matrix J_fd =
        oracle::fd_jacobian([&](const Vector& z) { return sph.constraint(z); }, x);
    REQUIRE((J - J_fd).norm() <= 1e-5 * (1.0 + J.norm()));
  }
}

TEST_CASE("tangent projection on the simplex: worked values") {
  auto entropy = make_kernel("entropy");
  const Manifold M = simplex(2);
  const Vector x = vec({0.5, 0.5});

  // closed form with A H^{-1} A' = sum x_i = 1
  CHECK((project_tangent(*entropy, M, x, vec({1, 0})) - vec({0.5, -0.5})).norm() <
        1e-14);
  // already tangent: fixed point
  CHECK((project_tangent(*entropy, M, x, vec({1, -1})) - vec({1, -1})).norm() < 1e-14);
  // no constraints: identity
  const Manifold free2 = Manifold::free_space(2);
  CHECK((project_tangent(*entropy, free2, x, vec({1, 0})) - vec({1, 0})).norm() == 0.0);
}

TEST_CASE("tangent projection: idempotent, tangential, H-self-adjoint, nonexpansive") {
  std::mt19937_64 rng(5);
  struct Case {
    KernelPtr kernel;
    Manifold manifold;
    Vector x;
  };
  std::vector<Case> cases;
  for (int trial = 0; trial < 25; ++trial) {
    const Vector x = oracle::random_orthant_point(rng, 5);
    cases.push_back({make_kernel("entropy"), random_affine_through(rng, x, 2), x});
    cases.push_back({make_kernel("neglog"), random_affine_through(rng, x, 1), x});
    const Vector xb = oracle::random_ball_point(rng, 4);
    cases.push_back({make_kernel("ball"), random_affine_through(rng, xb, 2), xb});
    Vector xs = oracle::random_orthant_point(rng, 3);
    xs /= xs.norm();
    cases.push_back({make_kernel("entropy"), Manifold::sphere(3), xs});
  }
  for (const auto& c : cases) {
    const int n = static_cast<int>(c.x.size());
    const Vector u = oracle::random_vector(rng, n);
    const Vector w = oracle::random_vector(rng, n);
    const Vector Pu = project_tangent(*c.kernel, c.manifold, c.x, u);
    const Vector PPu = project_tangent(*c.kernel, c.manifold, c.x, Pu);
    REQUIRE((c.manifold.jacobian(c.x) * Pu).lpNorm<Eigen::Infinity>() <= 1e-9);
    REQUIRE((PPu - Pu).norm() <= 1e-9 * (1.0 + Pu.norm()));
    // <H P u, w> = <H u, P w>
    const Vector Pw = project_tangent(*c.kernel, c.manifold, c.x, w);
    const double lhs = c.kernel->hess_apply(c.x, Pu).dot(w);
    const double rhs = c.kernel->hess_apply(c.x, u).dot(Pw);
    REQUIRE(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs)));
    // H-metric nonexpansive
    const double norm_pu = std::sqrt(Pu.dot(c.kernel->hess_apply(c.x, Pu)));
    const double norm_u = std::sqrt(u.dot(c.kernel->hess_apply(c.x, u)));
    REQUIRE(norm_pu <= norm_u * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("search direction: worked simplex values and dual identities") {
  auto entropy = make_kernel("entropy");
  const Manifold M = simplex(2);
  const Vector x = vec({0.5, 0.5});
  const auto dual = search_direction(*entropy, M, x, vec({-1, 0}));
  CHECK(dual.y[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK((dual.s - vec({-0.5, 0.5})).norm() < 1e-14);
  CHECK((dual.v - vec({0.25, -0.25})).norm() < 1e-14);

  // d in the row space is annihilated
  const auto zero = search_direction(*entropy, M, x, vec({3, 3}));
  CHECK(zero.v.norm() < 1e-14);
  CHECK(zero.s.norm() < 1e-14);

  // unconstrained: v = -H^{-1} d = -Diag(x) d
  const auto un =
      search_direction(*entropy, Manifold::free_space(2), vec({2, 1}), vec({1, 1}));
  CHECK((un.v - vec({-2, -1})).norm() < 1e-14);
  CHECK((un.s - vec({1, 1})).norm() == 0.0);
}

TEST_CASE("search direction solves the dense KKT system (brute-force oracle)") {
  std::mt19937_64 rng(7);
  const std::array<const char*, 3> kernel_ids = {"entropy", "neglog", "power:1.7"};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + int(trial % 5);  // up to 6
    const int m = 1 + int(trial % std::min(3, n - 1));
    const Vector x = oracle::random_orthant_point(rng, n);
    const Manifold M = random_affine_through(rng, x, m);
    auto kernel = make_kernel(kernel_ids[trial % kernel_ids.size()]);
    const Vector d = oracle::random_vector(rng, n);

    const auto dual = search_direction(*kernel, M, x, d);
    const auto ref =
        oracle::dense_kkt_solve(oracle::dense_hessian(*kernel, x), M.A(), d);
    REQUIRE((dual.v - ref.v).norm() <= 1e-8 * (1.0 + ref.v.norm()));
    REQUIRE((dual.y - ref.y).norm() <= 1e-8 * (1.0 + ref.y.norm()));

    // DualData identities: H v + s = 0 and A v = 0
    REQUIRE((kernel->hess_apply(x, dual.v) + dual.s).norm() <=
            1e-9 * (1.0 + dual.s.norm()));
    REQUIRE((M.A() * dual.v).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("stable-set equivalence: projected residual vs multiplier residual") {
  // two-sided agreement of ||P H^{-1} d|| <= 1e-8 with the independent
  // least-squares route min_y ||H^{-1}(d - A' y)|| <= 1e-7
  std::mt19937_64 rng(11);
  struct Case {
    KernelPtr kernel;
    Manifold manifold;
    std::function<Vector()> sample_x;
  };
  std::vector<Case> cases;
  cases.push_back({make_kernel("entropy"), simplex(4), [&rng] {
                     Vector x = oracle::random_orthant_point(rng, 4);
                     return (x / x.sum()).eval();
                   }});
  cases.push_back({make_kernel("neglog"), simplex(4), [&rng] {
                     Vector x = oracle::random_orthant_point(rng, 4);
                     return (x / x.sum()).eval();
                   }});
  cases.push_back({make_kernel("entropy"), Manifold::sphere(4), [&rng] {
                     Vector x = oracle::random_orthant_point(rng, 4);
                     return (x / x.norm()).eval();
                   }});
  const Vector xb = oracle::random_ball_point(rng, 4);
  cases.push_back(
      {make_kernel("ball"), random_affine_through(rng, xb, 2), [xb] { return xb; }});

  for (const auto& c : cases) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = c.sample_x();
      const Matrix A = c.manifold.jacobian(x);
      Vector d;
      if (trial % 2 == 0) {
        d = oracle::random_vector(rng, 4);  // generic: both residuals large
      } else {
        // in the row space: both residuals vanish
        d = A.transpose() * oracle::random_vector(rng, static_cast<int>(A.rows()));
      }
      const Vector proj =
          project_tangent(*c.kernel, c.manifold, x, c.kernel->hess_inv_apply(x, d));
      const bool lhs = proj.norm() <= 1e-8;

      Matrix HinvAt(4, A.rows());
      for (int j = 0; j < A.rows(); ++j) {
        HinvAt.col(j) = c.kernel->hess_inv_apply(x, A.row(j).transpose());
      }
      const Vector hinv_d = c.kernel->hess_inv_apply(x, d);
      const Vector y = HinvAt.completeOrthogonalDecomposition().solve(hinv_d);
      const bool rhs = (hinv_d - HinvAt * y).norm() <= 1e-7;
      REQUIRE(lhs == rhs);
    }
  }
}

TEST_CASE("retraction: affine identity, sphere normalization, fixed point") {
  const Manifold M = simplex(3);
  const OpenRegion orthant(OpenRegion::Kind::orthant);
  const Vector x = vec({0.2, 0.3, 0.5});
  const Vector step = vec({0.1, -0.05, -0.05});
  CHECK((retract(M, x, step, orthant) - (x + step)).norm() == 0.0);

  const Manifold sph = Manifold::sphere(2);
  const OpenRegion free_region(OpenRegion::Kind::free);
  const Vector xs = vec({1, 0});
  const Vector r = retract(sph, xs, vec({0, 0.1}), free_region);
  CHECK(std::abs(r.norm() - 1.0) <= 1e-10);
  CHECK(r[0] == doctest::Approx(0.99503719).epsilon(1e-6));
  CHECK(r[1] == doctest::Approx(0.09950372).epsilon(1e-6));

  CHECK((retract(sph, xs, Vector::Zero(2), free_region) - xs).norm() == 0.0);
}

TEST_CASE("first-order retraction check") {
  const std::array<double, 7> etas = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  auto entropy = make_kernel("entropy");

  // affine: identically zero
  {
    const Manifold M = simplex(2);
    const OpenRegion region(OpenRegion::Kind::orthant);
    const auto table = first_order_retraction_check(M, *entropy, region,
                                                    vec({0.5, 0.5}), vec({-1, 0}), etas);
    for (const auto& row : table) CHECK(row.ratio == 0.0);
  }

  // sphere: ratios decay to zero (the normalization retraction is O(eta))
  {
    const Manifold sph = Manifold::sphere(3);
    const OpenRegion region(OpenRegion::Kind::orthant);
    Vector x = vec({0.6, 0.48, 0.64});
    x /= x.norm();
    const Vector d = vec({-1, 0.25, 0.5});
    const auto table = first_order_retraction_check(sph, *entropy, region, x, d, etas);
    REQUIRE(table.size() == etas.size());
    CHECK(table.back().ratio < table.front().ratio / 10.0);
    // zero direction: all ratios zero
    const auto zero_table =
        first_order_retraction_check(sph, *entropy, region, x, Vector::Zero(3), etas);
    for (const auto& row : zero_table) CHECK(row.ratio == 0.0);
  }
}

TEST_CASE("geometry error paths") {
  auto entropy = make_kernel("entropy");
  const Manifold M = simplex(2);
  // off-manifold point
  CHECK_THROWS_AS(project_tangent(*entropy, M, vec({0.5, 0.4}), vec({1, 0})),
                  DomainViolation);
  // outside the kernel domain
  CHECK_THROWS_AS(search_direction(*entropy, M, vec({1.5, -0.5}), vec({1, 0})),
                  DomainViolation);
}
