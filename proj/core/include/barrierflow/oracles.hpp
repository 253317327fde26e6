#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "barrierflow/geometry.hpp"
#include "barrierflow/types.hpp"

namespace barrierflow {

// Objective oracle: function value plus a measurable subgradient selection.
// Selections are deterministic; at kinks they return the midpoint of the sign
// interval (0 for |t| at t = 0), which lies in the Clarke subdifferential.
struct SubgradientOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&, std::mt19937_64&)> subgrad;
  // Norm bound for the selection over the feasible set.
  double lipschitz_bound = 0.0;
  // True away from the nonsmooth locus; finite-difference spot checks only
  // apply where this holds.
  std::function<bool(const Vector&)> differentiable_at;
};

// Bounded zero-mean noise: uniform direction on the unit sphere scaled by a
// radius drawn uniformly in [0, bound]. Deterministic under the seed; holds
// its own engine, one owner per run.
class NoiseSource {
 public:
  NoiseSource(double bound, uint64_t seed);
  Vector sample(int n);
  double bound() const { return bound_; }
  uint64_t seed() const { return seed_; }

 private:
  double bound_;
  uint64_t seed_;
  std::mt19937_64 rng_;
};

struct KnownPoint {
  Vector x;
  std::string classification;
  std::string note;
};

struct Problem {
  std::string name;
  SubgradientOracle oracle;
  Manifold manifold = Manifold::free_space(0);
  OpenRegion region{OpenRegion::Kind::free};
  std::string default_kernel = "entropy";
  std::vector<KnownPoint> known_points;
  Vector start;            // strictly interior default initial point
  std::string content_id;  // canonical description, hashed into run manifests

  int dim() const { return static_cast<int>(start.size()); }
};

// Registered benchmark problems. Names accept an optional ":n" dimension
// suffix where the family is dimension-parametric, e.g. "lin-simplex:4".
//   lin-simplex   min -x_1           over the unit simplex (entropy kernel)
//   nn-pca        min -x'Mx          over {||x||^2=1, x>0}, fixed 5x5 M
//   l1-simplex    min ||x - e_1/2||_1 over the unit simplex
//   flat-simplex  f = 0              over the unit simplex
//   ball-abs      min |x_1| + x_2/2  over the closed unit ball (ball kernel)
Problem registry_get(const std::string& name);
std::vector<std::string> registry_names();

// Custom affine problems from JSON text with fields "objective" ("linear:c"
// or "l1:a", comma-separated numbers), "A" (array of rows), "b"; the region
// is the positive orthant.
Problem problem_from_json_text(const std::string& text);

// The committed nn-pca data matrix.
const Matrix& nnpca_matrix();

}  // namespace barrierflow
