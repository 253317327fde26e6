#include "barrierflow/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <cmath>
#include <sstream>

namespace barrierflow {

NoiseSource::NoiseSource(double bound, uint64_t seed)
    : bound_(bound), seed_(seed), rng_(seed) {
  if (bound < 0) throw ConfigError("noise bound must be nonnegative");
}

Vector NoiseSource::sample(int n) {
  if (bound_ == 0.0) return Vector::Zero(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector dir(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng_);
    norm = dir.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> radius(0.0, bound_);
  return (radius(rng_) / norm) * dir;
}

namespace {

const double kKinkMargin = 1e-9;

Vector unit(int n, int i) {
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

// sign with midpoint selection at the kink
double sign_mid(double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); }

Manifold simplex_manifold(int n) {
  return Manifold::affine(Matrix::Ones(1, n), Vector::Ones(1));
}

std::string vector_id(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

Problem make_lin_simplex(int n) {
  Problem p;
  p.name = "lin-simplex";
  p.manifold = simplex_manifold(n);
  p.region = OpenRegion(OpenRegion::Kind::orthant);
  p.default_kernel = "entropy";
  p.start = Vector::Constant(n, 1.0 / n);
  p.oracle.value = [](const Vector& x) { return -x[0]; };
  p.oracle.subgrad = [n](const Vector&, std::mt19937_64&) {
    return (-unit(n, 0)).eval();
  };
  p.oracle.lipschitz_bound = 1.0;
  p.oracle.differentiable_at = [](const Vector&) { return true; };
  // e_2 is an equilibrium of the flow but not a KKT point; e_1 is the
  // global minimizer.
  p.known_points.push_back({unit(n, 1), "spurious", "stable, dual slack s_1 = -1"});
  p.known_points.push_back({unit(n, 0), "boundary-stationary", "global minimizer"});
  p.content_id = "lin-simplex:n=" + std::to_string(n);
  return p;
}

Problem make_flat_simplex(int n) {
  Problem p;
  p.name = "flat-simplex";
  p.manifold = simplex_manifold(n);
  p.region = OpenRegion(OpenRegion::Kind::orthant);
  p.default_kernel = "entropy";
  p.start = Vector::Constant(n, 1.0 / n);
  p.oracle.value = [](const Vector&) { return 0.0; };
  p.oracle.subgrad = [n](const Vector&, std::mt19937_64&) {
    return Vector::Zero(n).eval();
  };
  p.oracle.lipschitz_bound = 0.0;
  p.oracle.differentiable_at = [](const Vector&) { return true; };
  p.known_points.push_back(
      {Vector::Constant(n, 1.0 / n), "interior-stationary", "every feasible point is stable"});
  p.content_id = "flat-simplex:n=" + std::to_string(n);
  return p;
}

Problem make_l1_simplex(int n) {
  Problem p;
  p.name = "l1-simplex";
  Vector a = Vector::Zero(n);
  a[0] = 0.5;
  p.manifold = simplex_manifold(n);
  p.region = OpenRegion(OpenRegion::Kind::orthant);
  p.default_kernel = "entropy";
  p.start = Vector::Constant(n, 1.0 / n);
  p.oracle.value = [a](const Vector& x) { return (x - a).lpNorm<1>(); };
  p.oracle.subgrad = [a](const Vector& x, std::mt19937_64&) {
    Vector d(x.size());
    for (int i = 0; i < x.size(); ++i) d[i] = sign_mid(x[i] - a[i]);
    return d;
  };
  p.oracle.lipschitz_bound = std::sqrt(double(n));
  p.oracle.differentiable_at = [a](const Vector& x) {
    return ((x - a).array().abs() > kKinkMargin).all();
  };
  Vector interior_min = Vector::Constant(n, 0.25 / (n - 1));
  interior_min[0] = 0.75;
  p.known_points.push_back(
      {interior_min, "interior-stationary", "on the flat segment x_1 > 1/2"});
  p.content_id = "l1-simplex:n=" + std::to_string(n) + ";a=" + vector_id(a);
  return p;
}

Problem make_ball_abs() {
  const int n = 2;
  Problem p;
  p.name = "ball-abs";
  p.manifold = Manifold::free_space(n);
  p.region = OpenRegion(OpenRegion::Kind::ball);
  p.default_kernel = "ball";
  p.start = Vector::Zero(n);
  p.oracle.value = [](const Vector& x) { return std::abs(x[0]) + 0.5 * x[1]; };
  p.oracle.subgrad = [](const Vector& x, std::mt19937_64&) {
    Vector d(2);
    d[0] = sign_mid(x[0]);
    d[1] = 0.5;
    return d;
  };
  p.oracle.lipschitz_bound = std::sqrt(1.25);
  p.oracle.differentiable_at = [](const Vector& x) {
    return std::abs(x[0]) > kKinkMargin;
  };
  Vector minimizer(2);
  minimizer << 0.0, -1.0;
  Vector spurious(2);
  spurious << 1.0, 0.0;
  p.known_points.push_back({minimizer, "boundary-stationary", "global minimizer"});
  p.known_points.push_back(
      {spurious, "spurious", "ball boundary is entirely stable for this kernel"});
  p.content_id = "ball-abs:n=2";
  return p;
}

Problem make_nn_pca() {
  const Matrix& M = nnpca_matrix();
  const int n = static_cast<int>(M.rows());
  Problem p;
  p.name = "nn-pca";
  p.manifold = Manifold::sphere(n);
  p.region = OpenRegion(OpenRegion::Kind::orthant);
  p.default_kernel = "entropy";
  p.start = Vector::Constant(n, 1.0 / std::sqrt(double(n)));
  p.oracle.value = [&M](const Vector& x) { return -x.dot(M * x); };
  p.oracle.subgrad = [&M](const Vector& x, std::mt19937_64&) {
    return (-2.0 * (M * x)).eval();
  };
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  p.oracle.lipschitz_bound = 2.0 * es.eigenvalues().cwiseAbs().maxCoeff();
  p.oracle.differentiable_at = [](const Vector&) { return true; };
  // Every vertex e_i of the orthant part of the sphere is stable; e_1 fails
  // dual feasibility because column 1 of M has positive off-diagonal entries.
  p.known_points.push_back({unit(n, 0), "spurious", "vertex of the sphere-orthant"});
  p.content_id = "nn-pca:M=" + vector_id(sym_to_svec(M));
  return p;
}

struct ParsedName {
  std::string base;
  int n = -1;
};

ParsedName parse_name(const std::string& name) {
  ParsedName out;
  const auto colon = name.find(':');
  if (colon == std::string::npos) {
    out.base = name;
  } else {
    out.base = name.substr(0, colon);
    try {
      out.n = std::stoi(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw UnknownProblem("bad dimension suffix in problem name '" + name + "'");
    }
    if (out.n < 2) throw UnknownProblem("problem dimension must be >= 2");
  }
  return out;
}

}  // namespace

const Matrix& nnpca_matrix() {
  // Fixed symmetric instance; entries drawn once uniformly from [-1, 1].
  static const Matrix M = [] {
    Matrix m(5, 5);
    m << -0.946181, +0.689236, +0.749453, -0.295651, +0.117537,
         +0.689236, +0.649869, -0.788986, -0.799298, +0.268588,
         +0.749453, -0.788986, -0.959668, +0.052309, -0.530318,
         -0.295651, -0.799298, +0.052309, +0.462939, -0.519368,
         +0.117537, +0.268588, -0.530318, -0.519368, -0.741663;
    return m;
  }();
  return M;
}

Problem registry_get(const std::string& name) {
  const ParsedName pn = parse_name(name);
  const int n = pn.n;
  if (pn.base == "lin-simplex") return make_lin_simplex(n < 0 ? 2 : n);
  if (pn.base == "flat-simplex") return make_flat_simplex(n < 0 ? 2 : n);
  if (pn.base == "l1-simplex") return make_l1_simplex(n < 0 ? 2 : n);
  if (pn.base == "ball-abs") {
    if (n >= 0 && n != 2) throw UnknownProblem("ball-abs is fixed at n=2");
    return make_ball_abs();
  }
  if (pn.base == "nn-pca") {
    if (n >= 0 && n != 5) throw UnknownProblem("nn-pca is fixed at n=5");
    return make_nn_pca();
  }
  throw UnknownProblem("no registered problem named '" + name + "'");
}

std::vector<std::string> registry_names() {
  return {"lin-simplex", "nn-pca", "l1-simplex", "flat-simplex", "ball-abs"};
}

Problem problem_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("problem JSON parse error: ") + e.what());
  }
  if (!j.contains("objective") || !j.contains("A") || !j.contains("b")) {
    throw ConfigError("problem JSON needs fields 'objective', 'A', 'b'");
  }
  const std::string obj = j["objective"].get<std::string>();
  const auto rows = j["A"];
  const int m = static_cast<int>(rows.size());
  if (m == 0) throw ConfigError("problem JSON: empty A");
  const int n = static_cast<int>(rows[0].size());
  Matrix A(m, n);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != n) {
      throw ConfigError("problem JSON: ragged A");
    }
    for (int c = 0; c < n; ++c) A(i, c) = rows[i][c].get<double>();
  }
  Vector b(m);
  for (int i = 0; i < m; ++i) b[i] = j["b"][i].get<double>();

  auto parse_vec = [n](const std::string& csv) {
    Vector v(n);
    std::stringstream ss(csv);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',')) {
      if (i >= n) throw ConfigError("objective vector longer than n");
      v[i++] = std::stod(tok);
    }
    if (i != n) throw ConfigError("objective vector shorter than n");
    return v;
  };

  Problem p;
  p.manifold = Manifold::affine(A, b);
  p.region = OpenRegion(OpenRegion::Kind::orthant);
  p.default_kernel = "entropy";
  if (j.contains("name")) p.name = j["name"].get<std::string>();

  if (obj.rfind("linear:", 0) == 0) {
    const Vector c = parse_vec(obj.substr(7));
    if (p.name.empty()) p.name = "custom-linear";
    p.oracle.value = [c](const Vector& x) { return c.dot(x); };
    p.oracle.subgrad = [c](const Vector&, std::mt19937_64&) { return c; };
    p.oracle.lipschitz_bound = c.norm();
    p.oracle.differentiable_at = [](const Vector&) { return true; };
  } else if (obj.rfind("l1:", 0) == 0) {
    const Vector a = parse_vec(obj.substr(3));
    if (p.name.empty()) p.name = "custom-l1";
    p.oracle.value = [a](const Vector& x) { return (x - a).lpNorm<1>(); };
    p.oracle.subgrad = [a](const Vector& x, std::mt19937_64&) {
      Vector d(x.size());
      for (int i = 0; i < x.size(); ++i) d[i] = sign_mid(x[i] - a[i]);
      return d;
    };
    p.oracle.lipschitz_bound = std::sqrt(double(n));
    p.oracle.differentiable_at = [a](const Vector& x) {
      return ((x - a).array().abs() > kKinkMargin).all();
    };
  } else {
    throw ConfigError("objective must be 'linear:...' or 'l1:...'");
  }

  // Interior start: analytic-center surrogate via least-squares projection of
  // the all-ones point onto {Ax=b}, clipped away from the orthant boundary.
  Vector x0 = Vector::Ones(n);
  const Vector r = A * x0 - b;
  Eigen::LLT<Matrix> llt(A * A.transpose());
  if (llt.info() == Eigen::Success) x0 -= A.transpose() * llt.solve(r);
  if ((x0.array() <= 0.0).any()) {
    throw ConfigError("could not construct an interior start for the custom problem");
  }
  p.start = x0;
  p.content_id = "custom:" + obj + ";A=" + vector_id(Eigen::Map<const Vector>(A.data(), A.size())) +
                 ";b=" + vector_id(b);
  return p;
}

}  // namespace barrierflow
