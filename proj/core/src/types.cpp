#include "barrierflow/types.hpp"

#include <cmath>

namespace barrierflow {

bool all_finite(const Vector& x) { return x.allFinite(); }

void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw DomainViolation(std::string(what) + ": non-finite entries");
  }
}

int svec_dim(int d) { return d * (d + 1) / 2; }

int svec_order(int n) {
  const int d = static_cast<int>(std::floor((std::sqrt(8.0 * n + 1.0) - 1.0) / 2.0 + 0.5));
  if (d <= 0 || svec_dim(d) != n) {
    throw ConfigError("vector length " + std::to_string(n) +
                      " is not d(d+1)/2 for any d");
  }
  return d;
}

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Matrix svec_to_sym(const Vector& v) {
  const int d = svec_order(static_cast<int>(v.size()));
  Matrix X(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double val = (i == j) ? v[k] : v[k] / kSqrt2;
      X(i, j) = val;
      X(j, i) = val;
      ++k;
    }
  }
  return X;
}

Vector sym_to_svec(const Matrix& X) {
  const int d = static_cast<int>(X.rows());
  Vector v(svec_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i <= j; ++i) {
      v[k++] = (i == j) ? X(i, j) : kSqrt2 * 0.5 * (X(i, j) + X(j, i));
    }
  }
  return v;
}

}  // namespace barrierflow
