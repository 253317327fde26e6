#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace barrierflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point on or outside the boundary of the kernel domain / open region.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

// Metric factorization failed; the point is numerically on the boundary.
class SingularMetric : public Error {
 public:
  using Error::Error;
};

// Argument outside the range of the mirror map.
class RangeViolation : public Error {
 public:
  using Error::Error;
};

// An inner iterative solve did not reach its tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Constraint Jacobian lost row rank (LICQ is a standing assumption).
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class RetractionFailed : public Error {
 public:
  using Error::Error;
};

class StepRejected : public Error {
 public:
  using Error::Error;
};

class NotSelfConcordant : public Error {
 public:
  using Error::Error;
};

class DualNewtonFailed : public Error {
 public:
  using Error::Error;
};

class UnknownProblem : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegion : public Error {
 public:
  using Error::Error;
};

class ExtensionUnavailable : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

bool all_finite(const Vector& x);
void require_finite(const Vector& x, const char* what);

// Scaled upper-triangle embedding of symmetric d x d matrices into R^{d(d+1)/2}.
// Off-diagonal entries carry a sqrt(2) factor so the Euclidean inner product of
// two embedded vectors equals the Frobenius inner product of the matrices.
int svec_dim(int d);
int svec_order(int n);  // inverse of svec_dim; throws ConfigError if n is not triangular
Matrix svec_to_sym(const Vector& v);
Vector sym_to_svec(const Matrix& X);

}  // namespace barrierflow
