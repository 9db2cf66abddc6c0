#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxnorm {

using DenseVector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Invalid hyperparameters (a, b, c, k, gamma, ...) for the requested operation.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed numeric input (non-finite entries, shape mismatch, empty input).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem size outside the supported range of an operation.
class ScaleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Text input that failed to parse; carries the 1-based offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Numeric failure inside an iterative routine; carries the iteration index.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// Metric evaluation failure (shape mismatch, degenerate range).
class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters of the box constraint set
///   Theta = { theta : a <= theta_i <= b, sum_i theta_i <= c }.
/// Valid when 0 < a <= b and d*a <= c <= d*b for the ambient dimension d,
/// which is supplied at each call site.
struct BoxParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  /// Builds parameters with c = (b - a) * k + d * a, so that rho(d) == k.
  /// k may be fractional; k in [0, d] is required.
  static BoxParams from_k(double a, double b, double k, Index d);

  /// Interpolation parameter rho = (c - d*a) / (b - a); requires a < b.
  double rho(Index d) const;

  /// Throws ParameterError unless 0 < a <= b and d*a <= c <= d*b (with a
  /// relative slack of 1e-12 on the budget bounds).
  void validate(Index d) const;
};

/// k-support norm parameter; validated as an integer in [1, d] per call.
struct KSupportParams {
  Index k = 0;

  void validate(Index d) const;
};

/// Certificate attached to norm and prox evaluations: the optimal theta,
/// the saturation counts and the residual budget of the middle segment.
struct NormDecomposition {
  double value = 0.0;    ///< norm value (or prox objective-defining norm value)
  DenseVector theta;     ///< minimizing theta, in the input's coordinate order
  Index q = 0;           ///< entries saturated at the upper bound
  Index ell = 0;         ///< entries saturated at the lower bound
  double p_res = 0.0;    ///< c - q*b - ell*a (budget carried by the middle segment)
  double alpha = 0.0;    ///< multiplier: middle thetas are alpha*|w_i| (- lambda for prox)
};

/// Vertex description of a polyhedral Theta set: each vertex is a
/// componentwise positive-sum weight vector gamma^l.
struct VertexSet {
  std::vector<DenseVector> vertices;

  void validate(Index d) const;
};

namespace detail {

inline void require_finite(const DenseVector& v, const char* name) {
  if (!v.allFinite()) throw InputError(std::string(name) + " has non-finite entries");
}

inline void require_finite(const DenseMatrix& m, const char* name) {
  if (!m.allFinite()) throw InputError(std::string(name) + " has non-finite entries");
}

}  // namespace detail

inline BoxParams BoxParams::from_k(double a, double b, double k, Index d) {
  if (!(k >= 0.0) || k > static_cast<double>(d))
    throw ParameterError("from_k: k must lie in [0, d]");
  BoxParams p{a, b, (b - a) * k + static_cast<double>(d) * a};
  p.validate(d);
  return p;
}

inline double BoxParams::rho(Index d) const {
  if (!(a < b)) throw ParameterError("rho is defined only for a < b");
  return (c - static_cast<double>(d) * a) / (b - a);
}

inline void BoxParams::validate(Index d) const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
    throw ParameterError("box parameters must be finite");
  if (!(a > 0.0)) throw ParameterError("box parameter a must be positive");
  if (!(a <= b)) throw ParameterError("box parameters require a <= b");
  const double lo = static_cast<double>(d) * a;
  const double hi = static_cast<double>(d) * b;
  const double slack = 1e-12 * std::max(1.0, hi);
  if (c < lo - slack || c > hi + slack)
    throw ParameterError("box parameter c must lie in [d*a, d*b]");
}

inline void KSupportParams::validate(Index d) const {
  if (k < 1 || k > d) throw ParameterError("k-support parameter k must lie in [1, d]");
}

inline void VertexSet::validate(Index d) const {
  if (vertices.empty()) throw ParameterError("vertex set is empty");
  for (const auto& g : vertices) {
    if (g.size() != d) throw ParameterError("vertex dimension mismatch");
    detail::require_finite(g, "vertex");
    if (g.minCoeff() < 0.0) throw ParameterError("vertex weights must be nonnegative");
    if (!(g.sum() > 0.0)) throw ParameterError("vertex weights must have positive sum");
  }
}

}  // namespace boxnorm
