#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "degen/grid.hpp"
#include "degen/weight.hpp"

namespace degen {

/// 3x3 storage for a d x d symmetric matrix; only the leading d x d block is used.
using Mat3 = Eigen::Matrix3d;

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Point(const Point&)>;
using MatrixFn = std::function<Mat3(const Point&)>;

class EllipticityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric, uniformly elliptic coefficient matrix A(z):
/// lambda |xi|^2 <= A(z) xi . xi <= Lambda |xi|^2.
class CoefficientField {
 public:
  CoefficientField() : lambda_(1.0), Lambda_(1.0) {}

  static CoefficientField identity(int d);
  static CoefficientField constant(const Matrix& A);
  /// Declared bounds default to "positive definite only".
  static CoefficientField callback(int d, MatrixFn fn, double lambda = 0.0,
                                   double Lambda = std::numeric_limits<double>::infinity());
  /// Multilinear interpolation of per-node samples.
  static CoefficientField samples(const Grid& grid, std::vector<Mat3> values);

  int dim() const { return d_; }
  bool is_constant() const { return !fn_; }
  Mat3 at(const Point& z) const { return fn_ ? fn_(z) : constant_; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }

  /// Smallest and largest eigenvalue of the leading d x d block at z.
  std::pair<double, double> eigen_range(const Point& z) const;
  /// Throws EllipticityError if A(z) is not symmetric or violates the bounds.
  void check_at(const Point& z) const;

 private:
  int d_ = 2;
  Mat3 constant_ = Mat3::Identity();
  MatrixFn fn_;
  double lambda_ = 0.0;
  double Lambda_ = std::numeric_limits<double>::infinity();
};

std::pair<double, double> eigen_range(const Mat3& A, int d);

struct SolverOptions {
  double tol = 1e-10;
  int maxit = 20000;
};

/// One instance of -div(|y|^a A grad u) = |y|^a f + div(|y|^a F) with
/// u = psi on the singular set (or on the hole |y| <= eps) and u = g on the
/// outer boundary. Empty callbacks mean zero.
struct ProblemSpec {
  GridSpec grid;
  DomainShape shape = DomainShape::box;
  double radius = 1.0;
  double eps = 0.0;
  WeightSpec weight;
  CoefficientField A;
  ScalarFn f;
  VectorFn F;
  ScalarFn psi;
  ScalarFn g;
  QuadratureRule quad;
  SolverOptions solver;

  /// Consistency of dimensions, a + n, eps range, and psi(0) = 0 when n = d.
  void validate() const;
};

inline double eval_or_zero(const ScalarFn& fn, const Point& z) { return fn ? fn(z) : 0.0; }
inline Point eval_or_zero(const VectorFn& fn, const Point& z) {
  return fn ? fn(z) : Point{0, 0, 0};
}

}  // namespace degen
