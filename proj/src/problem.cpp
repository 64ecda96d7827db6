#include "degen/problem.hpp"

#include <cmath>
#include <memory>

namespace degen {

std::pair<double, double> eigen_range(const Mat3& A, int d) {
  if (d == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A.topLeftCorner<2, 2>(), Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(1)};
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(A, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(2)};
}

CoefficientField CoefficientField::identity(int d) {
  CoefficientField c;
  c.d_ = d;
  c.constant_ = Mat3::Identity();
  c.lambda_ = 1.0;
  c.Lambda_ = 1.0;
  return c;
}

CoefficientField CoefficientField::constant(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 2 || A.rows() > kMaxDim)
    throw PreconditionError("coefficient: matrix must be square with size 2 or 3");
  CoefficientField c;
  c.d_ = static_cast<int>(A.rows());
  c.constant_ = Mat3::Identity();
  c.constant_.topLeftCorner(c.d_, c.d_) = A;
  c.lambda_ = 0.0;
  c.Lambda_ = std::numeric_limits<double>::infinity();
  c.check_at(Point{0, 0, 0});
  const auto [lo, hi] = c.eigen_range(Point{0, 0, 0});
  c.lambda_ = lo;
  c.Lambda_ = hi;
  return c;
}

CoefficientField CoefficientField::callback(int d, MatrixFn fn, double lambda, double Lambda) {
  if (!fn) throw PreconditionError("coefficient: empty callback");
  CoefficientField c;
  c.d_ = d;
  c.fn_ = std::move(fn);
  c.lambda_ = lambda;
  c.Lambda_ = Lambda;
  return c;
}

CoefficientField CoefficientField::samples(const Grid& grid, std::vector<Mat3> values) {
  if (values.size() != grid.num_nodes()) throw PreconditionError("coefficient: one sample per node");
  auto data = std::make_shared<std::vector<Mat3>>(std::move(values));
  const Grid g = grid;
  return callback(grid.dim(), [g, data](const Point& z) {
    Point t;
    const auto cell = g.locate(z, t);
    const auto nodes = g.cell_nodes(cell);
    Mat3 m = Mat3::Zero();
    for (int c = 0; c < g.nodes_per_cell(); ++c) m += q1_shape(g.dim(), c, t) * (*data)[nodes[c]];
    return m;
  });
}

std::pair<double, double> CoefficientField::eigen_range(const Point& z) const {
  return degen::eigen_range(at(z), d_);
}

void CoefficientField::check_at(const Point& z) const {
  const Mat3 A = at(z);
  const auto B = A.topLeftCorner(d_, d_);
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + B.cwiseAbs().maxCoeff()))
    throw EllipticityError("coefficient matrix is not symmetric");
  const auto [lo, hi] = degen::eigen_range(A, d_);
  if (!(lo > 0.0)) throw EllipticityError("coefficient matrix is not positive definite");
  const double slack = 1e-12 * (1.0 + hi);
  if (lo < lambda_ - slack || hi > Lambda_ + slack)
    throw EllipticityError("coefficient matrix violates its declared ellipticity bounds");
}

void ProblemSpec::validate() const {
  grid.validate();
  weight.validate();
  if (weight.d != grid.d || weight.n != grid.n)
    throw PreconditionError("problem: weight dimensions differ from grid dimensions");
  if (A.dim() != grid.d) throw PreconditionError("problem: coefficient dimension differs from d");
  if (!(eps >= 0.0)) throw PreconditionError("problem: eps must be >= 0");
  if (grid.n == grid.d && psi && std::abs(psi(Point{0, 0, 0})) > 0.0)
    throw PreconditionError("problem: for n = d the boundary condition is u(0) = 0");
  if (solver.tol <= 0.0 || solver.maxit <= 0) throw PreconditionError("problem: bad solver options");
}

}  // namespace degen
