#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "degen/cases.hpp"
#include "degen/fem.hpp"

using namespace degen;

namespace {

ProblemSpec radial_spec(int nodes, double a = -1.5) {
  CaseParams p;
  p.a = a;
  return make_case("radial_homogeneous", p).problem(GridSpec::cube(2, 2, nodes));
}

}  // namespace

TEST_CASE("stiffness is symmetric with constants in its kernel") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  const CellIntegrator integ(g, WeightSpec(-1.5, 2, 2));
  const LinearSystem sys = assemble(integ, m, CoefficientField::identity(2), {}, {});
  CHECK(sys.K.symmetric(1e-12));
  Field one(g.num_nodes(), 1.0), K1(g.num_nodes());
  sys.K.multiply(one, K1);
  double scale = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    CHECK(sys.K.at(i, i) > 0.0);
    scale = std::max(scale, sys.K.at(i, i));
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (m.cls[i] == NodeClass::interior) CHECK(std::abs(K1[i]) <= 1e-12 * scale);
}

TEST_CASE("divergence load has the weak-form sign") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  const CellIntegrator integ(g, WeightSpec(-1.5, 2, 2));
  const VectorFn F = [](const Point&) { return Point{-1.0, -1.0, 0.0}; };
  const LinearSystem sys = assemble(integ, m, CoefficientField::identity(2), {}, F);
  // oracle: b_i = int w (1,1) . grad phi_i, summed cell by cell
  std::vector<double> b(g.num_nodes(), 0.0);
  std::vector<QuadPoint> pts;
  std::vector<Point> local;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto nodes = g.cell_nodes(c);
    integ.weighted_points_local(c, pts, local);
    for (std::size_t q = 0; q < pts.size(); ++q)
      for (int k = 0; k < 4; ++k) {
        const Point gr = q1_shape_grad(2, k, local[q], g.h());
        b[nodes[k]] += pts[q].measure * (gr[0] + gr[1]);
      }
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(sys.rhs[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("reduced stiffness is positive definite") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(-0.4, 0.4);
  Matrix B(2, 2);
  B << 1 + std::abs(U(rng)), U(rng), 0, 1 + std::abs(U(rng));
  const Matrix A = B * B.transpose() + 0.5 * Matrix::Identity(2, 2);
  const Grid g(GridSpec::cube(2, 2, 5));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  const CellIntegrator integ(g, WeightSpec(-1.2, 2, 2));
  const LinearSystem sys = assemble(integ, m, CoefficientField::constant(A), [](const Point&) { return 1.0; }, {});
  const ReducedSystem red = apply_dirichlet(sys, g, m, {}, {});
  CHECK(red.K.symmetric(1e-12));
  const Matrix K = red.K.to_dense();
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const CgResult cg = solve_cg(red.K, red.rhs);
  CHECK(cg.converged());
}

TEST_CASE("constraint bookkeeping") {
  const ProblemSpec spec = radial_spec(9);
  const Grid g(spec.grid);
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  const CellIntegrator integ(g, spec.weight);
  const LinearSystem sys = assemble(integ, m, spec.A, spec.f, spec.F);
  const ReducedSystem red = apply_dirichlet(sys, g, m, spec.psi, spec.g);
  CHECK(red.num_constrained == m.count(NodeClass::outer_boundary) + m.count(NodeClass::sigma0));
  CHECK(red.free_to_global.size() + red.num_constrained == g.num_nodes());
}

TEST_CASE("hole data zero gives the zero solution") {
  ProblemSpec spec = radial_spec(9);
  spec.g = {};
  spec.eps = 0.25;
  const SolveResult r = solve(spec);
  for (double v : r.u) CHECK(v == 0.0);
}

TEST_CASE("singular data is sampled on the axis") {
  CaseParams p;
  p.d = 3;
  p.n = 2;
  p.a = -1.5;
  p.c = {1.0};
  const ManufacturedCase c = make_case("linear_x", p);
  const SolveResult r = solve(c.problem(GridSpec::cube(3, 2, 9)));
  for (std::size_t i = 0; i < r.grid.num_nodes(); ++i) {
    if (r.mask.cls[i] == NodeClass::sigma0) CHECK(r.u[i] == doctest::Approx(r.grid.node(i)[0]));
    // linear reproduction everywhere
    CHECK(r.u[i] == doctest::Approx(r.grid.node(i)[0]).epsilon(1e-8));
  }
}

TEST_CASE("cg edge cases") {
  const ProblemSpec spec = radial_spec(9);
  const Grid g(spec.grid);
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  const CellIntegrator integ(g, spec.weight);
  const LinearSystem sys = assemble(integ, m, spec.A, {}, {});
  ReducedSystem red = apply_dirichlet(sys, g, m, {}, {});
  const std::vector<double> zero(red.K.rows, 0.0);
  const CgResult z = solve_cg(red.K, zero);
  CHECK(z.converged());
  CHECK(z.iterations == 0);
  for (double v : z.x) CHECK(v == 0.0);

  red.K.val[red.K.find(3, 3)] *= -1.0;
  const std::vector<double> ones(red.K.rows, 1.0);
  CHECK(solve_cg(red.K, ones).status == CgStatus::indefinite);
}

TEST_CASE("radial solve converges and shrinks the error") {
  double prev = 1e9;
  for (int nodes : {17, 33, 65}) {
    CaseParams p;
    const ManufacturedCase c = make_case("radial_homogeneous", p);
    const SolveResult r = solve(c.problem(GridSpec::cube(2, 2, nodes)));
    CHECK(r.relative_residual <= 1e-10);
    const double e = exact_error(r.grid, r.u, c, ErrorNorm::linf_half_ball);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("energy and the Dirichlet principle") {
  const ProblemSpec spec = radial_spec(17);
  const SolveResult r = solve(spec);
  const CellIntegrator integ(r.grid, spec.weight);
  CHECK(energy(integ, r.mask, spec.A, {}, {}, Field(r.u.size(), 0.0)) == 0.0);
  // competitors with the same constraints
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  const double J = energy(integ, r.mask, spec.A, spec.f, spec.F, r.u);
  for (int t = 0; t < 5; ++t) {
    Field v = r.u;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (r.mask.cls[i] == NodeClass::interior) v[i] += U(rng);
    CHECK(J <= energy(integ, r.mask, spec.A, spec.f, spec.F, v));
  }
}

TEST_CASE("energy identity for the flux counterexample") {
  CaseParams p;
  const ManufacturedCase c = make_case("counterexample_F", p);
  const Grid g(GridSpec::cube(2, 2, 33));
  const CellIntegrator integ(g, c.weight());
  const Field u = c.sample(g);
  const double lhs = weighted_field_integral(integ, u, Region::all(), [](const Point&, double, const Point& gr) {
    return gr[0] * gr[0] + gr[1] * gr[1];
  });
  const double rhs = -weighted_field_integral(integ, u, Region::all(), [&](const Point& z, double, const Point& gr) {
    const Point F = c.F(z);
    return F[0] * gr[0] + F[1] * gr[1];
  });
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("galerkin residual and discrete maximum principle") {
  const ProblemSpec spec = radial_spec(33);
  const SolveResult r = solve(spec);
  const CellIntegrator integ(r.grid, spec.weight);
  const LinearSystem sys = assemble(integ, r.mask, spec.A, spec.f, spec.F);
  CHECK(galerkin_residual(sys, r.mask, r.u) < 1e-9);
  double gmin = 1e9, gmax = -1e9;
  for (std::size_t i = 0; i < r.u.size(); ++i)
    if (r.mask.constrained(i)) {
      gmin = std::min(gmin, r.u[i]);
      gmax = std::max(gmax, r.u[i]);
    }
  for (double v : r.u) {
    CHECK(v >= gmin - 1e-8);
    CHECK(v <= gmax + 1e-8);
  }
}

TEST_CASE("ellipticity is checked") {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(CoefficientField::constant(bad), EllipticityError);
  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  CHECK_THROWS_AS(CoefficientField::constant(asym), EllipticityError);
}
