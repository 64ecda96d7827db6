#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "degen/cases.hpp"
#include "degen/curved.hpp"

using namespace degen;

TEST_CASE("straightening round trip and unit determinant") {
  const Straightening S(Parametrization::sine_graph(3, 2, 0.2));
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const Point z{U(rng), U(rng), U(rng)};
    const Point back = S.forward(S.inverse(z));
    for (int k = 0; k < 3; ++k) CHECK(back[k] == doctest::Approx(z[k]).epsilon(1e-12));
    CHECK(S.det(z) == 1.0);
    const Mat3 prod = S.jacobian(z) * S.jacobian_inverse(z);
    CHECK((prod - Mat3::Identity()).norm() < 1e-14);
  }
}

TEST_CASE("curved mode needs d > n") {
  CHECK_THROWS_AS(Parametrization::sine_graph(2, 2), PreconditionError);
  CHECK_THROWS_AS(Parametrization::by_name("spiral", 3, 2), PreconditionError);
  CHECK(Parametrization::registry().size() == 3);
}

TEST_CASE("vertical distance straightens to unit ratio") {
  const Parametrization p = Parametrization::sine_graph(3, 2, 0.2);
  const Straightening S(p);
  const AdmissibleWeight w = AdmissibleWeight::vertical_distance(p);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int i = 0; i < 50; ++i) CHECK(w.tilde(S, {U(rng), U(rng), U(rng)}) == doctest::Approx(1.0));
}

TEST_CASE("admissibility constants") {
  const Parametrization p = Parametrization::sine_graph(3, 2, 0.2);
  const AdmissibilityReport one = admissibility_check(AdmissibleWeight::scaled_graph_distance(p, 1.0), p, 100);
  CHECK(one.c0 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(one.c1 == doctest::Approx(1.0).epsilon(1e-3));
  const AdmissibilityReport two = admissibility_check(AdmissibleWeight::scaled_graph_distance(p, 2.0), p, 100);
  CHECK(two.c0 == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(two.c1 == doctest::Approx(2.0).epsilon(1e-3));
  const AdmissibilityReport vert = admissibility_check(AdmissibleWeight::vertical_distance(p), p, 100);
  CHECK(vert.c0 >= 0.9);
  CHECK(vert.c1 <= 1.1);
  CHECK(vert.admissible);
}

TEST_CASE("flat straightening leaves the problem unchanged") {
  CaseParams cp;
  cp.d = 3;
  cp.n = 2;
  cp.a = -1.5;
  const ManufacturedCase c = make_case("compliant_F", cp);
  const Parametrization zero = Parametrization::zero(3, 2);
  CurvedProblem prob{c.problem(GridSpec::cube(3, 2, 5)), zero, AdmissibleWeight::vertical_distance(zero)};
  Matrix A(3, 3);
  A << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 1.5;
  prob.spec.A = CoefficientField::constant(A);
  const PushedProblem pushed = push_problem(prob);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const Point z{U(rng), U(rng), U(rng)};
    CHECK((pushed.spec.A.at(z) - prob.spec.A.at(z)).norm() < 1e-14);
    CHECK((pushed.effective.at(z) - prob.spec.A.at(z)).norm() < 1e-14);
    CHECK(pushed.spec.f(z) == doctest::Approx(prob.spec.f(z)));
    const Point F0 = prob.spec.F(z), F1 = pushed.spec.F(z);
    for (int k = 0; k < 3; ++k) CHECK(F1[k] == doctest::Approx(F0[k]));
  }
}

TEST_CASE("transported coefficient stays elliptic on the sine graph") {
  const Parametrization p = Parametrization::sine_graph(3, 2, 0.2);
  const CurvedModel m = curved_radial_model(p, -1.5, GridSpec::cube(3, 2, 9));
  const PushedProblem pushed = push_problem(m.problem);
  CHECK(pushed.lambda_tilde > 0.0);
  for (double x : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
    const Mat3 B = pushed.effective.at({x, 0.0, 0.0});
    Eigen::SelfAdjointEigenSolver<Mat3> es(B);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(es.eigenvalues().minCoeff() >= pushed.lambda_tilde - 1e-12);
  }
}

TEST_CASE("pullback") {
  const Grid straight(GridSpec::cube(3, 2, 33));
  const Grid curved(GridSpec::cube(3, 2, 17, 0.6));
  const Parametrization p = Parametrization::sine_graph(3, 2, 0.2);
  const Straightening S(p);
  Field c(straight.num_nodes(), 4.0), u(straight.num_nodes());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::pow(straight.y_norm(straight.node(i)), 1.5);
  for (double v : pullback_field(straight, c, S, curved)) CHECK(v == doctest::Approx(4.0));
  const Field pu = pullback_field(straight, u, S, curved);
  for (std::size_t i = 0; i < curved.num_nodes(); ++i) {
    const Point z = curved.node(i);
    const double exact = std::pow(std::hypot(z[1] - 0.2 * std::sin(z[0]), z[2]), 1.5);
    CHECK(std::abs(pu[i] - exact) < 0.02);
  }
  const Straightening id(Parametrization::zero(3, 2));
  const Field same = pullback_field(straight, u, id, straight);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(same[i] == doctest::Approx(u[i]));
  // preimages outside the straight grid are rejected
  CHECK_THROWS_AS(pullback_field(curved, pullback_field(straight, u, S, curved), S, straight), PreconditionError);
}

TEST_CASE("curved residual of the exact curved solution decays") {
  const Parametrization p = Parametrization::sine_graph(3, 2, 0.2);
  const CurvedModel m = curved_radial_model(p, -1.5, GridSpec::cube(3, 2, 9));
  const Grid g(GridSpec::cube(3, 2, 49, 0.75));
  Field u(g.num_nodes());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = m.exact(g.node(i));
  const auto rows = curved_bc_residual(g, u, m.problem.spec.A, m.problem.spec.F, m.problem.spec.psi, p,
                                       {0.5, 0.25, 0.125, 0.0625});
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].normal < rows[k - 1].normal);
  CHECK(rows.front().normal / rows.back().normal > 2.0);
}

TEST_CASE("flat curved residual matches the flat conormal residual") {
  CaseParams cp;
  cp.d = 3;
  cp.n = 2;
  cp.a = -1.5;
  const ManufacturedCase c = make_case("quadratic_y", cp);
  const Grid g(GridSpec::cube(3, 2, 17));
  const Field u = c.sample(g);
  const auto rows = curved_bc_residual(g, u, c.A, c.F, c.psi, Parametrization::zero(3, 2), {0.5, 0.25});
  // grad |y|^2 = 2y, so the normal component at vertical distance <= band is at most 2 band
  for (const auto& r : rows) {
    CHECK(r.samples > 0);
    CHECK(r.normal <= 2.0 * r.band + 1e-12);
  }
}
