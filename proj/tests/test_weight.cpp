#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "degen/weight.hpp"

using namespace degen;

namespace {

double ball_integral(double a, int nodes, const std::function<double(const Point&)>& fn) {
  const Grid g(GridSpec::cube(2, 2, nodes));
  const CellIntegrator integ(g, WeightSpec(a, 2, 2));
  return weighted_function_lp(integ, Region::ball(1.0), 1.0, fn);
}

}  // namespace

TEST_CASE("weight evaluation") {
  const WeightSpec w(-1.5, 2, 2);
  CHECK(weight_eval(w, {0.5, 0.0, 0.0}) == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(weight_eval(WeightSpec(-0.5, 2, 2), {0.0, 1.0, 0.0}) == doctest::Approx(1.0));
  CHECK_THROWS(weight_eval(w, {0.0, 0.0, 0.0}));
  // only the y-part counts
  CHECK(weight_eval(WeightSpec(-1.0, 3, 2), {5.0, 0.0, 0.5}) == doctest::Approx(2.0));
}

TEST_CASE("standing assumption on a + n") {
  CHECK_THROWS_AS(WeightSpec(-2.5, 2, 2), PreconditionError);
  CHECK_THROWS_AS(WeightSpec(0.0, 2, 2), PreconditionError);
  CHECK_THROWS_AS(WeightSpec(-2.0, 2, 2), PreconditionError);
  CHECK_NOTHROW(WeightSpec(-1.999, 2, 2));
  CHECK(WeightSpec(-1.5, 2, 2).model_exponent() == doctest::Approx(1.5));
}

TEST_CASE("composed weight with unit ratio matches the straight weight") {
  const WeightSpec s(-1.3, 3, 2);
  const WeightSpec c = WeightSpec::composed(-1.3, 3, 2, [](const Point&) { return 1.0; });
  std::mt19937 rng(20);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const Point z{U(rng), U(rng), U(rng)};
    CHECK(weight_eval(c, z) == doctest::Approx(weight_eval(s, z)));
  }
}

TEST_CASE("radial oracles over the unit disc") {
  // int_{B_1} |y|^{-1/2} = 2 pi / 1.5
  CHECK(ball_integral(-0.5, 129, [](const Point&) { return 1.0; }) ==
        doctest::Approx(4 * std::numbers::pi / 3).epsilon(0.01));
  // int_{B_1} |y|^{-3/2} |y|^3 = 2 pi / 3.5
  CHECK(ball_integral(-1.5, 129, [](const Point& z) { return std::pow(std::hypot(z[0], z[1]), 3); }) ==
        doctest::Approx(4 * std::numbers::pi / 7).epsilon(0.01));
  CHECK(ball_integral(-1.5, 17, [](const Point&) { return 0.0; }) == 0.0);
}

TEST_CASE("weighted norms") {
  const Grid g(GridSpec::cube(2, 2, 129));
  const CellIntegrator integ(g, WeightSpec(-1.5, 2, 2));
  Field u(g.num_nodes()), zero(g.num_nodes(), 0.0), c(g.num_nodes(), 3.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point z = g.node(i);
    u[i] = std::pow(std::hypot(z[0], z[1]), 1.5);
  }
  const auto ball = Region::ball(1.0);
  CHECK(weighted_lp_norm(integ, u, 2.0, ball).value == doctest::Approx(1.339849).epsilon(0.01));
  CHECK(weighted_lp_norm(integ, zero, 2.0, ball).value == 0.0);
  CHECK(weighted_h1_norm(integ, zero, ball).value == 0.0);
  const double vol = weighted_function_lp(integ, ball, 1.0, [](const Point&) { return 1.0; });
  CHECK(weighted_lp_norm(integ, c, 2.0, ball).value == doctest::Approx(3.0 * std::sqrt(vol)));

  // homogeneity and sign invariance
  Field m(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) m[i] = -2.5 * u[i];
  CHECK(weighted_lp_norm(integ, m, 2.0, ball).value ==
        doctest::Approx(2.5 * weighted_lp_norm(integ, u, 2.0, ball).value));
  CHECK(weighted_h1_norm(integ, m, ball).value == doctest::Approx(2.5 * weighted_h1_norm(integ, u, ball).value));
  CHECK(linf_norm(g, u, Region::ball(0.5)).value == doctest::Approx(std::pow(0.5, 1.5)).epsilon(1e-9));
}

TEST_CASE("sobolev exponent") {
  CHECK(sobolev_exponent(3).value() == doctest::Approx(6.0));
  CHECK(sobolev_exponent(4).value() == doctest::Approx(4.0));
  CHECK_FALSE(sobolev_exponent(2).has_value());
}

TEST_CASE("quadrature points avoid the singular set and cover the cell") {
  for (int d : {2, 3}) {
    const Grid g(GridSpec::cube(d, 2, 5));
    const CellIntegrator integ(g, WeightSpec(-1.5, d, 2));
    std::vector<QuadPoint> pts;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      integ.weighted_points(c, pts);
      for (const auto& q : pts) {
        CHECK(g.y_norm(q.z) > 0.0);
        CHECK(q.measure > 0.0);
      }
    }
  }
}

TEST_CASE("graded leaves tile the cell") {
  for (int d : {2, 3}) {
    Box cell;
    cell.size = {0.25, 0.25, 0.25};
    cell.singular = true;
    const auto leaves = graded_leaves(cell, d, 2, 4);
    double vol = 0.0;
    int singular = 0;
    for (const auto& b : leaves) {
      double v = 1.0;
      for (int k = 0; k < d; ++k) v *= b.size[k];
      vol += v;
      singular += b.singular;
    }
    CHECK(vol == doctest::Approx(std::pow(0.25, d)));
    CHECK(singular == 1);
  }
}

TEST_CASE("element integrals are linear and grading corrections decay geometrically") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const std::size_t cell = g.cell_index({4, 4, 0});  // corner at the origin
  for (double a : {-0.5, -1.5}) {
    const CellIntegrator integ(g, WeightSpec(a, 2, 2));
    auto f1 = [](const Point& z) { return 1 + z[0]; };
    auto f2 = [](const Point& z) { return z[1] * z[1]; };
    const double lin = element_weighted_integral(integ, cell, [&](const Point& z) { return 2 * f1(z) - 3 * f2(z); });
    CHECK(lin == doctest::Approx(2 * element_weighted_integral(integ, cell, f1) -
                                 3 * element_weighted_integral(integ, cell, f2)));
    // smooth non-polynomial integrand so the rule is not exact
    auto fn = [](const Point& z) { return std::cos(3 * z[0]) * std::exp(z[1]); };
    std::vector<double> vals;
    for (int depth = 1; depth <= 6; ++depth) {
      const CellIntegrator q(g, WeightSpec(a, 2, 2), {3, depth});
      vals.push_back(element_weighted_integral(q, cell, fn));
    }
    for (std::size_t k = 2; k < vals.size(); ++k) {
      const double prev = std::abs(vals[k - 1] - vals[k - 2]);
      const double next = std::abs(vals[k] - vals[k - 1]);
      if (prev > 1e-13) CHECK(next / prev < 0.75);
    }
  }
}

TEST_CASE("gauss rules integrate polynomials exactly") {
  const Rule1D gl = gauss_legendre(4);
  double s = 0;
  for (std::size_t i = 0; i < gl.x.size(); ++i) s += gl.w[i] * std::pow(gl.x[i], 7);
  CHECK(s == doctest::Approx(1.0 / 8));
  const Rule1D gj = gauss_jacobi(4, -0.5);
  s = 0;
  for (std::size_t i = 0; i < gj.x.size(); ++i) s += gj.w[i] * std::pow(gj.x[i], 3);
  CHECK(s == doctest::Approx(1.0 / 3.5));
}
