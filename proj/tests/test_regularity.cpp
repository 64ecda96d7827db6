#include <doctest.h>

#include <cmath>

#include "degen/cases.hpp"
#include "degen/regularity.hpp"

using namespace degen;

namespace {

Field sample(const Grid& g, const std::function<double(const Point&)>& fn) {
  Field f(g.num_nodes());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(g.node(i));
  return f;
}

double rpow(const Point& z, double s) { return std::pow(std::hypot(z[0], z[1]), s); }

}  // namespace

TEST_CASE("holder exponent of analytic fields") {
  const Grid g(GridSpec::cube(2, 2, 257));
  const RateReport half = holder_exponent_fit(g, sample(g, [](const Point& z) { return rpow(z, 0.5); }));
  CHECK(half.exponent == doctest::Approx(0.5).epsilon(0.2));
  CHECK(std::abs(half.exponent - 0.5) <= 0.1);
  CHECK(half.scales_used >= 4);
  const RateReport lin = holder_exponent_fit(g, sample(g, [](const Point& z) { return 2 * z[0] - z[1]; }));
  CHECK(lin.exponent >= 0.99);
  CHECK(lin.exponent <= 1.0);
  const RateReport c1 = holder_exponent_fit(g, sample(g, [](const Point& z) { return rpow(z, 1.5); }));
  CHECK(c1.exponent >= 0.85);
  CHECK(c1.exponent <= 1.0);
}

TEST_CASE("holder fit is scale invariant") {
  const Grid g(GridSpec::cube(2, 2, 129));
  Field f = sample(g, [](const Point& z) { return rpow(z, 0.7); });
  const double e = holder_exponent_fit(g, f).raw_slope;
  for (double& v : f) v *= -7.5;
  CHECK(holder_exponent_fit(g, f).raw_slope == doctest::Approx(e));
}

TEST_CASE("fit window") {
  const auto s = fit_scales(1.0 / 128);
  CHECK(s.size() >= 4);
  CHECK(s.front() == doctest::Approx(0.25));
  CHECK(s.back() >= 4.0 / 128 - 1e-12);
  for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k] < s[k - 1]);
  CHECK_THROWS_AS(fit_scales(1.0 / 32), PreconditionError);
}

TEST_CASE("gradient holder exponent") {
  const Grid g(GridSpec::cube(2, 2, 257));
  const RateReport c1 = gradient_holder_fit(g, sample(g, [](const Point& z) { return rpow(z, 1.5); }));
  CHECK(std::abs(c1.exponent - 0.5) <= 0.1);
  CHECK_FALSE(c1.non_c1);
  const Grid gx(GridSpec::cube(2, 2, 129));
  const RateReport smooth = gradient_holder_fit(gx, sample(gx, [](const Point& z) { return z[0] * z[0]; }));
  CHECK(smooth.exponent >= 0.99);
  const RateReport blow = gradient_holder_fit(g, sample(g, [](const Point& z) { return rpow(z, 0.5); }));
  CHECK(blow.non_c1);
}

TEST_CASE("oscillation profile on a linear field") {
  const Grid g(GridSpec::cube(2, 2, 65));
  const Lattice lat = Lattice::nodes(g, sample(g, [](const Point& z) { return z[0]; }));
  const OscillationProfile p = oscillation_profile(lat, {0.25, 0.125}, 0.5);
  CHECK(p.oscillation[0] == doctest::Approx(0.25));
  CHECK(p.oscillation[1] == doctest::Approx(0.125));
}

TEST_CASE("epsilon sweep") {
  CaseParams p;
  const ManufacturedCase c = make_case("radial_homogeneous", p);
  const EpsilonSweep sw = epsilon_sweep(c.problem(GridSpec::cube(2, 2, 65)), {0.25, 0.125, 0.0625});
  REQUIRE(sw.rows.size() == 3);
  for (std::size_t k = 1; k < sw.rows.size(); ++k) CHECK(sw.rows[k].diff_h1 < sw.rows[k - 1].diff_h1);
  CHECK(sw.bound_ratio <= 2.0);

  ProblemSpec zero = c.problem(GridSpec::cube(2, 2, 33));
  zero.g = {};
  const EpsilonSweep z = epsilon_sweep(zero, {0.25, 0.125});
  for (const auto& row : z.rows) CHECK(row.diff_h1 == 0.0);

  CHECK_THROWS_AS(epsilon_sweep(zero, {0.125, 0.25}), PreconditionError);
  CHECK_THROWS_AS(epsilon_sweep(zero, {0.01}), PreconditionError);
}

TEST_CASE("conormal decay separates compliant and counterexample data") {
  const std::vector<double> schedule{0.25, 0.125, 0.0625, 0.03125};
  CaseParams p;
  const ConormalTrace ok = conormal_decay(make_case("compliant_F", p).problem(GridSpec::cube(2, 2, 129)), schedule);
  const ConormalTrace bad =
      conormal_decay(make_case("counterexample_F", p).problem(GridSpec::cube(2, 2, 257)), schedule);
  CHECK(ok.rate >= 0.25);
  CHECK(bad.rate <= 0.1);
  for (const auto& row : bad.rows) CHECK(row.max_grad >= 0.5);
  const ConormalTrace rad =
      conormal_decay(make_case("radial_homogeneous", p).problem(GridSpec::cube(2, 2, 129)), schedule);
  CHECK(rad.rate >= 0.25);

  CaseParams q;
  q.a = -0.5;
  CHECK_THROWS_AS(conormal_decay(make_case("radial_homogeneous", q).problem(GridSpec::cube(2, 2, 65)), schedule),
                  PreconditionError);
}

TEST_CASE("limiting boundary residual") {
  CaseParams p;
  const ManufacturedCase qy = make_case("quadratic_y", p);
  const ProblemSpec spec = qy.problem(GridSpec::cube(2, 2, 129));
  const SolveResult r = solve(spec);
  const auto rows = limiting_bc_residual(r.grid, r.u, spec, {0.25, 0.125, 0.0625});
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].normal_residual < rows[k - 1].normal_residual);

  CaseParams l;
  l.d = 3;
  l.n = 2;
  l.c = {1.0};
  const ManufacturedCase lx = make_case("linear_x", l);
  const ProblemSpec ls = lx.problem(GridSpec::cube(3, 2, 17));
  const SolveResult lr = solve(ls);
  for (const auto& row : limiting_bc_residual(lr.grid, lr.u, ls, {0.25, 0.125})) CHECK(row.x_residual <= 1e-8);
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
}
