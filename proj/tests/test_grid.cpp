#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "degen/grid.hpp"

using namespace degen;

TEST_CASE("uniform grid node counts and spacing") {
  const Grid g(GridSpec::cube(2, 2, 9));
  CHECK(g.num_nodes() == 81);
  CHECK(g.num_cells() == 64);
  CHECK(g.h() == doctest::Approx(0.25));
  bool origin = false;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Point z = g.node(i);
    origin = origin || (z[0] == 0.0 && z[1] == 0.0);
  }
  CHECK(origin);
}

TEST_CASE("three-dimensional grid has a line of singular nodes") {
  const Grid g(GridSpec::cube(3, 2, 5));
  CHECK(g.num_nodes() == 125);
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  CHECK(m.count(NodeClass::sigma0) <= 5);
  std::size_t on_axis = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Point z = g.node(i);
    const bool axis = z[1] == 0.0 && z[2] == 0.0;
    on_axis += axis;
    if (axis) CHECK(m.constrained(i));
    if (axis && !m.on_outer[i]) CHECK(m.cls[i] == NodeClass::sigma0);
  }
  CHECK(on_axis == 5);
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(Grid(GridSpec::cube(2, 2, 8)), PreconditionError);
  CHECK_THROWS_AS(Grid(GridSpec::cube(2, 2, 3)), PreconditionError);
  CHECK_THROWS_AS(Grid(GridSpec::cube(2, 3, 9)), PreconditionError);
  GridSpec s = GridSpec::cube(2, 2, 9);
  s.bounds[1] = {-1.0, 1.5};
  CHECK_THROWS_AS(s.validate(), PreconditionError);
}

TEST_CASE("index round trips") {
  const Grid g(GridSpec::cube(3, 2, 7));
  for (std::size_t i = 0; i < g.num_nodes(); i += 13) CHECK(g.node_index(g.node_multi(i)) == i);
  for (std::size_t c = 0; c < g.num_cells(); c += 11) CHECK(g.cell_index(g.cell_multi(c)) == c);
  // first axis slowest
  CHECK(g.node(1)[2] == doctest::Approx(-1.0 + g.h()));
  CHECK(g.node(1)[0] == doctest::Approx(-1.0));
}

TEST_CASE("sigma0 is exactly the origin for d = n = 2") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  CHECK(m.count(NodeClass::sigma0) == 1);
  const std::size_t origin = g.node_index({4, 4, 0});
  CHECK(m.cls[origin] == NodeClass::sigma0);
}

TEST_CASE("hole nodes match a brute-force scan") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.3);
  std::size_t expected = 0;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      const double y0 = -1 + 0.25 * i, y1 = -1 + 0.25 * j;
      expected += std::hypot(y0, y1) <= 0.3;
    }
  CHECK(expected == 5);
  CHECK(m.count(NodeClass::hole_constrained) == expected);
  CHECK(m.count(NodeClass::sigma0) == 0);
}

TEST_CASE("node classes partition and holes grow with eps") {
  for (auto shape : {DomainShape::box, DomainShape::ball}) {
    const Grid g(GridSpec::cube(2, 2, 17));
    std::vector<std::uint8_t> prev(g.num_nodes(), 0);
    for (double eps : {0.0, 0.1, 0.2, 0.35, 0.5}) {
      const DomainMask m = classify_nodes(g, shape, eps, 0.9);
      std::size_t total = 0;
      for (auto c : {NodeClass::interior, NodeClass::sigma0, NodeClass::hole_constrained, NodeClass::outer_boundary,
                     NodeClass::excluded})
        total += m.count(c);
      CHECK(total == g.num_nodes());
      for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const bool hole = m.cls[i] == NodeClass::hole_constrained;
        if (prev[i]) CHECK(hole);
        prev[i] = hole;
        if (shape == DomainShape::ball) {
          const Point z = g.node(i);
          if (std::hypot(z[0], z[1]) >= 0.9)
            CHECK((m.cls[i] == NodeClass::outer_boundary || m.cls[i] == NodeClass::excluded));
        }
      }
    }
  }
}

TEST_CASE("ellipsoid membership fractions") {
  const Grid g(GridSpec::cube(2, 2, 9));
  const Matrix I = Matrix::Identity(2, 2);
  const auto full = ellipsoid_membership(g, EllipsoidRegion(I, 1.0));
  // cells adjacent to the origin lie fully inside the unit disc
  CHECK(full[g.cell_index({3, 3, 0})] == doctest::Approx(1.0));
  const auto small = ellipsoid_membership(g, EllipsoidRegion(I, 0.5));
  CHECK(small[g.cell_index({7, 7, 0})] == doctest::Approx(0.0));

  Matrix A(2, 2);
  A << 4, 0, 0, 1;
  const EllipsoidRegion region(A, 1.0);
  const auto frac = ellipsoid_membership(g, region);
  // 4x4 midpoint oracle on a straddling cell
  const std::size_t cell = g.cell_index({6, 7, 0});
  const Point lo = g.cell_lower(cell);
  int inside = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double y0 = lo[0] + (i + 0.5) * g.h() / 4, y1 = lo[1] + (j + 0.5) * g.h() / 4;
      inside += y0 * y0 / 4 + y1 * y1 < 1.0;
    }
  CHECK(inside > 0);
  CHECK(inside < 16);
  CHECK(frac[cell] == doctest::Approx(inside / 16.0));

  std::vector<double> last(g.num_cells(), 0.0);
  for (double r : {0.2, 0.4, 0.7, 1.0, 1.3}) {
    const auto f = ellipsoid_membership(g, EllipsoidRegion(A, r));
    for (std::size_t c = 0; c < f.size(); ++c) CHECK(f[c] >= last[c]);
    last = f;
  }
}

TEST_CASE("trace restriction") {
  const Grid g(GridSpec::cube(3, 2, 5));
  const DomainMask m = classify_nodes(g, DomainShape::box, 0.0);
  Field ext(g.num_nodes()), root(g.num_nodes()), rnd(g.num_nodes());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const Point z = g.node(i);
    ext[i] = z[0];
    root[i] = std::pow(std::hypot(z[1], z[2]), 0.5);
    rnd[i] = U(rng);
  }
  const auto tr = restrict_to_sigma0(ext, m);
  const auto t0 = restrict_to_sigma0(root, m);
  const auto tr_rnd = restrict_to_sigma0(rnd, m);
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (m.cls[i] != NodeClass::sigma0) continue;
    CHECK(tr[k] == g.node(i)[0]);
    CHECK(t0[k] == 0.0);
    CHECK(tr_rnd[k] == rnd[i]);
    ++k;
  }
  CHECK(k == tr.size());
  CHECK_THROWS_AS(restrict_to_sigma0(ext, classify_nodes(g, DomainShape::box, 0.3)), PreconditionError);
}

TEST_CASE("multilinear interpolation reproduces multilinear fields") {
  const Grid g(GridSpec::cube(3, 2, 9));
  auto fn = [](const Point& z) { return 1 + 2 * z[0] - z[1] + 0.5 * z[2] + z[0] * z[1] * z[2]; };
  Field f(g.num_nodes());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(g.node(i));
  for (const Point z : {Point{0.1, -0.33, 0.71}, Point{-0.95, 0.2, 0.0}, Point{1.0, 1.0, 1.0}})
    CHECK(interpolate(g, f, z) == doctest::Approx(fn(z)));
}

TEST_CASE("mask csv lists every node") {
  const Grid g(GridSpec::cube(2, 2, 5));
  std::ostringstream os;
  write_mask_csv(os, g, classify_nodes(g, DomainShape::box, 0.0));
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 26);
}
