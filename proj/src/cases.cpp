#include "degen/cases.hpp"

#include <cmath>
#include <random>

namespace degen {

Regime regime_of(double a, int n) { return a + n < 1.0 ? Regime::c1alpha : Regime::c0alpha; }

std::string to_string(Regime r) { return r == Regime::c1alpha ? "C1,alpha" : "C0,alpha"; }

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"radial_homogeneous", "2<=n<=d<=3, a+n in (0,2)",
       "u=|y|^(2-a-n), A=I, f=0, F=0, psi=0; homogeneous model solution, sharp exponent"},
      {"anisotropic", "n=d, A constant SPD",
       "u=|A^(-1/2)y|^(2-a-n), f=0, F=0, psi=0; extremal field of the spectral trace inequality"},
      {"linear_x", "d>n", "u=c.x, f=0, F=0, psi=c.x; x-directions carry no weight"},
      {"quadratic_y", "2<=n<=d<=3", "u=|y|^2, f=-2(n+a), F=0, psi=0"},
      {"quadratic_x", "d>n", "u=x1^2, f=-2, F=0, psi=x1^2"},
      {"counterexample_F", "d=n=2, a in (-2,-1)",
       "u=y1+y2, F=(-1,-1), f=0, psi=0; field violating the conormal condition"},
      {"compliant_F", "2<=n<=d<=3",
       "u=q(y)+x1^2/2, F with F(x,0).e_y=0, f derived by exact differentiation"},
  };
  return entries;
}

namespace {

double ynorm(const Point& z, int d, int n) { return y_norm(z, d, n); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw PreconditionError(msg);
}

}  // namespace

ProblemSpec ManufacturedCase::problem(const GridSpec& grid, double eps, QuadratureRule quad,
                                      SolverOptions solver) const {
  ProblemSpec s;
  s.grid = grid;
  s.grid.d = d;
  s.grid.n = n;
  s.eps = eps;
  s.weight = weight();
  s.A = A;
  s.f = f;
  s.F = F;
  s.psi = psi;
  s.g = u;
  s.quad = quad;
  s.solver = solver;
  return s;
}

Field ManufacturedCase::sample(const Grid& grid) const {
  Field out(grid.num_nodes());
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) out[i] = u(grid.node(i));
  return out;
}

ManufacturedCase make_case(std::string_view name, const CaseParams& p) {
  const int d = p.d;
  const int n = p.n;
  const double a = p.a;
  require(d >= 2 && d <= kMaxDim && n >= 2 && n <= d, "case: need 2 <= n <= d <= 3");
  require(a + n > 0.0 && a + n < 2.0, "a+n must lie in (0,2)");

  ManufacturedCase c;
  c.name = std::string(name);
  c.d = d;
  c.n = n;
  c.a = a;
  c.A = CoefficientField::identity(d);
  c.regime = regime_of(a, n);
  const double gamma = 2.0 - a - n;

  if (name == "radial_homogeneous") {
    c.role = "homogeneous model solution";
    c.u = [=](const Point& z) { return std::pow(ynorm(z, d, n), gamma); };
    c.grad_u = [=](const Point& z) {
      Point g{0, 0, 0};
      const double r = ynorm(z, d, n);
      if (r == 0.0) return g;
      const double s = gamma * std::pow(r, gamma - 2.0);
      for (int k = d - n; k < d; ++k) g[k] = s * z[k];
      return g;
    };
    c.psi = [](const Point&) { return 0.0; };
    c.expected_exponent = gamma;
  } else if (name == "anisotropic") {
    require(n == d, "anisotropic: requires n = d");
    Matrix A = p.A.size() ? p.A : Matrix::Identity(d, d);
    c.A = CoefficientField::constant(A);
    const Matrix Ainv = A.inverse();
    c.role = "extremal field of the spectral trace inequality";
    // |A^{-1/2} y|^2 = A^{-1} y . y
    c.u = [=](const Point& z) {
      double q = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q += Ainv(i, j) * z[i] * z[j];
      return std::pow(std::max(q, 0.0), 0.5 * gamma);
    };
    c.grad_u = [=](const Point& z) {
      double q = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q += Ainv(i, j) * z[i] * z[j];
      Point g{0, 0, 0};
      if (q <= 0.0) return g;
      const double s = gamma * std::pow(q, 0.5 * (-a - n));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g[i] += s * Ainv(i, j) * z[j];
      return g;
    };
    c.psi = [](const Point&) { return 0.0; };
    c.expected_exponent = gamma;
  } else if (name == "linear_x") {
    require(d > n, "linear_x: requires d > n");
    std::array<double, 3> cv{0, 0, 0};
    cv[0] = 1.0;
    if (!p.c.empty())
      for (int k = 0; k < d - n && k < static_cast<int>(p.c.size()); ++k) cv[k] = p.c[k];
    c.role = "x-linear solution";
    c.u = [=](const Point& z) {
      double v = 0.0;
      for (int k = 0; k < d - n; ++k) v += cv[k] * z[k];
      return v;
    };
    c.grad_u = [=](const Point&) {
      Point g{0, 0, 0};
      for (int k = 0; k < d - n; ++k) g[k] = cv[k];
      return g;
    };
    c.psi = c.u;
    c.expected_exponent = 2.0;
  } else if (name == "quadratic_y") {
    c.role = "smooth y-quadratic";
    c.u = [=](const Point& z) { return ynorm(z, d, n) * ynorm(z, d, n); };
    c.grad_u = [=](const Point& z) {
      Point g{0, 0, 0};
      for (int k = d - n; k < d; ++k) g[k] = 2.0 * z[k];
      return g;
    };
    // div(|y|^a 2y) = 2(n+a)|y|^a
    c.f = [=](const Point&) { return -2.0 * (n + a); };
    c.psi = [](const Point&) { return 0.0; };
    c.expected_exponent = 2.0;
  } else if (name == "quadratic_x") {
    require(d > n, "quadratic_x: requires d > n");
    c.role = "smooth x-quadratic";
    c.u = [](const Point& z) { return z[0] * z[0]; };
    c.grad_u = [](const Point& z) { return Point{2.0 * z[0], 0, 0}; };
    c.f = [](const Point&) { return -2.0; };
    c.psi = c.u;
    c.expected_exponent = 2.0;
  } else if (name == "counterexample_F") {
    require(d == 2 && n == 2, "counterexample_F: requires d = n = 2");
    require(a > -2.0 && a < -1.0, "counterexample_F: requires a in (-2,-1)");
    c.role = "field violating the conormal condition";
    c.u = [](const Point& z) { return z[0] + z[1]; };
    c.grad_u = [](const Point&) { return Point{1.0, 1.0, 0}; };
    c.F = [](const Point&) { return Point{-1.0, -1.0, 0}; };
    c.psi = [](const Point&) { return 0.0; };
    c.expected_exponent = 2.0;
  } else if (name == "compliant_F") {
    c.role = "conormal-compliant divergence data";
    const int dx = d - n;
    auto u_t = [=](const std::array<Jet, 3>& z) {
      const Jet& y1 = z[dx];
      const Jet& y2 = z[dx + 1];
      Jet q = y1 * y1 + y1 * y2 + 2.0 * y2 * y2;
      if (n == 3) q = q + z[dx + 2] * z[dx + 2];
      if (dx > 0) q = q + 0.5 * z[0] * z[0];
      return q;
    };
    auto F_t = [=](const std::array<Jet, 3>& z) {
      std::array<Jet, 3> F{Jet(0.0), Jet(0.0), Jet(0.0)};
      const Jet& y1 = z[dx];
      const Jet& y2 = z[dx + 1];
      Jet eta(1.0);
      if (dx > 0) {
        eta = 1.0 + 0.2 * cos(z[0]);
        F[0] = 0.3 * sin(z[0]);
      }
      F[dx] = eta * (0.5 * y1 + 0.25 * y2 * y2);
      F[dx + 1] = eta * (0.5 * y2 - 0.3 * y1 * y2);
      if (n == 3) F[dx + 2] = eta * 0.5 * z[dx + 2];
      return F;
    };
    auto lift = [](const Point& z) {
      return std::array<Jet, 3>{Jet(z[0]), Jet(z[1]), Jet(z[2])};
    };
    c.u = [=](const Point& z) { return u_t(lift(z)).v; };
    c.grad_u = [=](const Point& z) {
      std::array<Jet, 3> zj;
      for (int k = 0; k < 3; ++k) zj[k] = k < d ? Jet::variable(z[k], k) : Jet(0.0);
      const Jet j = u_t(zj);
      return Point{j.g[0], j.g[1], j.g[2]};
    };
    c.F = [=](const Point& z) {
      const auto F = F_t(lift(z));
      return Point{F[0].v, F[1].v, F[2].v};
    };
    const Mat3 I = Mat3::Identity();
    c.f = [=](const Point& z) {
      if (ynorm(z, d, n) == 0.0) return 0.0;
      return derived_forcing(u_t, F_t, I, a, d, n, z);
    };
    c.psi = [=](const Point& z) { return dx > 0 ? 0.5 * z[0] * z[0] : 0.0; };
    c.expected_exponent = 2.0;
  } else {
    throw PreconditionError("unknown case '" + std::string(name) + "'");
  }
  if (!c.psi) c.psi = [](const Point&) { return 0.0; };
  return c;
}

ConsistencyReport forcing_consistency(const ManufacturedCase& c, int samples, std::uint64_t seed,
                                      double tol) {
  const int d = c.d;
  const int n = c.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  const double step = 1e-3;

  auto flux = [&](const Point& z) {
    const double w = std::pow(y_norm(z, d, n), c.a);
    const Point gu = c.grad_u(z);
    const Point Fz = eval_or_zero(c.F, z);
    const Mat3 A = c.A.at(z);
    Point out{0, 0, 0};
    for (int i = 0; i < d; ++i) {
      double v = Fz[i];
      for (int j = 0; j < d; ++j) v += A(i, j) * gu[j];
      out[i] = w * v;
    }
    return out;
  };

  ConsistencyReport rep;
  double scale = 0.0;
  int taken = 0;
  while (taken < samples) {
    Point z{0, 0, 0};
    for (int k = 0; k < d; ++k) z[k] = U(rng);
    if (y_norm(z, d, n) < 0.1) continue;
    ++taken;
    double div = 0.0;
    for (int k = 0; k < d; ++k) {
      auto shifted = [&](double s) {
        Point p = z;
        p[k] += s * step;
        return flux(p)[k];
      };
      div += (-shifted(2) + 8 * shifted(1) - 8 * shifted(-1) + shifted(-2)) / (12 * step);
    }
    const double w = std::pow(y_norm(z, d, n), c.a);
    const double res = std::abs(-div - w * eval_or_zero(c.f, z));
    rep.max_residual = std::max(rep.max_residual, res);
    const Point fl = flux(z);
    for (int k = 0; k < d; ++k) scale = std::max(scale, std::abs(fl[k]));
    scale = std::max(scale, std::abs(w * eval_or_zero(c.f, z)));

    const Point gu = c.grad_u(z);
    for (int k = 0; k < d; ++k) {
      Point zp = z, zm = z, zp2 = z, zm2 = z;
      zp[k] += step;
      zm[k] -= step;
      zp2[k] += 2 * step;
      zm2[k] -= 2 * step;
      const double fd = (-c.u(zp2) + 8 * c.u(zp) - 8 * c.u(zm) + c.u(zm2)) / (12 * step);
      rep.max_gradient_mismatch = std::max(rep.max_gradient_mismatch, std::abs(fd - gu[k]));
    }
  }
  rep.scale = std::max(scale, 1.0);
  rep.passed = rep.max_residual <= tol * rep.scale && rep.max_gradient_mismatch <= tol * rep.scale;
  return rep;
}

double exact_error(const Grid& grid, std::span<const double> uh, const ManufacturedCase& c,
                   ErrorNorm norm, QuadratureRule quad) {
  if (uh.size() != grid.num_nodes()) throw PreconditionError("exact_error: field/grid mismatch");
  if (norm == ErrorNorm::linf_half_ball) {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
      const Point z = grid.node(i);
      double r2 = 0.0;
      for (int k = 0; k < grid.dim(); ++k) r2 += z[k] * z[k];
      if (std::sqrt(r2) > 0.5 + 1e-12) continue;
      m = std::max(m, std::abs(uh[i] - c.u(z)));
    }
    return m;
  }
  CellIntegrator integ(grid, c.weight(), quad);
  const bool with_grad = norm == ErrorNorm::h1a;
  const int d = grid.dim();
  const double s = weighted_field_integral(
      integ, uh, Region::all(), [&](const Point& z, double v, const Point& g) {
        const double e = v - c.u(z);
        double out = e * e;
        if (with_grad) {
          const Point ge = c.grad_u(z);
          for (int k = 0; k < d; ++k) out += (g[k] - ge[k]) * (g[k] - ge[k]);
        }
        return out;
      });
  return std::sqrt(s);
}

}  // namespace degen
