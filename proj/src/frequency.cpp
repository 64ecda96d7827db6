#include "degen/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace degen {

RadialGauge::RadialGauge(const Matrix& M, int d) : M_(M), d_(d) {
  if (M.rows() != d || M.cols() != d) throw PreconditionError("radial gauge: matrix must be d x d");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  min_eig_ = es.eigenvalues()(0);
  if (!(min_eig_ > 0.0)) throw PreconditionError("radial gauge: matrix must be positive definite");
}

RadialGauge RadialGauge::ellipsoidal(const Matrix& A) {
  return RadialGauge(A.inverse(), static_cast<int>(A.rows()));
}

double RadialGauge::operator()(const Point& z) const {
  double s = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) s += M_(i, j) * z[i] * z[j];
  return std::sqrt(std::max(s, 0.0));
}

std::pair<double, double> RadialGauge::range(const Point& lo, double h) const {
  double hi = 0.0;
  for (int c = 0; c < (1 << d_); ++c) {
    Point z = lo;
    for (int k = 0; k < d_; ++k)
      if ((c >> k) & 1) z[k] += h;
    hi = std::max(hi, (*this)(z));
  }
  double m2 = 0.0;
  for (int k = 0; k < d_; ++k) {
    const double t = std::clamp(0.0, lo[k], lo[k] + h);
    m2 += t * t;
  }
  return {std::sqrt(min_eig_ * m2), hi};
}

namespace {

struct LocalEval {
  double u;
  Point grad;
};

LocalEval eval_local(const Grid& grid, std::span<const double> field,
                     const std::array<std::size_t, 8>& nodes, const Point& t) {
  const int d = grid.dim();
  LocalEval e{0.0, {0, 0, 0}};
  for (int j = 0; j < grid.nodes_per_cell(); ++j) {
    const double fv = field[nodes[j]];
    e.u += fv * q1_shape(d, j, t);
    const Point gj = q1_shape_grad(d, j, t, grid.h());
    for (int k = 0; k < d; ++k) e.grad[k] += fv * gj[k];
  }
  return e;
}

double gamma_of(const WeightSpec& w) { return w.model_exponent(); }

void require_full_codim(const Grid& grid, const char* what) {
  if (grid.dim() != grid.codim())
    throw PreconditionError(std::string(what) + ": requires n = d");
}

}  // namespace

double radial_band_integral(const CellIntegrator& integ, std::span<const double> field,
                            const RadialGauge& rho, double r_lo, double r_hi,
                            const FieldIntegrand& g, int refine) {
  const Grid& grid = integ.grid();
  if (field.size() != grid.num_nodes()) throw PreconditionError("band integral: field/grid mismatch");
  const int d = grid.dim();
  const double h = grid.h();
  const Rule1D gl = gauss_legendre(integ.rule().gauss_order);
  const int q1 = static_cast<int>(gl.x.size());
  const double sub = 1.0 / refine;

  std::vector<QuadPoint> pts;
  std::vector<Point> loc;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point lo = grid.cell_lower(c);
    const auto [rmin, rmax] = rho.range(lo, h);
    if (rmax < r_lo || rmin >= r_hi) continue;
    const bool inside = rmin >= r_lo && rmax < r_hi;
    const auto nodes = grid.cell_nodes(c);
    double s = 0.0;
    if (inside || integ.touches_singular(c)) {
      integ.weighted_points_local(c, pts, loc);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        if (!inside) {
          const double r = rho(pts[q].z);
          if (r < r_lo || r >= r_hi) continue;
        }
        const LocalEval e = eval_local(grid, field, nodes, loc[q]);
        s += pts[q].measure * g(pts[q].z, e.u, e.grad);
      }
    } else {
      int total_sub = 1;
      for (int k = 0; k < d; ++k) total_sub *= refine;
      int per = 1;
      for (int k = 0; k < d; ++k) per *= q1;
      for (int sc = 0; sc < total_sub; ++sc) {
        std::array<int, 3> sm{0, 0, 0};
        int rem = sc;
        for (int k = d - 1; k >= 0; --k) {
          sm[k] = rem % refine;
          rem /= refine;
        }
        for (int qi = 0; qi < per; ++qi) {
          Point t{0, 0, 0};
          double wq = 1.0;
          int r2 = qi;
          for (int k = d - 1; k >= 0; --k) {
            const int j = r2 % q1;
            r2 /= q1;
            t[k] = (sm[k] + gl.x[j]) * sub;
            wq *= gl.w[j] * sub * h;
          }
          Point z = lo;
          for (int k = 0; k < d; ++k) z[k] += t[k] * h;
          const double r = rho(z);
          if (r < r_lo || r >= r_hi) continue;
          const LocalEval e = eval_local(grid, field, nodes, t);
          s += wq * weight_eval(integ.weight(), z) * g(z, e.u, e.grad);
        }
      }
    }
    total += s;
  }
  return total;
}

FrequencyProfile frequency_profile(const CellIntegrator& integ, std::span<const double> u,
                                   const Matrix& A, const std::vector<double>& radii,
                                   double shell, int refine) {
  const Grid& grid = integ.grid();
  require_full_codim(grid, "frequency_profile");
  const int d = grid.dim();
  if (A.rows() != d || A.cols() != d) throw PreconditionError("frequency_profile: A must be d x d");
  if (radii.empty()) throw PreconditionError("frequency_profile: no radii");
  const double D = shell > 0.0 ? shell : grid.h();
  const RadialGauge rho = RadialGauge::ellipsoidal(A);
  if (refine <= 0) refine = d == 2 ? 16 : 4;

  for (double r : radii) {
    if (!(r - 0.5 * D > 0.0)) throw PreconditionError("frequency_profile: empty shell at a radius");
    for (int k = 0; k < d; ++k) {
      const double ext = (r + 0.5 * D) * std::sqrt(A(k, k));
      const auto& b = grid.spec().bounds[k];
      if (ext > b.hi + 1e-12 || -ext < b.lo - 1e-12)
        throw PreconditionError("frequency_profile: ellipsoid leaves the grid at r = " + std::to_string(r));
    }
  }

  FrequencyProfile p;
  p.A = A;
  p.a = integ.weight().a;
  p.n = grid.codim();
  p.shell = D;
  p.radii = radii;
  const double a = p.a;
  const int n = p.n;
  auto energy_density = [&](const Point&, double, const Point& g) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += A(i, j) * g[i] * g[j];
    return s;
  };
  auto mass_density = [](const Point&, double v, const Point&) { return v * v; };
  for (double r : radii) {
    const double Er = radial_band_integral(integ, u, rho, 0.0, r, energy_density, refine);
    const double Hr = radial_band_integral(integ, u, rho, r - 0.5 * D, r + 0.5 * D, mass_density, refine) / D;
    p.E_raw.push_back(Er);
    p.H_raw.push_back(Hr);
    const double E = std::pow(r, -(n + a - 2.0)) * Er;
    const double H = std::pow(r, -(n + a - 1.0)) * Hr;
    p.E.push_back(E);
    p.H.push_back(H);
    p.N.push_back(H > 0.0 ? E / H : std::numeric_limits<double>::quiet_NaN());
  }
  return p;
}

IdentityCheck check_derivative_identity(const FrequencyProfile& p, double tol) {
  const std::size_t m = p.radii.size();
  if (m < 5) throw PreconditionError("derivative identity: need at least 5 radii");
  const double step = p.radii[1] - p.radii[0];
  for (std::size_t i = 1; i < m; ++i)
    if (std::abs(p.radii[i] - p.radii[i - 1] - step) > 1e-9 * std::max(1.0, std::abs(step)))
      throw PreconditionError("derivative identity: radii must be uniformly spaced");
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(p.H[i]) / p.radii[i]);

  IdentityCheck out;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double dH = (p.H[i + 1] - p.H[i - 1]) / (p.radii[i + 1] - p.radii[i - 1]);
    const double target = 2.0 * p.E[i] / p.radii[i];
    const double den = std::max(std::abs(target), 1e-9 * scale);
    const double rel = den > 0.0 ? std::abs(dH - target) / den : 0.0;
    out.radii.push_back(p.radii[i]);
    out.dH.push_back(dH);
    out.two_E_over_r.push_back(target);
    out.max_relative_error = std::max(out.max_relative_error, rel);
  }
  out.passed = out.max_relative_error <= tol;
  return out;
}

SpectralMargin spectral_trace_check(const CellIntegrator& integ, const DomainMask& mask,
                                    std::span<const double> v, const Matrix& A, double r,
                                    double tol) {
  const Grid& grid = integ.grid();
  require_full_codim(grid, "spectral_trace_check");
  if (v.size() != grid.num_nodes() || mask.cls.size() != grid.num_nodes())
    throw PreconditionError("spectral_trace_check: field/mask/grid mismatch");
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask.constrained(i) && !mask.on_outer[i] && std::abs(v[i]) > 1e-14 * vmax)
      throw PreconditionError("spectral_trace_check: v must vanish on the hole");

  const FrequencyProfile p = frequency_profile(integ, v, A, {r});
  const double gamma = gamma_of(integ.weight());
  SpectralMargin m;
  m.E_raw = p.E_raw[0];
  m.H_raw = p.H_raw[0];
  const double trace = gamma / r * m.H_raw;
  m.margin = m.E_raw - trace;
  m.scale = m.E_raw + trace;
  m.relative = trace > 0.0 ? m.margin / trace : 0.0;
  m.passed = m.margin >= -tol * m.scale;
  return m;
}

Field extremal_field(const Grid& grid, const Matrix& A, double a, double eps) {
  require_full_codim(grid, "extremal_field");
  const WeightSpec w(a, grid.dim(), grid.codim());
  const double gamma = w.model_exponent();
  const RadialGauge rho = RadialGauge::ellipsoidal(A);
  Field out(grid.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = rho(grid.node(i));
    const double ramp = eps > 0.0 ? std::clamp((r - eps) / eps, 0.0, 1.0) : 1.0;
    out[i] = ramp * std::pow(r, gamma);
  }
  return out;
}

namespace {

struct TrigField {
  std::vector<double> c;
  std::vector<Point> omega;
  std::vector<double> theta;

  double operator()(const Point& z, int d) const {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      double arg = theta[j];
      for (int k = 0; k < d; ++k) arg += omega[j][k] * z[k];
      s += c[j] * std::cos(arg);
    }
    return s;
  }
};

std::vector<TrigField> draw_trig_fields(int count, int d, std::uint64_t seed, int modes = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> C(-1.0, 1.0);
  std::uniform_real_distribution<double> W(-3.0, 3.0);
  std::uniform_real_distribution<double> T(0.0, 2.0 * std::numbers::pi);
  std::vector<TrigField> out(count);
  for (auto& f : out) {
    for (int j = 0; j < modes; ++j) {
      f.c.push_back(C(rng));
      Point w{0, 0, 0};
      for (int k = 0; k < d; ++k) w[k] = W(rng);
      f.omega.push_back(w);
      f.theta.push_back(T(rng));
    }
  }
  return out;
}

}  // namespace

std::vector<Field> random_admissible_fields(const Grid& grid, int count, std::uint64_t seed,
                                            double eps, double ramp_width) {
  const int d = grid.dim();
  const auto trig = draw_trig_fields(count, d, seed);
  std::vector<Field> out;
  out.reserve(count);
  for (const auto& t : trig) {
    Field f(grid.num_nodes());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Point z = grid.node(i);
      const double ramp = std::clamp((grid.y_norm(z) - eps) / ramp_width, 0.0, 1.0);
      f[i] = ramp * t(z, d);
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string to_string(GrowthFamily f) {
  switch (f) {
    case GrowthFamily::homogeneous: return "homogeneous";
    case GrowthFamily::subcritical: return "subcritical";
    case GrowthFamily::zero: return "zero";
  }
  return "?";
}

GrowthFamily growth_family_from(const std::string& name) {
  if (name == "homogeneous") return GrowthFamily::homogeneous;
  if (name == "subcritical") return GrowthFamily::subcritical;
  if (name == "zero") return GrowthFamily::zero;
  throw PreconditionError("unknown growth data family '" + name + "'");
}

GrowthRecord growth_validator(const GrowthConfig& cfg) {
  const int d = cfg.grid.d;
  const int n = cfg.grid.n;
  if (d != n) throw PreconditionError("growth_validator: requires n = d");
  const Matrix A = cfg.A.size() ? cfg.A : Matrix::Identity(d, d);
  const WeightSpec w(cfg.a, d, n);
  const double gamma = w.model_exponent();
  const RadialGauge rho = RadialGauge::ellipsoidal(A);

  ProblemSpec spec;
  spec.grid = cfg.grid;
  spec.weight = w;
  spec.A = CoefficientField::constant(A);
  spec.quad = cfg.quad;
  spec.solver = cfg.solver;
  spec.psi = [](const Point&) { return 0.0; };
  switch (cfg.family) {
    case GrowthFamily::homogeneous:
      spec.g = [rho, gamma](const Point& z) { return std::pow(rho(z), gamma); };
      break;
    case GrowthFamily::subcritical:
      spec.g = [d, n](const Point& z) { return std::pow(y_norm(z, d, n), 0.5); };
      break;
    case GrowthFamily::zero:
      spec.g = [](const Point&) { return 0.0; };
      break;
  }
  const SolveResult sol = solve(spec);
  CellIntegrator integ(sol.grid, w, cfg.quad);

  std::vector<double> radii = cfg.radii;
  if (radii.empty()) {
    double reach = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k)
      reach = std::min(reach, std::min(-cfg.grid.bounds[k].lo, cfg.grid.bounds[k].hi) / std::sqrt(A(k, k)));
    const double rmax = 0.75 * reach;
    for (int i = 0; i <= 10; ++i) radii.push_back(cfg.r0 + (rmax - cfg.r0) * i / 10.0);
  }
  std::vector<double> all{cfg.r0};
  all.insert(all.end(), radii.begin(), radii.end());
  const FrequencyProfile p = frequency_profile(integ, sol.u, A, all);

  GrowthRecord rec;
  rec.gamma = gamma;
  rec.r0 = cfg.r0;
  rec.radii = radii;
  const double H0 = p.H[0];
  rec.H.assign(p.H.begin() + 1, p.H.end());
  if (!(H0 > 0.0)) {
    rec.degenerate = true;
    rec.bound.assign(radii.size(), 0.0);
    rec.passed = true;
    return rec;
  }
  rec.passed = true;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double b = H0 * std::pow(radii[i] / cfg.r0, 2.0 * gamma) * (1.0 - cfg.tol);
    rec.bound.push_back(b);
    if (rec.H[i] < b) rec.passed = false;
  }
  return rec;
}

std::string to_string(InequalityId id) {
  switch (id) {
    case InequalityId::hardy: return "hardy";
    case InequalityId::poincare: return "poincare";
    case InequalityId::trace_poincare: return "trace_poincare";
    case InequalityId::sobolev: return "sobolev";
    case InequalityId::caccioppoli: return "caccioppoli";
    case InequalityId::moser: return "moser";
    case InequalityId::spectral_trace: return "spectral_trace";
  }
  return "?";
}

std::vector<InequalityRecord> inequality_battery(const CellIntegrator& integ, const DomainMask& mask,
                                                 const std::vector<Field>& fields, double R) {
  const Grid& grid = integ.grid();
  const int d = grid.dim();
  const int n = grid.codim();
  const double p = sobolev_exponent(d).value_or(4.0);
  const RadialGauge ball = RadialGauge::euclidean(d);
  const double D = grid.h();
  std::vector<InequalityRecord> out;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const Field& v = fields[f];
    if (v.size() != grid.num_nodes()) throw PreconditionError("inequality_battery: field/grid mismatch");
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (vmax == 0.0) continue;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mask.constrained(i) && !mask.on_outer[i] && std::abs(v[i]) > 1e-14 * vmax)
        throw PreconditionError("inequality_battery: field " + std::to_string(f) +
                                " does not vanish on the hole");

    const double dirichlet = radial_band_integral(
        integ, v, ball, 0.0, R, [d](const Point&, double, const Point& g) {
          double s = 0.0;
          for (int k = 0; k < d; ++k) s += g[k] * g[k];
          return s;
        });
    const double hardy = radial_band_integral(
        integ, v, ball, 0.0, R, [d, n](const Point& z, double u, const Point&) {
          const double r = y_norm(z, d, n);
          return u * u / (r * r);
        });
    const double mass =
        radial_band_integral(integ, v, ball, 0.0, R, [](const Point&, double u, const Point&) { return u * u; });
    const double trace = radial_band_integral(integ, v, ball, R - 0.5 * D, R + 0.5 * D,
                                              [](const Point&, double u, const Point&) { return u * u; }) /
                         D;
    const double lp = radial_band_integral(integ, v, ball, 0.0, R, [p](const Point&, double u, const Point&) {
      return std::pow(std::abs(u), p);
    });
    auto ratio = [&](double lhs) {
      return dirichlet > 0.0 ? lhs / dirichlet : std::numeric_limits<double>::infinity();
    };
    const int id = static_cast<int>(f);
    out.push_back({InequalityId::hardy, id, ratio(hardy)});
    out.push_back({InequalityId::poincare, id, ratio(mass)});
    out.push_back({InequalityId::trace_poincare, id, ratio(trace)});
    out.push_back({InequalityId::sobolev, id, ratio(std::pow(lp, 2.0 / p))});
  }
  return out;
}

std::vector<InequalitySummary> summarize(const std::vector<InequalityRecord>& records) {
  std::vector<InequalitySummary> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.id == r.id; });
    if (it == out.end()) {
      out.push_back({r.id, 0.0, true});
      it = out.end() - 1;
    }
    if (!std::isfinite(r.ratio) || r.ratio < 0.0) it->finite = false;
    it->max_ratio = std::max(it->max_ratio, r.ratio);
  }
  return out;
}

std::vector<Field> battery_fields(const Grid& grid, int count, std::uint64_t seed, double eps) {
  const int d = grid.dim();
  std::vector<Field> out;
  if (count <= 0) return out;
  Field first(grid.num_nodes());
  for (std::size_t i = 0; i < first.size(); ++i) {
    const Point z = grid.node(i);
    double m = 0.0;
    for (int k = 0; k < d; ++k) m = std::max(m, std::abs(z[k]));
    first[i] = std::clamp((grid.y_norm(z) - eps) / 0.25, 0.0, 1.0) * (1.0 - m);
  }
  out.push_back(std::move(first));
  auto rest = random_admissible_fields(grid, count - 1, seed, eps);
  for (auto& f : rest) out.push_back(std::move(f));
  return out;
}

std::vector<StabilityRow> inequality_refinement(int d, int n, double a, int nodes, int count,
                                                std::uint64_t seed, double R, QuadratureRule quad) {
  const WeightSpec w(a, d, n);
  std::vector<InequalitySummary> sums[2];
  for (int level = 0; level < 2; ++level) {
    const int N = level == 0 ? nodes : 2 * nodes - 1;
    const Grid grid(GridSpec::cube(d, n, N, 1.0));
    const DomainMask mask = classify_nodes(grid, DomainShape::box, 0.0);
    const CellIntegrator integ(grid, w, quad);
    sums[level] = summarize(inequality_battery(integ, mask, battery_fields(grid, count, seed), R));
  }
  std::vector<StabilityRow> out;
  for (std::size_t i = 0; i < sums[0].size(); ++i) {
    StabilityRow row{sums[0][i].id, sums[0][i].max_ratio, sums[1][i].max_ratio, 0.0};
    row.relative_change = std::abs(row.fine - row.coarse) / std::max(std::abs(row.coarse), 1e-300);
    if (!sums[0][i].finite || !sums[1][i].finite) row.relative_change = std::numeric_limits<double>::infinity();
    out.push_back(row);
  }
  return out;
}

double caccioppoli_ratio(const CellIntegrator& integ, std::span<const double> u, const ScalarFn& f,
                         const VectorFn& F, double R1, double R2) {
  if (!(0.0 < R1 && R1 < R2)) throw PreconditionError("caccioppoli_ratio: need 0 < R1 < R2");
  const int d = integ.grid().dim();
  const RadialGauge ball = RadialGauge::euclidean(d);
  const double lhs = radial_band_integral(integ, u, ball, 0.0, R1, [d](const Point&, double, const Point& g) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += g[k] * g[k];
    return s;
  });
  const double mass =
      radial_band_integral(integ, u, ball, 0.0, R2, [](const Point&, double v, const Point&) { return v * v; });
  const double fnorm2 = radial_band_integral(integ, u, ball, 0.0, R2, [&](const Point& z, double, const Point&) {
    const double fz = eval_or_zero(f, z);
    return fz * fz;
  });
  const double Fterm = radial_band_integral(integ, u, ball, 0.0, R2, [&](const Point& z, double v, const Point&) {
    if (v == 0.0) return 0.0;
    const Point Fz = eval_or_zero(F, z);
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += Fz[k] * Fz[k];
    return s;
  });
  const double rhs = mass / ((R2 - R1) * (R2 - R1)) + std::sqrt(fnorm2) * std::sqrt(mass) + Fterm;
  if (rhs == 0.0) return 0.0;
  return lhs / rhs;
}

double moser_ratio(const CellIntegrator& integ, std::span<const double> u, const ScalarFn& f,
                   const VectorFn& F, double r, double R) {
  if (!(0.0 < r && r < R)) throw PreconditionError("moser_ratio: need 0 < r < R");
  const Grid& grid = integ.grid();
  const int d = grid.dim();
  const RadialGauge ball = RadialGauge::euclidean(d);
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.num_nodes(); ++i)
    if (ball(grid.node(i)) <= r) sup = std::max(sup, std::abs(u[i]));
  const double l2 = std::sqrt(
      radial_band_integral(integ, u, ball, 0.0, R, [](const Point&, double v, const Point&) { return v * v; }));
  const double fl2 = std::sqrt(radial_band_integral(integ, u, ball, 0.0, R, [&](const Point& z, double, const Point&) {
    const double fz = eval_or_zero(f, z);
    return fz * fz;
  }));
  const double Fl4 = std::pow(radial_band_integral(integ, u, ball, 0.0, R, [&](const Point& z, double, const Point&) {
                                const Point Fz = eval_or_zero(F, z);
                                double s = 0.0;
                                for (int k = 0; k < d; ++k) s += Fz[k] * Fz[k];
                                return s * s;
                              }),
                              0.25);
  const double den = l2 + fl2 + Fl4;
  if (den == 0.0) return 0.0;
  return sup / den;
}

}  // namespace degen
