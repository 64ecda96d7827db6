#include "degen/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace degen {

Point Lattice::point(std::size_t idx) const {
  Point p = origin;
  for (int k = d - 1; k >= 0; --k) {
    const int i = static_cast<int>(idx % size[k]);
    idx /= size[k];
    p[k] = origin[k] + i * spacing;
  }
  return p;
}

Lattice Lattice::nodes(const Grid& grid, std::span<const double> field) {
  if (field.size() != grid.num_nodes()) throw PreconditionError("lattice: field/grid mismatch");
  Lattice l;
  l.d = grid.dim();
  for (int k = 0; k < l.d; ++k) {
    l.size[k] = grid.nodes_per_axis();
    l.origin[k] = grid.spec().bounds[k].lo;
  }
  l.spacing = grid.h();
  l.values.assign(field.begin(), field.end());
  return l;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sliding max (or min) with window w along one axis; the axis shrinks by w-1.
std::vector<double> slide(const std::vector<double>& a, std::array<int, 3>& s, int d, int axis, int w,
                          bool take_max) {
  std::array<int, 3> out_s = s;
  out_s[axis] = s[axis] - w + 1;
  std::size_t inner = 1;
  for (int k = axis + 1; k < d; ++k) inner *= s[k];
  std::size_t outer = 1;
  for (int k = 0; k < axis; ++k) outer *= s[k];
  const int len = s[axis];
  const int olen = out_s[axis];
  std::vector<double> out(outer * olen * inner);
  std::deque<int> q;
  auto better = [take_max](double x, double y) { return take_max ? x >= y : x <= y; };
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      const std::size_t obase = o * olen * inner + in;
      q.clear();
      for (int i = 0; i < len; ++i) {
        const double v = a[base + i * inner];
        while (!q.empty() && better(v, a[base + q.back() * inner])) q.pop_back();
        q.push_back(i);
        if (q.front() <= i - w) q.pop_front();
        if (i >= w - 1) out[obase + (i - w + 1) * inner] = a[base + q.front() * inner];
      }
    }
  }
  s = out_s;
  return out;
}

}  // namespace

OscillationProfile oscillation_profile(const Lattice& lat, const std::vector<double>& scales,
                                       double region_radius) {
  const int d = lat.d;
  std::vector<double> hi(lat.values.size());
  std::vector<double> lo(lat.values.size());
  for (std::size_t i = 0; i < lat.values.size(); ++i) {
    const Point p = lat.point(i);
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += p[k] * p[k];
    const bool in = std::sqrt(r2) <= region_radius + 1e-12;
    hi[i] = in ? lat.values[i] : -kInf;
    lo[i] = in ? lat.values[i] : kInf;
  }
  OscillationProfile prof;
  for (double r : scales) {
    const int m = static_cast<int>(std::lround(r / lat.spacing));
    if (m < 1) throw PreconditionError("oscillation_profile: scale below lattice spacing");
    std::array<int, 3> sh = lat.size;
    std::array<int, 3> sl = lat.size;
    bool fits = true;
    for (int k = 0; k < d; ++k) fits = fits && lat.size[k] > m;
    if (!fits) throw PreconditionError("oscillation_profile: scale larger than the lattice");
    std::vector<double> H = hi;
    std::vector<double> L = lo;
    for (int k = 0; k < d; ++k) {
      H = slide(H, sh, d, k, m + 1, true);
      L = slide(L, sl, d, k, m + 1, false);
    }
    double osc = 0.0;
    for (std::size_t i = 0; i < H.size(); ++i)
      if (H[i] > -kInf) osc = std::max(osc, H[i] - L[i]);
    prof.scales.push_back(m * lat.spacing);
    prof.oscillation.push_back(osc);
  }
  return prof;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double* residual) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) throw PreconditionError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  const double slope = den != 0.0 ? (m * sxy - sx * sy) / den : 0.0;
  if (residual) {
    const double icpt = (sy - slope * sx) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = std::log(y[i]) - (icpt + slope * std::log(x[i]));
      ss += e * e;
    }
    *residual = std::sqrt(ss / m);
  }
  return slope;
}

std::vector<double> fit_scales(double spacing, double r_max, double floor_mult) {
  std::vector<double> out;
  const int floor_m = static_cast<int>(std::ceil(floor_mult - 1e-9));
  for (int k = 0;; ++k) {
    const double r = r_max * std::pow(2.0, -0.5 * k);
    const int m = static_cast<int>(std::lround(r / spacing));
    if (m < floor_m) break;
    const double s = m * spacing;
    if (out.empty() || std::abs(out.back() - s) > 1e-12) out.push_back(s);
  }
  if (out.size() < 4)
    throw PreconditionError("holder fit: fewer than 4 scales between 4h and 0.25; refine the grid");
  return out;
}

RateReport holder_exponent_fit(const Lattice& lat, double region_radius) {
  RateReport rep;
  const auto scales = fit_scales(lat.spacing);
  rep.profile = oscillation_profile(lat, scales, region_radius);
  rep.fit_lo = scales.back();
  rep.fit_hi = scales.front();
  rep.scales_used = scales.size();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (rep.profile.oscillation[i] > 0.0) {
      xs.push_back(rep.profile.scales[i]);
      ys.push_back(rep.profile.oscillation[i]);
    }
  if (xs.size() < 2) {
    // constant field: no oscillation at any scale
    rep.raw_slope = rep.cap;
    rep.exponent = rep.cap;
    rep.capped = true;
    return rep;
  }
  rep.raw_slope = loglog_slope(xs, ys, &rep.residual);
  rep.exponent = std::clamp(rep.raw_slope, 0.0, rep.cap);
  rep.capped = rep.raw_slope >= rep.cap;
  return rep;
}

RateReport holder_exponent_fit(const Grid& grid, std::span<const double> field, double region_radius) {
  return holder_exponent_fit(Lattice::nodes(grid, field), region_radius);
}

RateReport gradient_holder_fit(const Grid& grid, std::span<const double> field, double region_radius) {
  if (field.size() != grid.num_nodes()) throw PreconditionError("gradient fit: field/grid mismatch");
  const int d = grid.dim();
  std::vector<Lattice> comps(d);
  for (int k = 0; k < d; ++k) {
    comps[k].d = d;
    for (int j = 0; j < d; ++j) {
      comps[k].size[j] = grid.cells_per_axis();
      comps[k].origin[j] = grid.spec().bounds[j].lo + 0.5 * grid.h();
    }
    comps[k].spacing = grid.h();
    comps[k].values.resize(grid.num_cells());
  }
  const Point mid{0.5, 0.5, 0.5};
  double scale = 0.0;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point g = cell_gradient(grid, field, c, mid);
    for (int k = 0; k < d; ++k) {
      comps[k].values[c] = g[k];
      scale = std::max(scale, std::abs(g[k]));
    }
  }

  RateReport best;
  bool have = false;
  for (int k = 0; k < d; ++k) {
    const auto [mn, mx] = std::minmax_element(comps[k].values.begin(), comps[k].values.end());
    if (*mx - *mn <= 1e-10 * std::max(scale, 1.0)) continue;
    RateReport r = holder_exponent_fit(comps[k], region_radius);
    r.non_c1 = r.raw_slope <= 0.1;
    if (!have || r.raw_slope < best.raw_slope) best = r;
    have = true;
  }
  if (!have) {
    best = holder_exponent_fit(comps[0], region_radius);
    best.non_c1 = false;
  }
  return best;
}

EpsilonSweep epsilon_sweep(const ProblemSpec& spec, const std::vector<double>& schedule) {
  const Grid grid(spec.grid);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > grid.h() && schedule[i] < 0.5))
      throw PreconditionError("epsilon_sweep: schedule must lie in (h, 0.5)");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw PreconditionError("epsilon_sweep: schedule must be strictly decreasing");
  }
  ProblemSpec s0 = spec;
  s0.eps = 0.0;
  const SolveResult r0 = solve(s0);
  CellIntegrator integ(r0.grid, spec.weight, spec.quad);
  const Region all = Region::all();

  EpsilonSweep out;
  out.u0 = r0.u;
  out.u0_norm = weighted_h1_norm(integ, r0.u, all).value;
  const int d = grid.dim();
  const double fn = spec.f ? weighted_function_lp(integ, all, 2.0, spec.f) : 0.0;
  const double Fn = spec.F ? weighted_function_lp(integ, all, 2.0, [&](const Point& z) {
    const Point v = spec.F(z);
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += v[k] * v[k];
    return std::sqrt(s);
  })
                           : 0.0;
  out.data_norm = out.u0_norm + fn + Fn;

  for (double eps : schedule) {
    ProblemSpec se = spec;
    se.eps = eps;
    const SolveResult r = solve(se);
    Field diff(r.u.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = r.u[i] - r0.u[i];
    SweepRow row;
    row.eps = eps;
    row.norm_h1 = weighted_h1_norm(integ, r.u, all).value;
    row.diff_h1 = weighted_h1_norm(integ, diff, all).value;
    row.relative_residual = r.relative_residual;
    row.iterations = r.iterations;
    out.rows.push_back(row);
    out.fields.push_back(r.u);
    if (out.data_norm > 0.0) out.bound_ratio = std::max(out.bound_ratio, row.norm_h1 / out.data_norm);
  }
  return out;
}

ConormalRow hole_boundary_trace(const Grid& grid, const DomainMask& mask, std::span<const double> u,
                                const CoefficientField& A, const VectorFn& F) {
  const int d = grid.dim();
  const int n = grid.codim();
  const double h = grid.h();
  const int N = grid.nodes_per_axis();
  ConormalRow row;
  row.eps = mask.eps;
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    if (mask.cls[i] != NodeClass::interior) continue;
    const auto m = grid.node_multi(i);
    bool adjacent = false;
    std::array<std::size_t, 3> plus{}, minus{};
    std::array<bool, 3> has_p{}, has_m{};
    for (int k = 0; k < d; ++k) {
      auto mp = m, mm = m;
      ++mp[k];
      --mm[k];
      has_p[k] = mp[k] < N;
      has_m[k] = mm[k] >= 0;
      if (has_p[k]) {
        plus[k] = grid.node_index(mp);
        adjacent = adjacent || mask.cls[plus[k]] == NodeClass::hole_constrained;
      }
      if (has_m[k]) {
        minus[k] = grid.node_index(mm);
        adjacent = adjacent || mask.cls[minus[k]] == NodeClass::hole_constrained;
      }
    }
    if (!adjacent) continue;
    Point g{0, 0, 0};
    for (int k = 0; k < d; ++k) {
      const bool p_free = has_p[k] && mask.cls[plus[k]] != NodeClass::hole_constrained;
      const bool m_free = has_m[k] && mask.cls[minus[k]] != NodeClass::hole_constrained;
      if (p_free && m_free)
        g[k] = (u[plus[k]] - u[minus[k]]) / (2 * h);
      else if (p_free)
        g[k] = (u[plus[k]] - u[i]) / h;
      else if (m_free)
        g[k] = (u[i] - u[minus[k]]) / h;
    }
    const Point z = grid.node(i);
    double gn = 0.0;
    for (int k = 0; k < d; ++k) gn += g[k] * g[k];
    row.max_grad = std::max(row.max_grad, std::sqrt(gn));
    const Mat3 Az = A.at(z);
    const Point Fz = eval_or_zero(F, z);
    const double r = y_norm(z, d, n);
    double flux = 0.0;
    for (int k = d - n; k < d; ++k) {
      double v = Fz[k];
      for (int j = 0; j < d; ++j) v += Az(k, j) * g[j];
      flux += v * z[k] / r;
    }
    row.max_flux = std::max(row.max_flux, std::abs(flux));
    ++row.nodes;
  }
  return row;
}

ConormalTrace conormal_decay(const ProblemSpec& spec, const std::vector<double>& schedule) {
  const double an = spec.weight.a + spec.weight.n;
  if (!(an > 0.0 && an < 1.0)) throw PreconditionError("conormal_decay: requires a+n in (0,1)");
  if (schedule.size() < 2) throw PreconditionError("conormal_decay: need at least two eps values");
  const Grid grid(spec.grid);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > grid.h() && schedule[i] < 0.5))
      throw PreconditionError("conormal_decay: schedule must lie in (h, 0.5)");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw PreconditionError("conormal_decay: schedule must be strictly decreasing");
  }
  ConormalTrace tr;
  std::vector<double> e, g, f;
  for (double eps : schedule) {
    ProblemSpec s = spec;
    s.eps = eps;
    const SolveResult r = solve(s);
    ConormalRow row = hole_boundary_trace(r.grid, r.mask, r.u, spec.A, spec.F);
    tr.rows.push_back(row);
    e.push_back(eps);
    g.push_back(std::max(row.max_grad, 1e-300));
    f.push_back(std::max(row.max_flux, 1e-300));
  }
  tr.rate = loglog_slope(e, g);
  tr.flux_rate = loglog_slope(e, f);
  return tr;
}

std::vector<BandRow> limiting_bc_residual(const Grid& grid, std::span<const double> u,
                                          const ProblemSpec& spec, const std::vector<double>& bands,
                                          double x_window) {
  const int d = grid.dim();
  const int n = grid.codim();
  const double an = spec.weight.a + n;
  if (!(an > 0.0 && an < 1.0)) throw PreconditionError("limiting_bc_residual: requires a+n in (0,1)");
  if (u.size() != grid.num_nodes()) throw PreconditionError("limiting_bc_residual: field/grid mismatch");
  const int dx = d - n;
  const Point mid{0.5, 0.5, 0.5};
  std::vector<BandRow> rows(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) rows[b].band = bands[b];
  const double rmax = bands.empty() ? 0.0 : *std::max_element(bands.begin(), bands.end());

  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point z = grid.cell_center(c);
    const double r = y_norm(z, d, n);
    if (r > rmax) continue;
    bool in = true;
    for (int k = 0; k < dx; ++k) in = in && std::abs(z[k]) <= x_window;
    if (!in) continue;
    const Point g = cell_gradient(grid, u, c, mid);
    const Mat3 Az = spec.A.at(z);
    const Point Fz = eval_or_zero(spec.F, z);
    double normal = 0.0;
    for (int i = dx; i < d; ++i) {
      double v = Fz[i];
      for (int j = 0; j < d; ++j) v += Az(i, j) * g[j];
      normal = std::max(normal, std::abs(v));
    }
    double xres = 0.0;
    if (dx > 0) {
      Point x0 = z;
      for (int k = dx; k < d; ++k) x0[k] = 0.0;
      for (int k = 0; k < dx; ++k) {
        double dpsi = 0.0;
        if (spec.psi) {
          const double step = 1e-6;
          Point zp = x0, zm = x0;
          zp[k] += step;
          zm[k] -= step;
          dpsi = (spec.psi(zp) - spec.psi(zm)) / (2 * step);
        }
        xres = std::max(xres, std::abs(g[k] - dpsi));
      }
    }
    for (auto& row : rows) {
      if (r > row.band) continue;
      row.normal_residual = std::max(row.normal_residual, normal);
      row.x_residual = std::max(row.x_residual, xres);
      ++row.samples;
    }
  }
  return rows;
}

}  // namespace degen
