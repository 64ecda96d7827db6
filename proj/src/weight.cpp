#include "degen/weight.hpp"

#include <cmath>
#include <sstream>

namespace degen {

WeightSpec::WeightSpec(double a_, int d_, int n_) : a(a_), d(d_), n(n_) { validate(); }

WeightSpec WeightSpec::composed(double a, int d, int n, std::function<double(const Point&)> dt) {
  WeightSpec w(a, d, n);
  w.mode = WeightMode::composed;
  w.delta_tilde = std::move(dt);
  w.validate();
  return w;
}

void WeightSpec::validate() const {
  if (n < 2 || n > d || d > kMaxDim) throw PreconditionError("weight: need 2 <= n <= d <= 3");
  if (!(a + n > 0.0 && a + n < 2.0)) throw PreconditionError("a+n must lie in (0,2)");
  if (mode == WeightMode::composed && !delta_tilde)
    throw PreconditionError("weight: composed mode needs delta_tilde");
}

double weight_eval(const WeightSpec& w, const Point& z) {
  const double r = y_norm(z, w.d, w.n);
  if (!(r > 0.0)) throw std::domain_error("weight_eval: |y| = 0 requested");
  double v = std::pow(r, w.a);
  if (w.mode == WeightMode::composed) v *= std::pow(w.delta_tilde(z), w.a);
  return v;
}

Rule1D gauss_jacobi(int order, double beta) {
  if (order < 1) throw PreconditionError("gauss_jacobi: order must be >= 1");
  if (!(beta > -1.0)) throw PreconditionError("gauss_jacobi: beta must exceed -1");
  // Golub-Welsch on [-1,1] with weight (1+t)^beta, then map u = (1+t)/2.
  const double al = 0.0;
  const double be = beta;
  Matrix J = Matrix::Zero(order, order);
  for (int k = 0; k < order; ++k) {
    const double s = 2.0 * k + al + be;
    J(k, k) = k == 0 ? (be - al) / (al + be + 2.0) : (be * be - al * al) / (s * (s + 2.0));
    if (k + 1 < order) {
      const double kk = k + 1.0;
      const double t = 2.0 * kk + al + be;
      const double b = 4.0 * kk * (kk + al) * (kk + be) * (kk + al + be) /
                       (t * t * (t + 1.0) * (t - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  const double mu0 = std::pow(2.0, al + be + 1.0) * std::tgamma(al + 1.0) * std::tgamma(be + 1.0) /
                     std::tgamma(al + be + 2.0);
  Rule1D r;
  for (int i = 0; i < order; ++i) {
    const double t = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.x.push_back(0.5 * (1.0 + t));
    r.w.push_back(mu0 * v0 * v0 * std::pow(2.0, -be - 1.0));
  }
  return r;
}

Rule1D gauss_legendre(int order) { return gauss_jacobi(order, 0.0); }

namespace {

bool touches_origin(const Box& b, int d, int n) {
  for (int k = d - n; k < d; ++k) {
    const double tol = 1e-12 * b.size[k];
    if (!(std::abs(b.lo[k]) <= tol || std::abs(b.lo[k] + b.size[k]) <= tol)) return false;
  }
  return true;
}

}  // namespace

std::vector<Box> graded_leaves(const Box& cell, int d, int n, int depth) {
  std::vector<Box> out;
  Box cur = cell;
  cur.singular = touches_origin(cur, d, n);
  for (int level = 0; level < depth && cur.singular; ++level) {
    Box next;
    bool found = false;
    for (int c = 0; c < (1 << n); ++c) {
      Box child = cur;
      for (int j = 0; j < n; ++j) {
        const int k = d - n + j;
        child.size[k] = 0.5 * cur.size[k];
        child.lo[k] = cur.lo[k] + ((c >> j) & 1) * child.size[k];
      }
      child.singular = touches_origin(child, d, n);
      if (child.singular && !found) {
        next = child;
        found = true;
      } else {
        child.singular = false;
        out.push_back(child);
      }
    }
    cur = next;
  }
  out.push_back(cur);
  return out;
}

CellIntegrator::CellIntegrator(const Grid& grid, const WeightSpec& w, QuadratureRule rule)
    : grid_(&grid), w_(w), rule_(rule) {
  w_.validate();
  if (w_.d != grid.dim() || w_.n != grid.codim())
    throw PreconditionError("CellIntegrator: weight and grid dimensions differ");
  if (rule_.gauss_order < 1 || rule_.grading_depth < 0)
    throw PreconditionError("CellIntegrator: bad quadrature parameters");
  gl_ = gauss_legendre(rule_.gauss_order);
  gl_angle_ = gauss_legendre(rule_.gauss_order + 2);
  gj_ = gauss_jacobi(rule_.gauss_order + 1, w_.a + w_.n - 1.0);
}

bool CellIntegrator::touches_singular(std::size_t cell) const {
  Box b{grid_->cell_lower(cell), {grid_->h(), grid_->h(), grid_->h()}, false};
  return touches_origin(b, w_.d, w_.n);
}

void CellIntegrator::append_box(const Box& b, std::vector<QuadPoint>& out) const {
  const int d = w_.d;
  const int n = w_.n;
  const int dx = d - n;
  if (!b.singular) {
    const int q = static_cast<int>(gl_.x.size());
    int total = 1;
    for (int k = 0; k < d; ++k) total *= q;
    for (int s = 0; s < total; ++s) {
      Point z{0, 0, 0};
      double m = 1.0;
      int rem = s;
      for (int k = 0; k < d; ++k) {
        const int i = rem % q;
        rem /= q;
        z[k] = b.lo[k] + gl_.x[i] * b.size[k];
        m *= gl_.w[i] * b.size[k];
      }
      out.push_back({z, m * weight_eval(w_, z)});
    }
    return;
  }

  // Duffy collapse of the y-cube onto its singular corner: n pyramids, the
  // dominant axis carries u in [0,1], the others u*v_k.
  std::array<double, kMaxDim> sign{1, 1, 1};
  for (int k = dx; k < d; ++k) sign[k] = std::abs(b.lo[k]) <= 1e-12 * b.size[k] ? 1.0 : -1.0;
  const double s = b.size[d - 1];
  const int qx = static_cast<int>(gl_.x.size());
  const int qv = static_cast<int>(gl_angle_.x.size());
  const int qu = static_cast<int>(gj_.x.size());
  int xtotal = 1;
  for (int k = 0; k < dx; ++k) xtotal *= qx;
  int vtotal = 1;
  for (int k = 0; k < n - 1; ++k) vtotal *= qv;

  for (int xs = 0; xs < xtotal; ++xs) {
    Point base{0, 0, 0};
    double mx = 1.0;
    int rem = xs;
    for (int k = 0; k < dx; ++k) {
      const int i = rem % qx;
      rem /= qx;
      base[k] = b.lo[k] + gl_.x[i] * b.size[k];
      mx *= gl_.w[i] * b.size[k];
    }
    for (int dom = 0; dom < n; ++dom) {
      for (int iu = 0; iu < qu; ++iu) {
        const double u = gj_.x[iu];
        for (int vs = 0; vs < vtotal; ++vs) {
          Point z = base;
          double mv = 1.0;
          int vrem = vs;
          for (int j = 0; j < n; ++j) {
            const int k = dx + j;
            double eta;
            if (j == dom) {
              eta = u;
            } else {
              const int iv = vrem % qv;
              vrem /= qv;
              eta = u * gl_angle_.x[iv];
              mv *= gl_angle_.w[iv];
            }
            z[k] = sign[k] * s * eta;
          }
          // measure * |y|^a must equal W * V * s^(n+a) * (1+|v|^2)^(a/2)
          const double m = mx * gj_.w[iu] * mv * std::pow(s, n) * std::pow(u, -w_.a);
          out.push_back({z, m * weight_eval(w_, z)});
        }
      }
    }
  }
}

void CellIntegrator::weighted_points(std::size_t cell, std::vector<QuadPoint>& out) const {
  out.clear();
  const double h = grid_->h();
  Box b{grid_->cell_lower(cell), {h, h, h}, false};
  if (!touches_origin(b, w_.d, w_.n)) {
    append_box(b, out);
    return;
  }
  for (const auto& leaf : graded_leaves(b, w_.d, w_.n, rule_.grading_depth)) append_box(leaf, out);
}

void CellIntegrator::weighted_points_local(std::size_t cell, std::vector<QuadPoint>& out,
                                           std::vector<Point>& local) const {
  weighted_points(cell, out);
  const Point lo = grid_->cell_lower(cell);
  const double h = grid_->h();
  local.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Point t{0, 0, 0};
    for (int k = 0; k < w_.d; ++k) t[k] = (out[i].z[k] - lo[k]) / h;
    local[i] = t;
  }
}

double element_weighted_integral(const CellIntegrator& integ, std::size_t cell,
                                 const std::function<double(const Point&)>& integrand) {
  std::vector<QuadPoint> pts;
  integ.weighted_points(cell, pts);
  double s = 0.0;
  for (const auto& q : pts) s += q.measure * integrand(q.z);
  return s;
}

std::string Region::describe() const {
  if (kind == Kind::all) return "all";
  std::ostringstream os;
  os << "ball(" << radius << ")";
  return os.str();
}

std::vector<double> region_fractions(const Grid& grid, const Region& region, int subsamples) {
  std::vector<double> frac(grid.num_cells(), 1.0);
  if (region.kind == Region::Kind::all) return frac;
  const int d = grid.dim();
  const double h = grid.h();
  const double R = region.radius;
  int total = 1;
  for (int k = 0; k < d; ++k) total *= subsamples;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point lo = grid.cell_lower(c);
    double near2 = 0.0;
    double far2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double q = std::max({lo[k], -(lo[k] + h), 0.0});
      const double f = std::max(std::abs(lo[k]), std::abs(lo[k] + h));
      near2 += q * q;
      far2 += f * f;
    }
    if (std::sqrt(near2) >= R) {
      frac[c] = 0.0;
      continue;
    }
    if (std::sqrt(far2) < R) continue;
    int hits = 0;
    for (int s = 0; s < total; ++s) {
      double r2 = 0.0;
      int rem = s;
      for (int k = 0; k < d; ++k) {
        const double p = lo[k] + (rem % subsamples + 0.5) * h / subsamples;
        rem /= subsamples;
        r2 += p * p;
      }
      hits += std::sqrt(r2) < R ? 1 : 0;
    }
    frac[c] = static_cast<double>(hits) / total;
  }
  return frac;
}

std::string NormValue::name() const {
  std::ostringstream os;
  switch (id) {
    case NormId::lp: os << "L" << p << ",a"; break;
    case NormId::h1: os << "H1,a"; break;
    case NormId::linf: os << "Linf"; break;
  }
  return os.str();
}

double weighted_field_integral(
    const CellIntegrator& integ, std::span<const double> field, const Region& region,
    const std::function<double(const Point&, double, const Point&)>& g) {
  const Grid& grid = integ.grid();
  if (field.size() != grid.num_nodes()) throw PreconditionError("field size does not match grid");
  const auto frac = region_fractions(grid, region);
  const int d = grid.dim();
  std::vector<QuadPoint> pts;
  std::vector<Point> loc;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    if (frac[c] == 0.0) continue;
    integ.weighted_points_local(c, pts, loc);
    const auto nodes = grid.cell_nodes(c);
    double s = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
      double u = 0.0;
      Point gu{0, 0, 0};
      for (int j = 0; j < grid.nodes_per_cell(); ++j) {
        const double fv = field[nodes[j]];
        u += fv * q1_shape(d, j, loc[q]);
        const auto gj = q1_shape_grad(d, j, loc[q], grid.h());
        for (int k = 0; k < d; ++k) gu[k] += fv * gj[k];
      }
      s += pts[q].measure * g(pts[q].z, u, gu);
    }
    total += frac[c] * s;
  }
  return total;
}

NormValue weighted_lp_norm(const CellIntegrator& integ, std::span<const double> field, double p,
                           const Region& region) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw PreconditionError("weighted_lp_norm: p must be in [1,inf)");
  const double s = weighted_field_integral(
      integ, field, region, [p](const Point&, double u, const Point&) { return std::pow(std::abs(u), p); });
  return {std::pow(s, 1.0 / p), NormId::lp, p, region.describe()};
}

NormValue weighted_h1_norm(const CellIntegrator& integ, std::span<const double> field,
                           const Region& region) {
  const int d = integ.grid().dim();
  const double s = weighted_field_integral(integ, field, region,
                                           [d](const Point&, double u, const Point& g) {
                                             double v = u * u;
                                             for (int k = 0; k < d; ++k) v += g[k] * g[k];
                                             return v;
                                           });
  return {std::sqrt(s), NormId::h1, 2.0, region.describe()};
}

NormValue linf_norm(const Grid& grid, std::span<const double> field, const Region& region) {
  double m = 0.0;
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    if (region.kind == Region::Kind::ball) {
      const Point z = grid.node(i);
      double r2 = 0.0;
      for (int k = 0; k < grid.dim(); ++k) r2 += z[k] * z[k];
      if (std::sqrt(r2) > region.radius + 1e-12) continue;
    }
    m = std::max(m, std::abs(field[i]));
  }
  return {m, NormId::linf, 0.0, region.describe()};
}

double weighted_function_lp(const CellIntegrator& integ, const Region& region, double p,
                            const std::function<double(const Point&)>& fn) {
  const Grid& grid = integ.grid();
  const auto frac = region_fractions(grid, region);
  std::vector<QuadPoint> pts;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    if (frac[c] == 0.0) continue;
    integ.weighted_points(c, pts);
    double s = 0.0;
    for (const auto& q : pts) s += q.measure * std::pow(std::abs(fn(q.z)), p);
    total += frac[c] * s;
  }
  return std::pow(total, 1.0 / p);
}

std::optional<double> sobolev_exponent(int d) {
  if (d < 2) throw PreconditionError("sobolev_exponent: d must be >= 2");
  if (d == 2) return std::nullopt;
  return 2.0 * d / (d - 2.0);
}

}  // namespace degen
