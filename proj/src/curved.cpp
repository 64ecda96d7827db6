#include "degen/curved.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace degen {

namespace {

void require_curved(int d, int n) {
  if (!(n >= 2 && n < d && d <= kMaxDim)) throw PreconditionError("curved mode requires 2 <= n < d <= 3");
}

Mat3 zero_block() { return Mat3::Zero(); }

}  // namespace

Parametrization Parametrization::zero(int d, int n) {
  require_curved(d, n);
  Parametrization p;
  p.name = "zero";
  p.d = d;
  p.n = n;
  p.holder_class = "C-infinity";
  p.offset = [](const Point&) { return Point{0, 0, 0}; };
  p.jacobian = [](const Point&) { return zero_block(); };
  return p;
}

Parametrization Parametrization::sine_graph(int d, int n, double amplitude) {
  require_curved(d, n);
  Parametrization p;
  p.name = "sine-graph";
  p.d = d;
  p.n = n;
  p.holder_class = "C-infinity";
  const int y0 = d - n;
  p.offset = [=](const Point& z) {
    Point o{0, 0, 0};
    o[y0] = amplitude * std::sin(z[0]);
    return o;
  };
  p.jacobian = [=](const Point& z) {
    Mat3 J = zero_block();
    J(y0, 0) = amplitude * std::cos(z[0]);
    return J;
  };
  return p;
}

Parametrization Parametrization::polynomial(int d, int n, std::vector<double> coeffs) {
  require_curved(d, n);
  if (coeffs.empty()) throw PreconditionError("polynomial graph: need at least one coefficient");
  Parametrization p;
  p.name = "polynomial";
  p.d = d;
  p.n = n;
  p.holder_class = "C-infinity";
  const int y0 = d - n;
  p.offset = [=](const Point& z) {
    Point o{0, 0, 0};
    double xp = 1.0;
    for (double c : coeffs) {
      xp *= z[0];
      o[y0] += c * xp;
    }
    return o;
  };
  p.jacobian = [=](const Point& z) {
    Mat3 J = zero_block();
    double xp = 1.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      J(y0, 0) += static_cast<double>(k + 1) * coeffs[k] * xp;
      xp *= z[0];
    }
    return J;
  };
  return p;
}

const std::vector<std::string>& Parametrization::registry() {
  static const std::vector<std::string> names = {"zero", "sine-graph", "polynomial"};
  return names;
}

Parametrization Parametrization::by_name(const std::string& name, int d, int n,
                                         const std::vector<double>& params) {
  if (name == "zero") return zero(d, n);
  if (name == "sine-graph") return sine_graph(d, n, params.empty() ? 0.2 : params.front());
  if (name == "polynomial") return polynomial(d, n, params.empty() ? std::vector<double>{0.1} : params);
  throw PreconditionError("unknown graph parametrization '" + name + "'");
}

Straightening::Straightening(Parametrization p) : p_(std::move(p)) { require_curved(p_.d, p_.n); }

Point Straightening::forward(const Point& z) const {
  const Point o = p_.offset(z);
  Point out = z;
  for (int k = 0; k < p_.d; ++k) out[k] += o[k];
  return out;
}

Point Straightening::inverse(const Point& z) const {
  const Point o = p_.offset(z);
  Point out = z;
  for (int k = 0; k < p_.d; ++k) out[k] -= o[k];
  return out;
}

Mat3 Straightening::jacobian(const Point& z) const { return Mat3::Identity() + p_.jacobian(z); }

Mat3 Straightening::jacobian_inverse(const Point& z) const {
  return Mat3::Identity() - p_.jacobian(z);
}

double Straightening::det(const Point& z) const {
  // block lower triangular: the determinant is the product of the diagonal
  const Mat3 J = jacobian(z);
  double v = 1.0;
  for (int k = 0; k < p_.d; ++k) v *= J(k, k);
  return v;
}

double graph_distance(const Parametrization& p, const Point& z, double half_width, int samples) {
  if (p.d - p.n != 1) throw PreconditionError("graph_distance: one x-variable expected");
  auto dist2 = [&](double t) {
    Point g{0, 0, 0};
    g[0] = t;
    const Point o = p.offset(g);
    double s = (z[0] - t) * (z[0] - t);
    for (int k = 1; k < p.d; ++k) s += (z[k] - o[k]) * (z[k] - o[k]);
    return s;
  };
  const double dt = 2.0 * half_width / (samples - 1);
  int best = 0;
  double best_v = dist2(-half_width);
  for (int i = 1; i < samples; ++i) {
    const double v = dist2(-half_width + i * dt);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double lo = -half_width + std::max(best - 1, 0) * dt;
  double hi = -half_width + std::min(best + 1, samples - 1) * dt;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (dist2(m1) < dist2(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::sqrt(std::min(best_v, dist2(0.5 * (lo + hi))));
}

AdmissibleWeight AdmissibleWeight::vertical_distance(const Parametrization& p) {
  AdmissibleWeight w;
  w.name = "vertical-distance";
  const int d = p.d;
  const int n = p.n;
  w.delta = [p, d, n](const Point& z) {
    const Point o = p.offset(z);
    double s = 0.0;
    for (int k = d - n; k < d; ++k) s += (z[k] - o[k]) * (z[k] - o[k]);
    return std::sqrt(s);
  };
  w.delta_tilde_exact = [](const Point&) { return 1.0; };
  return w;
}

AdmissibleWeight AdmissibleWeight::scaled_graph_distance(const Parametrization& p, double c,
                                                         double x_half_width) {
  if (!(c > 0.0)) throw PreconditionError("scaled graph distance: factor must be positive");
  AdmissibleWeight w;
  w.name = "scaled-graph-distance";
  w.delta = [p, c, x_half_width](const Point& z) { return c * graph_distance(p, z, x_half_width); };
  return w;
}

double AdmissibleWeight::tilde(const Straightening& s, const Point& straight) const {
  if (delta_tilde_exact) return delta_tilde_exact(straight);
  const int d = s.dim();
  const int n = s.param().n;
  double r = y_norm(straight, d, n);
  Point q = straight;
  if (r < 1e-9) {
    r = 1e-7;
    q[d - n] += r;
  }
  return delta(s.forward(q)) / r;
}

AdmissibilityReport admissibility_check(const AdmissibleWeight& w, const Parametrization& p,
                                        int samples, std::uint64_t seed, double half_width,
                                        double holder_alpha) {
  const Straightening S(p);
  const int d = p.d;
  const int n = p.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-half_width, half_width);
  std::uniform_real_distribution<double> V(-0.05, 0.05);

  AdmissibilityReport rep;
  rep.holder_alpha = holder_alpha;
  rep.c0 = std::numeric_limits<double>::infinity();
  rep.c1 = 0.0;
  rep.delta_tilde_min = std::numeric_limits<double>::infinity();
  rep.delta_tilde_max = 0.0;
  int taken = 0;
  while (taken < samples) {
    Point z{0, 0, 0};
    for (int k = 0; k < d; ++k) z[k] = U(rng);
    const double dist = graph_distance(p, z, std::max(1.5, 2.0 * half_width));
    if (dist <= 1e-6) continue;
    ++taken;
    const double ratio = w.delta(z) / dist;
    rep.c0 = std::min(rep.c0, ratio);
    rep.c1 = std::max(rep.c1, ratio);

    Point xi = S.inverse(z);
    if (y_norm(xi, d, n) <= 1e-6) continue;
    Point zeta = xi;
    for (int k = 0; k < d; ++k) zeta[k] += V(rng);
    if (y_norm(zeta, d, n) <= 1e-6) continue;
    const double t1 = w.tilde(S, xi);
    const double t2 = w.tilde(S, zeta);
    rep.delta_tilde_min = std::min({rep.delta_tilde_min, t1, t2});
    rep.delta_tilde_max = std::max({rep.delta_tilde_max, t1, t2});
    double sep = 0.0;
    for (int k = 0; k < d; ++k) sep += (xi[k] - zeta[k]) * (xi[k] - zeta[k]);
    sep = std::sqrt(sep);
    if (sep > 0.0) rep.holder_quotient = std::max(rep.holder_quotient, std::abs(t1 - t2) / std::pow(sep, holder_alpha));
  }
  rep.samples = taken;
  rep.admissible = rep.c0 > 0.0 && std::isfinite(rep.c1) && rep.delta_tilde_min > 0.0 &&
                   std::isfinite(rep.holder_quotient);
  return rep;
}

PushedProblem push_problem(const CurvedProblem& cp) {
  const ProblemSpec& in = cp.spec;
  const int d = in.grid.d;
  const int n = in.grid.n;
  require_curved(d, n);
  if (cp.phi.d != d || cp.phi.n != n) throw PreconditionError("push_problem: graph dimensions differ from the grid");
  if (in.weight.mode != WeightMode::straight)
    throw PreconditionError("push_problem: curved spec must carry the plain weight");
  if (!cp.delta.delta) throw PreconditionError("push_problem: missing weight delta");

  auto S = std::make_shared<const Straightening>(cp.phi);
  const AdmissibleWeight dw = cp.delta;
  const double a = in.weight.a;
  auto dt = [S, dw](const Point& z) { return dw.tilde(*S, z); };

  const CoefficientField A = in.A;
  auto B = [S, A](const Point& z) -> Mat3 {
    const Mat3 Ji = S->jacobian_inverse(z);
    return Ji * A.at(S->forward(z)) * Ji.transpose();
  };

  PushedProblem out;
  out.spec = in;
  out.spec.weight = WeightSpec::composed(a, d, n, dt);
  out.spec.A = CoefficientField::callback(d, B);
  if (in.f) {
    const ScalarFn f = in.f;
    out.spec.f = [S, f](const Point& z) { return f(S->forward(z)); };
  }
  if (in.F) {
    const VectorFn F = in.F;
    out.spec.F = [S, F](const Point& z) {
      const Point v = F(S->forward(z));
      const Mat3 Ji = S->jacobian_inverse(z);
      Point r{0, 0, 0};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i] += Ji(i, j) * v[j];
      return r;
    };
  }
  if (in.psi) {
    const ScalarFn psi = in.psi;
    out.spec.psi = [S, psi, d, n](const Point& z) {
      Point x = z;
      for (int k = d - n; k < d; ++k) x[k] = 0.0;
      return psi(S->forward(x));
    };
  }
  if (in.g) {
    const ScalarFn g = in.g;
    out.spec.g = [S, g](const Point& z) { return g(S->forward(z)); };
  }

  const Grid grid(in.grid);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    const Point z = grid.node(i);
    const double t = dt(z);
    if (!(t > 0.0) || !std::isfinite(t))
      throw EllipticityError("push_problem: delta_tilde not positive at a node");
    const auto [l, h] = eigen_range(std::pow(t, a) * B(z), d);
    if (!(l > 0.0) || !std::isfinite(h))
      throw EllipticityError("push_problem: transported coefficient is not elliptic");
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  out.lambda_tilde = lo;
  out.Lambda_tilde = hi;
  out.effective = CoefficientField::callback(
      d, [B, dt, a](const Point& z) -> Mat3 { return std::pow(dt(z), a) * B(z); });
  return out;
}

std::vector<CurvedResidualRow> curved_bc_residual(const Grid& grid, std::span<const double> u,
                                                  const CoefficientField& A, const VectorFn& F,
                                                  const ScalarFn& psi, const Parametrization& p,
                                                  const std::vector<double>& bands,
                                                  double x_window) {
  const int d = grid.dim();
  const int n = grid.codim();
  require_curved(d, n);
  if (u.size() != grid.num_nodes()) throw PreconditionError("curved_bc_residual: field/grid mismatch");
  const Straightening S(p);
  const int dx = d - n;
  const Point mid{0.5, 0.5, 0.5};

  std::vector<CurvedResidualRow> rows(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) rows[b].band = bands[b];
  const double rmax = bands.empty() ? 0.0 : *std::max_element(bands.begin(), bands.end());

  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point z = grid.cell_center(c);
    bool in_window = true;
    for (int k = 0; k < dx; ++k) in_window = in_window && std::abs(z[k]) <= x_window;
    if (!in_window) continue;
    const Point o = p.offset(z);
    double v2 = 0.0;
    for (int k = dx; k < d; ++k) v2 += (z[k] - o[k]) * (z[k] - o[k]);
    const double vd = std::sqrt(v2);
    if (vd > rmax) continue;

    const Point gu = cell_gradient(grid, u, c, mid);
    const Point Fz = eval_or_zero(F, z);
    const Mat3 Az = A.at(z);
    Eigen::Vector3d flux = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    for (int i = 0; i < d; ++i) {
      flux(i) = Fz[i];
      for (int j = 0; j < d; ++j) flux(i) += Az(i, j) * gu[j];
      grad(i) = gu[i];
    }

    Point g0 = z;
    for (int k = dx; k < d; ++k) g0[k] = o[k];
    Eigen::Vector3d gpsi = Eigen::Vector3d::Zero();
    if (psi) {
      const double step = 1e-6;
      for (int k = 0; k < d; ++k) {
        Point zp = g0, zm = g0;
        zp[k] += step;
        zm[k] -= step;
        gpsi(k) = (psi(zp) - psi(zm)) / (2 * step);
      }
    }

    // Gram-Schmidt on the graph tangents, then on the y-axes for the normals
    const Mat3 J = S.jacobian(g0);
    std::vector<Eigen::Vector3d> frame;
    double tang = 0.0;
    for (int k = 0; k < dx; ++k) {
      Eigen::Vector3d t = J.col(k);
      for (const auto& e : frame) t -= t.dot(e) * e;
      t.normalize();
      frame.push_back(t);
      tang = std::max(tang, std::abs((grad - gpsi).dot(t)));
    }
    double normal = 0.0;
    for (int k = dx; k < d; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
      for (const auto& f : frame) e -= e.dot(f) * f;
      e.normalize();
      frame.push_back(e);
      normal = std::max(normal, std::abs(flux.dot(e)));
    }

    for (auto& row : rows) {
      if (vd > row.band) continue;
      row.normal = std::max(row.normal, normal);
      row.tangential = std::max(row.tangential, tang);
      ++row.samples;
    }
  }
  return rows;
}

Field pullback_field(const Grid& straight, std::span<const double> field, const Straightening& s,
                     const Grid& curved) {
  if (field.size() != straight.num_nodes()) throw PreconditionError("pullback_field: field/grid mismatch");
  if (straight.dim() != s.dim() || curved.dim() != s.dim())
    throw PreconditionError("pullback_field: dimension mismatch");
  Field out(curved.num_nodes(), 0.0);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < curved.num_nodes(); ++i) {
    const Point xi = s.inverse(curved.node(i));
    if (!straight.contains(xi, 1e-12)) {
      ++outside;
      continue;
    }
    out[i] = interpolate(straight, field, xi);
  }
  if (outside > 0)
    throw PreconditionError("pullback_field: " + std::to_string(outside) +
                            " curved nodes map outside the straight grid");
  return out;
}

CurvedModel curved_radial_model(const Parametrization& p, double a, const GridSpec& straight) {
  const int d = p.d;
  const int n = p.n;
  require_curved(d, n);
  const WeightSpec w(a, d, n);
  const double gamma = w.model_exponent();
  auto S = std::make_shared<const Straightening>(p);

  auto grad_straight = [d, n, gamma](const Point& xi) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    const double r = y_norm(xi, d, n);
    if (r == 0.0) return g;
    const double s = gamma * std::pow(r, gamma - 2.0);
    for (int k = d - n; k < d; ++k) g(k) = s * xi[k];
    return g;
  };

  CurvedModel m;
  m.exact = [S, d, n, gamma](const Point& z) { return std::pow(y_norm(S->inverse(z), d, n), gamma); };
  m.exact_flux = [S, grad_straight](const Point& z) {
    const Eigen::Vector3d v = S->jacobian(z) * grad_straight(S->inverse(z));
    return Point{v(0), v(1), v(2)};
  };

  ProblemSpec& spec = m.problem.spec;
  spec.grid = straight;
  spec.grid.d = d;
  spec.grid.n = n;
  spec.weight = w;
  spec.A = CoefficientField::identity(d);
  // F = J Ft o Phi^{-1} with Ft = -(J^{-1}J^{-T} - I) grad ut; J depends on x only
  spec.F = [S, grad_straight](const Point& z) {
    const Mat3 J = S->jacobian(z);
    const Mat3 Ji = S->jacobian_inverse(z);
    const Eigen::Vector3d gt = grad_straight(S->inverse(z));
    const Eigen::Vector3d Ft = -(Ji * Ji.transpose() - Mat3::Identity()) * gt;
    const Eigen::Vector3d v = J * Ft;
    return Point{v(0), v(1), v(2)};
  };
  spec.psi = [](const Point&) { return 0.0; };
  spec.g = m.exact;
  m.problem.phi = p;
  m.problem.delta = AdmissibleWeight::vertical_distance(p);
  return m;
}

}  // namespace degen
