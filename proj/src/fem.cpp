#include "degen/fem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace degen {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
    y[i] = s;
  }
}

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const {
  const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
  if (it == e || *it != j) return npos;
  return static_cast<std::size_t>(it - col.begin());
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto p = find(i, j);
  return p == npos ? 0.0 : val[p];
}

bool CsrMatrix::symmetric(double tol) const {
  double scale = 0.0;
  for (double v : val) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      if (std::abs(val[p] - at(col[p], i)) > tol * scale) return false;
  return true;
}

Matrix CsrMatrix::to_dense() const {
  Matrix M = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      M(static_cast<Eigen::Index>(i), col[p]) = val[p];
  return M;
}

Field ReducedSystem::expand(std::span<const double> x) const {
  Field u = prescribed;
  for (std::size_t k = 0; k < free_to_global.size(); ++k) u[free_to_global[k]] = x[k];
  return u;
}

namespace {

CsrMatrix stencil_pattern(const Grid& grid, const DomainMask& mask) {
  const int d = grid.dim();
  const int N = grid.nodes_per_axis();
  CsrMatrix K;
  K.rows = grid.num_nodes();
  K.row_ptr.assign(K.rows + 1, 0);
  int offsets = 1;
  for (int k = 0; k < d; ++k) offsets *= 3;
  for (std::size_t i = 0; i < K.rows; ++i) {
    if (mask.cls[i] != NodeClass::excluded) {
      const auto m = grid.node_multi(i);
      for (int o = 0; o < offsets; ++o) {
        auto mm = m;
        int rem = o;
        bool ok = true;
        for (int k = d - 1; k >= 0; --k) {
          mm[k] += rem % 3 - 1;
          rem /= 3;
          ok = ok && mm[k] >= 0 && mm[k] < N;
        }
        if (!ok) continue;
        const auto j = grid.node_index(mm);
        if (mask.cls[j] == NodeClass::excluded) continue;
        K.col.push_back(static_cast<std::uint32_t>(j));
      }
    }
    K.row_ptr[i + 1] = K.col.size();
  }
  K.val.assign(K.col.size(), 0.0);
  return K;
}

}  // namespace

LinearSystem assemble(const CellIntegrator& integ, const DomainMask& mask,
                      const CoefficientField& A, const ScalarFn& f, const VectorFn& F) {
  const Grid& grid = integ.grid();
  const int d = grid.dim();
  const int nc = grid.nodes_per_cell();
  if (A.dim() != d) throw PreconditionError("assemble: coefficient dimension differs from d");
  if (mask.cls.size() != grid.num_nodes()) throw PreconditionError("assemble: mask/grid mismatch");

  LinearSystem sys;
  sys.K = stencil_pattern(grid, mask);
  sys.rhs.assign(grid.num_nodes(), 0.0);

  if (A.is_constant()) A.check_at(Point{0, 0, 0});

  std::vector<QuadPoint> pts;
  std::vector<Point> loc;
  Eigen::Matrix<double, 8, 8> Kloc;
  std::array<double, 8> bloc{};
  std::array<Point, 8> grads{};
  std::array<double, 8> vals{};

  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    if (!mask.active_cell[c]) continue;
    if (!A.is_constant()) A.check_at(grid.cell_center(c));
    integ.weighted_points_local(c, pts, loc);
    Kloc.setZero();
    bloc.fill(0.0);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const Point& z = pts[q].z;
      const double m = pts[q].measure;
      const Mat3 Az = A.at(z);
      for (int j = 0; j < nc; ++j) {
        grads[j] = q1_shape_grad(d, j, loc[q], grid.h());
        vals[j] = q1_shape(d, j, loc[q]);
      }
      const double fz = eval_or_zero(f, z);
      const Point Fz = eval_or_zero(F, z);
      for (int j = 0; j < nc; ++j) {
        Eigen::Vector3d Ag = Eigen::Vector3d::Zero();
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s) Ag(r) += Az(r, s) * grads[j][s];
        for (int i = j; i < nc; ++i) {
          double v = 0.0;
          for (int r = 0; r < d; ++r) v += Ag(r) * grads[i][r];
          Kloc(i, j) += m * v;
        }
        double fg = 0.0;
        for (int r = 0; r < d; ++r) fg += Fz[r] * grads[j][r];
        bloc[j] += m * (fz * vals[j] - fg);
      }
    }
    const auto nodes = grid.cell_nodes(c);
    for (int j = 0; j < nc; ++j) {
      sys.rhs[nodes[j]] += bloc[j];
      for (int i = 0; i < nc; ++i) {
        const double v = i >= j ? Kloc(i, j) : Kloc(j, i);
        sys.K.val[sys.K.find(nodes[i], nodes[j])] += v;
      }
    }
  }
  return sys;
}

LinearSystem assemble(const ProblemSpec& spec, const Grid& grid, const DomainMask& mask) {
  CellIntegrator integ(grid, spec.weight, spec.quad);
  return assemble(integ, mask, spec.A, spec.f, spec.F);
}

ReducedSystem apply_dirichlet(const LinearSystem& sys, const Grid& grid, const DomainMask& mask,
                              const ScalarFn& psi, const ScalarFn& g) {
  const std::size_t nn = grid.num_nodes();
  if (sys.K.rows != nn || mask.cls.size() != nn)
    throw PreconditionError("apply_dirichlet: mask and system sizes differ");
  ReducedSystem red;
  red.prescribed.assign(nn, 0.0);
  std::vector<std::int64_t> global_to_free(nn, -1);
  for (std::size_t i = 0; i < nn; ++i) {
    const NodeClass c = mask.cls[i];
    const Point z = grid.node(i);
    if (c == NodeClass::interior) {
      global_to_free[i] = static_cast<std::int64_t>(red.free_to_global.size());
      red.free_to_global.push_back(i);
      continue;
    }
    if (c == NodeClass::excluded) continue;
    ++red.num_constrained;
    if (c == NodeClass::outer_boundary) {
      red.prescribed[i] = eval_or_zero(g, z);
    } else {
      // sigma0 and hole nodes carry psi(x), constant in y
      Point zx = z;
      for (int k = grid.x_dim(); k < grid.dim(); ++k) zx[k] = 0.0;
      const double v = eval_or_zero(psi, zx);
      if (mask.on_outer[i]) {
        const double gv = eval_or_zero(g, z);
        if (std::abs(gv - v) > 1e-9 * (1.0 + std::abs(v)))
          throw ConstraintConflict("apply_dirichlet: psi and g disagree at node " + std::to_string(i));
      }
      red.prescribed[i] = v;
    }
  }

  const std::size_t nf = red.free_to_global.size();
  red.K.rows = nf;
  red.K.row_ptr.assign(nf + 1, 0);
  red.rhs.assign(nf, 0.0);
  for (std::size_t k = 0; k < nf; ++k) {
    const std::size_t i = red.free_to_global[k];
    double b = sys.rhs[i];
    for (std::size_t p = sys.K.row_ptr[i]; p < sys.K.row_ptr[i + 1]; ++p) {
      const std::size_t j = sys.K.col[p];
      if (global_to_free[j] >= 0) {
        red.K.col.push_back(static_cast<std::uint32_t>(global_to_free[j]));
        red.K.val.push_back(sys.K.val[p]);
      } else {
        b -= sys.K.val[p] * red.prescribed[j];
      }
    }
    red.rhs[k] = b;
    red.K.row_ptr[k + 1] = red.K.col.size();
  }
  return red;
}

std::string to_string(CgStatus s) {
  switch (s) {
    case CgStatus::converged: return "converged";
    case CgStatus::max_iterations: return "max_iterations";
    case CgStatus::indefinite: return "indefinite";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult solve_cg(const CsrMatrix& K, std::span<const double> rhs, double tol, int maxit) {
  const std::size_t n = K.rows;
  if (rhs.size() != n) throw PreconditionError("solve_cg: rhs size mismatch");
  CgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0.0) return res;

  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dii = K.at(i, i);
    if (!(dii > 0.0)) {
      res.status = CgStatus::indefinite;
      res.relative_residual = 1.0;
      res.history.push_back(1.0);
      return res;
    }
    inv_diag[i] = 1.0 / dii;
  }

  std::vector<double> r(rhs.begin(), rhs.end());
  std::vector<double> z(n), p(n), Ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  res.history.push_back(rel);
  for (int it = 1; it <= maxit; ++it) {
    K.multiply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      res.status = CgStatus::indefinite;
      res.iterations = it;
      res.relative_residual = rel;
      return res;
    }
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    rel = std::sqrt(dot(r, r)) / bnorm;
    res.history.push_back(rel);
    res.iterations = it;
    if (rel <= tol) {
      // confirm with the true residual
      K.multiply(res.x, Ap);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (rhs[i] - Ap[i]) * (rhs[i] - Ap[i]);
      res.relative_residual = std::sqrt(s) / bnorm;
      if (res.relative_residual <= tol) return res;
      for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  res.status = CgStatus::max_iterations;
  res.relative_residual = rel;
  return res;
}

double energy(const CellIntegrator& integ, const DomainMask& mask, const CoefficientField& A,
              const ScalarFn& f, const VectorFn& F, std::span<const double> field) {
  const Grid& grid = integ.grid();
  const int d = grid.dim();
  std::vector<QuadPoint> pts;
  std::vector<Point> loc;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    if (!mask.active_cell[c]) continue;
    integ.weighted_points_local(c, pts, loc);
    const auto nodes = grid.cell_nodes(c);
    double s = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
      double v = 0.0;
      Point gv{0, 0, 0};
      for (int j = 0; j < grid.nodes_per_cell(); ++j) {
        const double fv = field[nodes[j]];
        v += fv * q1_shape(d, j, loc[q]);
        const auto gj = q1_shape_grad(d, j, loc[q], grid.h());
        for (int k = 0; k < d; ++k) gv[k] += fv * gj[k];
      }
      const Mat3 Az = A.at(pts[q].z);
      const Point Fz = eval_or_zero(F, pts[q].z);
      double quad = 0.0;
      double lin = 0.0;
      for (int r = 0; r < d; ++r) {
        lin += Fz[r] * gv[r];
        for (int k = 0; k < d; ++k) quad += Az(r, k) * gv[k] * gv[r];
      }
      s += pts[q].measure * (0.5 * quad - eval_or_zero(f, pts[q].z) * v + lin);
    }
    total += s;
  }
  return total;
}

SolveResult solve(const ProblemSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  spec.validate();
  Grid grid(spec.grid);
  DomainMask mask = classify_nodes(grid, spec.shape, spec.eps, spec.radius);
  CellIntegrator integ(grid, spec.weight, spec.quad);
  const LinearSystem sys = assemble(integ, mask, spec.A, spec.f, spec.F);
  const ReducedSystem red = apply_dirichlet(sys, grid, mask, spec.psi, spec.g);
  CgResult cg = solve_cg(red.K, red.rhs, spec.solver.tol, spec.solver.maxit);
  if (!cg.converged())
    throw SolverError("CG " + to_string(cg.status) + " after " + std::to_string(cg.iterations) +
                          " iterations",
                      std::move(cg));
  SolveResult out{grid, std::move(mask), red.expand(cg.x)};
  out.relative_residual = cg.relative_residual;
  out.iterations = cg.iterations;
  out.free_dofs = red.free_to_global.size();
  out.energy = energy(integ, out.mask, spec.A, spec.f, spec.F, out.u);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double galerkin_residual(const LinearSystem& sys, const DomainMask& mask, std::span<const double> u) {
  std::vector<double> Ku(u.size());
  sys.K.multiply(u, Ku);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    den = std::max(den, std::abs(sys.rhs[i]));
    if (mask.cls[i] != NodeClass::interior) continue;
    num = std::max(num, std::abs(Ku[i] - sys.rhs[i]));
  }
  for (std::size_t i = 0; i < u.size(); ++i)
    if (mask.cls[i] == NodeClass::interior)
      for (std::size_t p = sys.K.row_ptr[i]; p < sys.K.row_ptr[i + 1]; ++p)
        den = std::max(den, std::abs(sys.K.val[p] * u[sys.K.col[p]]));
  return den > 0.0 ? num / den : num;
}

}  // namespace degen
