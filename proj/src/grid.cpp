#include "degen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace degen {

void GridSpec::validate() const {
  if (d < 2 || d > kMaxDim) throw PreconditionError("grid: d must lie in [2,3]");
  if (n < 2 || n > d) throw PreconditionError("grid: n must satisfy 2 <= n <= d");
  if (nodes_per_axis < 5) throw PreconditionError("grid: nodes_per_axis must be >= 5");
  if (nodes_per_axis % 2 == 0) throw PreconditionError("grid: nodes_per_axis must be odd");
  const double len = bounds[0].hi - bounds[0].lo;
  if (!(len > 0)) throw PreconditionError("grid: empty interval");
  for (int k = 1; k < d; ++k) {
    const double lk = bounds[k].hi - bounds[k].lo;
    if (std::abs(lk - len) > 1e-12 * len)
      throw PreconditionError("grid: all axes must share the same length (uniform h)");
  }
  const double hh = h();
  for (int k = d - n; k < d; ++k) {
    const double i0 = -bounds[k].lo / hh;
    if (bounds[k].lo > 0 || bounds[k].hi < 0 || std::abs(i0 - std::round(i0)) > 1e-9)
      throw PreconditionError("grid: y = 0 must be a node plane on every y-axis");
  }
}

GridSpec GridSpec::cube(int d, int n, int nodes, double half_width) {
  GridSpec s;
  s.d = d;
  s.n = n;
  s.nodes_per_axis = nodes;
  for (auto& b : s.bounds) b = {-half_width, half_width};
  return s;
}

double y_norm(const Point& z, int d, int n) {
  double s = 0.0;
  for (int k = d - n; k < d; ++k) s += z[k] * z[k];
  return std::sqrt(s);
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  h_ = spec_.h();
  num_nodes_ = 1;
  num_cells_ = 1;
  for (int k = 0; k < spec_.d; ++k) {
    num_nodes_ *= static_cast<std::size_t>(spec_.nodes_per_axis);
    num_cells_ *= static_cast<std::size_t>(spec_.nodes_per_axis - 1);
  }
  for (int k = spec_.d; k < kMaxDim; ++k) spec_.bounds[k] = {0.0, 0.0};
}

std::array<int, kMaxDim> Grid::node_multi(std::size_t idx) const {
  std::array<int, kMaxDim> m{0, 0, 0};
  const auto N = static_cast<std::size_t>(spec_.nodes_per_axis);
  for (int k = spec_.d - 1; k >= 0; --k) {
    m[k] = static_cast<int>(idx % N);
    idx /= N;
  }
  return m;
}

std::size_t Grid::node_index(const std::array<int, kMaxDim>& m) const {
  std::size_t idx = 0;
  const auto N = static_cast<std::size_t>(spec_.nodes_per_axis);
  for (int k = 0; k < spec_.d; ++k) idx = idx * N + static_cast<std::size_t>(m[k]);
  return idx;
}

Point Grid::node(std::size_t idx) const {
  const auto m = node_multi(idx);
  Point p{0, 0, 0};
  for (int k = 0; k < spec_.d; ++k) p[k] = coord(k, m[k]);
  return p;
}

std::array<int, kMaxDim> Grid::cell_multi(std::size_t cell) const {
  std::array<int, kMaxDim> m{0, 0, 0};
  const auto C = static_cast<std::size_t>(cells_per_axis());
  for (int k = spec_.d - 1; k >= 0; --k) {
    m[k] = static_cast<int>(cell % C);
    cell /= C;
  }
  return m;
}

std::size_t Grid::cell_index(const std::array<int, kMaxDim>& m) const {
  std::size_t idx = 0;
  const auto C = static_cast<std::size_t>(cells_per_axis());
  for (int k = 0; k < spec_.d; ++k) idx = idx * C + static_cast<std::size_t>(m[k]);
  return idx;
}

Point Grid::cell_lower(std::size_t cell) const {
  const auto m = cell_multi(cell);
  Point p{0, 0, 0};
  for (int k = 0; k < spec_.d; ++k) p[k] = coord(k, m[k]);
  return p;
}

Point Grid::cell_center(std::size_t cell) const {
  Point p = cell_lower(cell);
  for (int k = 0; k < spec_.d; ++k) p[k] += 0.5 * h_;
  return p;
}

std::array<std::size_t, 8> Grid::cell_nodes(std::size_t cell) const {
  std::array<std::size_t, 8> out{};
  const auto m = cell_multi(cell);
  for (int c = 0; c < nodes_per_cell(); ++c) {
    auto mm = m;
    for (int k = 0; k < spec_.d; ++k) mm[k] += (c >> k) & 1;
    out[c] = node_index(mm);
  }
  return out;
}

bool Grid::contains(const Point& z, double tol) const {
  for (int k = 0; k < spec_.d; ++k)
    if (z[k] < spec_.bounds[k].lo - tol || z[k] > spec_.bounds[k].hi + tol) return false;
  return true;
}

std::size_t Grid::locate(const Point& z, Point& local) const {
  std::array<int, kMaxDim> m{0, 0, 0};
  local = {0, 0, 0};
  for (int k = 0; k < spec_.d; ++k) {
    const double s = (z[k] - spec_.bounds[k].lo) / h_;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, cells_per_axis() - 1);
    m[k] = i;
    local[k] = std::clamp(s - i, 0.0, 1.0);
  }
  return cell_index(m);
}

double q1_shape(int d, int corner, const Point& t) {
  double v = 1.0;
  for (int k = 0; k < d; ++k) v *= ((corner >> k) & 1) ? t[k] : 1.0 - t[k];
  return v;
}

Point q1_shape_grad(int d, int corner, const Point& t, double h) {
  Point g{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    double v = ((corner >> k) & 1) ? 1.0 : -1.0;
    for (int j = 0; j < d; ++j) {
      if (j == k) continue;
      v *= ((corner >> j) & 1) ? t[j] : 1.0 - t[j];
    }
    g[k] = v / h;
  }
  return g;
}

double interpolate(const Grid& grid, std::span<const double> field, const Point& z) {
  Point t;
  const auto cell = grid.locate(z, t);
  const auto nodes = grid.cell_nodes(cell);
  double v = 0.0;
  for (int c = 0; c < grid.nodes_per_cell(); ++c) v += field[nodes[c]] * q1_shape(grid.dim(), c, t);
  return v;
}

Point cell_gradient(const Grid& grid, std::span<const double> field, std::size_t cell,
                    const Point& t) {
  const auto nodes = grid.cell_nodes(cell);
  Point g{0, 0, 0};
  for (int c = 0; c < grid.nodes_per_cell(); ++c) {
    const auto gc = q1_shape_grad(grid.dim(), c, t, grid.h());
    for (int k = 0; k < grid.dim(); ++k) g[k] += field[nodes[c]] * gc[k];
  }
  return g;
}

std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::interior: return "interior";
    case NodeClass::sigma0: return "sigma0";
    case NodeClass::hole_constrained: return "hole_constrained";
    case NodeClass::outer_boundary: return "outer_boundary";
    case NodeClass::excluded: return "excluded";
  }
  return "?";
}

std::size_t DomainMask::count(NodeClass c) const {
  return static_cast<std::size_t>(std::count(cls.begin(), cls.end(), c));
}

DomainMask classify_nodes(const Grid& grid, DomainShape shape, double eps, double radius) {
  if (!(eps >= 0.0)) throw PreconditionError("classify_nodes: eps must be >= 0");
  const int d = grid.dim();
  const int n = grid.codim();
  const int N = grid.nodes_per_axis();
  if (shape == DomainShape::ball) {
    if (!(radius > 0.0)) throw PreconditionError("classify_nodes: ball radius must be > 0");
    if (eps >= radius) throw PreconditionError("classify_nodes: eps must be below the domain radius");
  } else {
    double half = 0.0;
    for (int k = d - n; k < d; ++k)
      half = std::max(half, std::min(-grid.spec().bounds[k].lo, grid.spec().bounds[k].hi));
    if (eps >= half) throw PreconditionError("classify_nodes: eps must be below the domain extent");
  }

  DomainMask mask;
  mask.eps = eps;
  mask.shape = shape;
  mask.radius = radius;
  mask.cls.assign(grid.num_nodes(), NodeClass::interior);
  mask.on_outer.assign(grid.num_nodes(), 0);
  mask.active_cell.assign(grid.num_cells(), 1);

  // index of y_k = 0 on each y-axis
  std::array<int, kMaxDim> zero{0, 0, 0};
  for (int k = d - n; k < d; ++k)
    zero[k] = static_cast<int>(std::lround(-grid.spec().bounds[k].lo / grid.h()));

  std::vector<std::uint8_t> inside(grid.num_nodes(), 1);
  if (shape == DomainShape::ball) {
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
      const Point z = grid.node(i);
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) r2 += z[k] * z[k];
      inside[i] = std::sqrt(r2) < radius ? 1 : 0;
    }
    std::vector<std::uint8_t> touched(grid.num_nodes(), 0);
    for (std::size_t c = 0; c < grid.num_cells(); ++c) {
      const auto nodes = grid.cell_nodes(c);
      bool any = false;
      for (int j = 0; j < grid.nodes_per_cell(); ++j) any = any || inside[nodes[j]];
      mask.active_cell[c] = any ? 1 : 0;
      if (any)
        for (int j = 0; j < grid.nodes_per_cell(); ++j) touched[nodes[j]] = 1;
    }
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
      if (!touched[i]) {
        mask.cls[i] = NodeClass::excluded;
      } else if (!inside[i]) {
        mask.on_outer[i] = 1;
      }
    }
  }

  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    if (mask.cls[i] == NodeClass::excluded) continue;
    const auto m = grid.node_multi(i);
    bool face = false;
    for (int k = 0; k < d; ++k) face = face || m[k] == 0 || m[k] == N - 1;
    if (face) mask.on_outer[i] = 1;

    bool singular = false;
    if (eps == 0.0) {
      singular = true;
      for (int k = d - n; k < d; ++k) singular = singular && m[k] == zero[k];
      if (singular) mask.cls[i] = NodeClass::sigma0;
    } else {
      singular = grid.y_norm(grid.node(i)) <= eps;
      if (singular) mask.cls[i] = NodeClass::hole_constrained;
    }
    if (!singular && mask.on_outer[i]) mask.cls[i] = NodeClass::outer_boundary;
  }
  return mask;
}

EllipsoidRegion::EllipsoidRegion(Matrix A_, double r_) : A(std::move(A_)), r(r_) {
  if (A.rows() != A.cols() || A.rows() < 2) throw PreconditionError("ellipsoid: A must be square");
  if (!(r > 0.0)) throw PreconditionError("ellipsoid: r must be > 0");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * A.cwiseAbs().maxCoeff())
    throw PreconditionError("ellipsoid: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw PreconditionError("ellipsoid: A must be positive definite");
  lmax_ = es.eigenvalues().maxCoeff();
  inv_ = A.inverse();
}

double EllipsoidRegion::rho(const Point& y, int d) const {
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s += inv_(i, j) * y[i] * y[j];
  return std::sqrt(std::max(s, 0.0));
}

std::vector<double> ellipsoid_membership(const Grid& grid, const EllipsoidRegion& region,
                                         int subsamples) {
  if (grid.codim() != grid.dim())
    throw PreconditionError("ellipsoid_membership: requires n = d");
  if (region.A.rows() != grid.dim())
    throw PreconditionError("ellipsoid_membership: matrix size must equal d");
  const int d = grid.dim();
  const double h = grid.h();
  const double lower_scale = 1.0 / std::sqrt(region.max_eigenvalue());
  int total = 1;
  for (int k = 0; k < d; ++k) total *= subsamples;

  std::vector<double> frac(grid.num_cells(), 0.0);
  for (std::size_t c = 0; c < grid.num_cells(); ++c) {
    const Point lo = grid.cell_lower(c);
    // Euclidean distance from the origin to the cell bounds rho_A from below
    double dist2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double q = std::max({lo[k] - 0.0, 0.0 - (lo[k] + h), 0.0});
      dist2 += q * q;
    }
    if (std::sqrt(dist2) * lower_scale >= region.r) continue;
    // rho_A is convex, so all corners inside means the whole cell is inside
    bool all_in = true;
    for (int corner = 0; corner < grid.nodes_per_cell() && all_in; ++corner) {
      Point p = lo;
      for (int k = 0; k < d; ++k) p[k] += ((corner >> k) & 1) * h;
      all_in = region.contains(p, d);
    }
    if (all_in) {
      frac[c] = 1.0;
      continue;
    }
    int hits = 0;
    for (int s = 0; s < total; ++s) {
      Point p = lo;
      int rem = s;
      for (int k = 0; k < d; ++k) {
        p[k] += (rem % subsamples + 0.5) * h / subsamples;
        rem /= subsamples;
      }
      hits += region.contains(p, d) ? 1 : 0;
    }
    frac[c] = static_cast<double>(hits) / total;
  }
  return frac;
}

std::vector<double> restrict_to_sigma0(std::span<const double> field, const DomainMask& mask) {
  if (mask.eps > 0.0) throw PreconditionError("restrict_to_sigma0: requires eps = 0");
  if (field.size() != mask.cls.size()) throw PreconditionError("restrict_to_sigma0: size mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (mask.cls[i] == NodeClass::sigma0) out.push_back(field[i]);
  return out;
}

void write_mask_csv(std::ostream& os, const Grid& grid, const DomainMask& mask) {
  os << "node";
  for (int k = 0; k < grid.dim(); ++k) os << ",z" << k;
  os << ",class\n";
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    const Point z = grid.node(i);
    os << i;
    for (int k = 0; k < grid.dim(); ++k) os << ',' << z[k];
    os << ',' << to_string(mask.cls[i]) << '\n';
  }
}

}  // namespace degen
