#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace degen {

inline constexpr int kMaxDim = 3;

/// A point of R^d stored in a fixed three-slot array; only the first d slots
/// are meaningful. The first d-n slots are the x-variables, the last n the
/// y-variables.
using Point = std::array<double, kMaxDim>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1>;

/// Violated precondition on user-supplied input.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

struct GridSpec {
  int d = 2;
  int n = 2;
  std::array<Interval, kMaxDim> bounds{};
  int nodes_per_axis = 65;

  /// Throws PreconditionError on even node counts, dimensions out of range,
  /// unequal axis lengths, or a y-axis on which {y_i = 0} is not a node plane.
  void validate() const;
  double h() const { return (bounds[0].hi - bounds[0].lo) / (nodes_per_axis - 1); }

  static GridSpec cube(int d, int n, int nodes, double half_width = 1.0);
};

/// |y| for a point of R^d with codimension n.
double y_norm(const Point& z, int d, int n);

/// Uniform tensor grid. Node coordinates are lo + i*h per axis. Nodes and cells
/// are numbered lexicographically with the first axis slowest.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int codim() const { return spec_.n; }
  int x_dim() const { return spec_.d - spec_.n; }
  int nodes_per_axis() const { return spec_.nodes_per_axis; }
  int cells_per_axis() const { return spec_.nodes_per_axis - 1; }
  double h() const { return h_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_cells() const { return num_cells_; }
  int nodes_per_cell() const { return 1 << spec_.d; }

  double coord(int axis, int i) const { return spec_.bounds[axis].lo + i * h_; }
  Point node(std::size_t idx) const;
  std::array<int, kMaxDim> node_multi(std::size_t idx) const;
  std::size_t node_index(const std::array<int, kMaxDim>& m) const;

  std::array<int, kMaxDim> cell_multi(std::size_t cell) const;
  std::size_t cell_index(const std::array<int, kMaxDim>& m) const;
  Point cell_lower(std::size_t cell) const;
  Point cell_center(std::size_t cell) const;
  /// Global node indices of the cell corners; corner c has local offset bit k
  /// set when it sits on the upper face of axis k.
  std::array<std::size_t, 8> cell_nodes(std::size_t cell) const;

  double y_norm(const Point& z) const { return degen::y_norm(z, spec_.d, spec_.n); }
  bool contains(const Point& z, double tol = 1e-12) const;
  /// Cell holding z (upper faces map into the last cell) and the local
  /// coordinates of z in [0,1]^d.
  std::size_t locate(const Point& z, Point& local) const;

 private:
  GridSpec spec_;
  double h_;
  std::size_t num_nodes_;
  std::size_t num_cells_;
};

/// Nodal field on a grid, one value per node.
using Field = std::vector<double>;

/// Multilinear shape value of local corner c at local coordinates t.
double q1_shape(int d, int corner, const Point& t);
/// Gradient (physical units, divided by h) of local corner c at t.
Point q1_shape_grad(int d, int corner, const Point& t, double h);

/// Multilinear interpolant of a nodal field at z.
double interpolate(const Grid& grid, std::span<const double> field, const Point& z);
/// Gradient of the multilinear interpolant inside a cell at local coordinates t.
Point cell_gradient(const Grid& grid, std::span<const double> field, std::size_t cell,
                    const Point& t);

enum class NodeClass : std::uint8_t { interior, sigma0, hole_constrained, outer_boundary, excluded };
enum class DomainShape { box, ball };

std::string to_string(NodeClass c);

struct DomainMask {
  std::vector<NodeClass> cls;
  /// 1 for nodes that lie on the outer boundary of the computational domain,
  /// independent of any sigma0/hole class they carry.
  std::vector<std::uint8_t> on_outer;
  /// 1 for cells taking part in assembly.
  std::vector<std::uint8_t> active_cell;
  double eps = 0.0;
  DomainShape shape = DomainShape::box;
  double radius = 1.0;

  std::size_t count(NodeClass c) const;
  bool constrained(std::size_t node) const {
    return cls[node] != NodeClass::interior && cls[node] != NodeClass::excluded;
  }
};

DomainMask classify_nodes(const Grid& grid, DomainShape shape, double eps, double radius = 1.0);

/// Omega_r = { A^{-1} y . y < r^2 } for n = d.
struct EllipsoidRegion {
  Matrix A;
  double r = 1.0;

  EllipsoidRegion(Matrix A_, double r_);
  /// rho_A(y) = sqrt(A^{-1} y . y).
  double rho(const Point& y, int d) const;
  bool contains(const Point& y, int d) const { return rho(y, d) < r; }
  const Matrix& inverse() const { return inv_; }
  double max_eigenvalue() const { return lmax_; }

 private:
  Matrix inv_;
  double lmax_ = 1.0;
};

/// Fraction of each cell inside the ellipsoid, from subsamples^d midpoint
/// samples per cell (default 4 per axis). Requires n = d.
std::vector<double> ellipsoid_membership(const Grid& grid, const EllipsoidRegion& region,
                                         int subsamples = 4);

/// Nodal values on the sigma0 nodes in node-index order. Requires eps = 0.
std::vector<double> restrict_to_sigma0(std::span<const double> field, const DomainMask& mask);

/// CSV dump: node,x0,..,x{d-1},class.
void write_mask_csv(std::ostream& os, const Grid& grid, const DomainMask& mask);

}  // namespace degen
