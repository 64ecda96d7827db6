#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degen/grid.hpp"

namespace degen {

enum class WeightMode { straight, composed };

/// The singular weight |y|^a, optionally multiplied by delta_tilde(z)^a.
struct WeightSpec {
  double a = -1.5;
  int d = 2;
  int n = 2;
  WeightMode mode = WeightMode::straight;
  std::function<double(const Point&)> delta_tilde;

  WeightSpec() = default;
  /// Throws PreconditionError unless a + n lies in (0,2).
  WeightSpec(double a, int d, int n);
  static WeightSpec composed(double a, int d, int n, std::function<double(const Point&)> dt);

  void validate() const;
  /// 2 - a - n, the homogeneity of the model solution.
  double model_exponent() const { return 2.0 - a - n; }
};

/// |y|^a (times delta_tilde^a in composed mode). |y| = 0 is rejected.
double weight_eval(const WeightSpec& w, const Point& z);

struct QuadratureRule {
  int gauss_order = 3;
  int grading_depth = 4;
};

/// 1D rule on [0,1]: nodes and weights.
struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre rule on [0,1].
Rule1D gauss_legendre(int order);
/// Gauss-Jacobi rule on [0,1] for the weight u^beta, beta > -1.
Rule1D gauss_jacobi(int order, double beta);

/// Axis-aligned box used for graded sub-cells.
struct Box {
  Point lo{0, 0, 0};
  Point size{0, 0, 0};
  bool singular = false;  ///< y-projection has the origin as a corner
};

/// Dyadic subdivision of a cell toward {y = 0}: the y-axes of a cell whose
/// y-projection touches the origin are halved `depth` times, refining only the
/// child that still touches it.
std::vector<Box> graded_leaves(const Box& cell, int d, int n, int depth);

struct QuadPoint {
  Point z;
  double measure;  ///< quadrature weight times the singular weight at z
};

/// Per-cell quadrature for weighted integrals. Regular cells get a tensor
/// Gauss rule; cells touching {y = 0} are graded, and the innermost leaf uses
/// a Duffy collapse in y with Gauss-Jacobi in the radial variable so that the
/// weight is integrated without evaluating it on the singular set.
class CellIntegrator {
 public:
  CellIntegrator(const Grid& grid, const WeightSpec& w, QuadratureRule rule = {});

  const Grid& grid() const { return *grid_; }
  const WeightSpec& weight() const { return w_; }
  const QuadratureRule& rule() const { return rule_; }

  bool touches_singular(std::size_t cell) const;
  /// Quadrature points with the weight already folded into `measure`.
  void weighted_points(std::size_t cell, std::vector<QuadPoint>& out) const;
  /// Same points in cell-local coordinates [0,1]^d (for shape functions).
  void weighted_points_local(std::size_t cell, std::vector<QuadPoint>& out,
                             std::vector<Point>& local) const;

 private:
  void append_box(const Box& b, std::vector<QuadPoint>& out) const;

  const Grid* grid_;
  WeightSpec w_;
  QuadratureRule rule_;
  Rule1D gl_;
  Rule1D gl_angle_;
  Rule1D gj_;
};

/// Integral over one cell of weight * integrand(z).
double element_weighted_integral(const CellIntegrator& integ, std::size_t cell,
                                 const std::function<double(const Point&)>& integrand);

/// Region over which norms are taken: whole grid or a ball centred at the
/// origin; cells are weighted by the fraction of 4^d midpoint samples inside.
struct Region {
  enum class Kind { all, ball } kind = Kind::all;
  double radius = 1.0;

  static Region all() { return {}; }
  static Region ball(double r) { return {Kind::ball, r}; }
  std::string describe() const;
};

std::vector<double> region_fractions(const Grid& grid, const Region& region, int subsamples = 4);

enum class NormId { lp, h1, linf };

struct NormValue {
  double value = 0.0;
  NormId id = NormId::lp;
  double p = 2.0;
  std::string region;

  std::string name() const;
};

/// Sum over cells of fraction * cell integral of weight * g(z, u_h(z), grad u_h(z)).
double weighted_field_integral(
    const CellIntegrator& integ, std::span<const double> field, const Region& region,
    const std::function<double(const Point&, double, const Point&)>& g);

NormValue weighted_lp_norm(const CellIntegrator& integ, std::span<const double> field, double p,
                           const Region& region);
NormValue weighted_h1_norm(const CellIntegrator& integ, std::span<const double> field,
                           const Region& region);
/// Max |field| over nodes inside the region.
NormValue linf_norm(const Grid& grid, std::span<const double> field, const Region& region);

/// Weighted L^{p,a} norm of an analytic scalar / vector function.
double weighted_function_lp(const CellIntegrator& integ, const Region& region, double p,
                            const std::function<double(const Point&)>& fn);

/// 2d/(d-2) for d > 2; empty for d = 2, where any finite p is admissible.
std::optional<double> sobolev_exponent(int d);

}  // namespace degen
