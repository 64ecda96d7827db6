#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "degen/fem.hpp"
#include "degen/problem.hpp"
#include "degen/weight.hpp"

namespace degen {

/// rho(z) = sqrt(M z . z) over all d coordinates; M = A^{-1} gives the
/// ellipsoidal radius, M = I the Euclidean one.
class RadialGauge {
 public:
  RadialGauge(const Matrix& M, int d);
  static RadialGauge euclidean(int d) { return RadialGauge(Matrix::Identity(d, d), d); }
  static RadialGauge ellipsoidal(const Matrix& A);

  double operator()(const Point& z) const;
  /// Lower and upper bounds of rho over an axis-aligned cell.
  std::pair<double, double> range(const Point& lo, double h) const;
  int dim() const { return d_; }

 private:
  Matrix M_;
  int d_;
  double min_eig_;
};

using FieldIntegrand = std::function<double(const Point&, double, const Point&)>;

/// Integral of weight * g(z, u_h, grad u_h) over {r_lo <= rho < r_hi}. Cells
/// cut by the band boundary are integrated with a refined tensor rule
/// (refine^d Gauss sub-cells) and a pointwise indicator.
double radial_band_integral(const CellIntegrator& integ, std::span<const double> field,
                            const RadialGauge& rho, double r_lo, double r_hi,
                            const FieldIntegrand& g, int refine = 4);

struct FrequencyProfile {
  Matrix A;
  double a = 0.0;
  int n = 2;
  double shell = 0.0;
  std::vector<double> radii;
  std::vector<double> E_raw;  ///< int_{Omega_r} w A grad u . grad u
  std::vector<double> H_raw;  ///< shell average of w u^2 (A-adapted surface measure)
  std::vector<double> E;
  std::vector<double> H;
  std::vector<double> N;  ///< E/H, NaN where H = 0
};

/// Scaled energy E = r^{-(n+a-2)} E_raw and boundary mass
/// H = r^{-(n+a-1)} H_raw on ellipsoids Omega_r = {A^{-1} y . y < r^2}, n = d.
/// H_raw is the shell average (1/shell) int_{|rho - r| < shell/2} w u^2, which
/// is the surface integral against dsigma/|grad rho|; shell defaults to h.
/// Cut cells use refine^d sub-cells (0 picks 16 in 2D, 4 in 3D).
FrequencyProfile frequency_profile(const CellIntegrator& integ, std::span<const double> u,
                                   const Matrix& A, const std::vector<double>& radii,
                                   double shell = 0.0, int refine = 0);

struct IdentityCheck {
  double max_relative_error = 0.0;
  std::vector<double> radii;
  std::vector<double> dH;
  std::vector<double> two_E_over_r;
  bool passed = false;
};

/// Central-difference dH/dr against 2E/r at interior radii.
IdentityCheck check_derivative_identity(const FrequencyProfile& p, double tol = 0.05);

struct SpectralMargin {
  double E_raw = 0.0;
  double H_raw = 0.0;
  double margin = 0.0;    ///< E_raw - (2-a-n)/r H_raw
  double scale = 0.0;     ///< E_raw + (2-a-n)/r H_raw
  double relative = 0.0;  ///< margin / ((2-a-n)/r H_raw), 0 when H_raw = 0
  bool passed = false;
};

/// int_{Omega_r} w A grad v . grad v >= (2-a-n)/r int_{dOmega_r} w v^2 in the
/// A-adapted surface measure. v must vanish on the constrained nodes of mask.
SpectralMargin spectral_trace_check(const CellIntegrator& integ, const DomainMask& mask,
                                    std::span<const double> v, const Matrix& A, double r,
                                    double tol = 1e-8);

/// Extremal field rho_A(y)^{2-a-n} damped by a linear ramp to zero on
/// rho_A <= eps: max(0, min(1, (rho_A - eps)/eps)).
Field extremal_field(const Grid& grid, const Matrix& A, double a, double eps);

/// Random fields for the spectral check: smooth trigonometric sums times a
/// ramp vanishing on |y| <= eps.
std::vector<Field> random_admissible_fields(const Grid& grid, int count, std::uint64_t seed,
                                            double eps, double ramp_width = 0.25);

enum class GrowthFamily { homogeneous, subcritical, zero };
std::string to_string(GrowthFamily f);
GrowthFamily growth_family_from(const std::string& name);

struct GrowthRecord {
  double gamma = 0.0;  ///< 2 - a - n
  double r0 = 0.0;
  std::vector<double> radii;
  std::vector<double> H;
  std::vector<double> bound;  ///< H(r0) (r/r0)^{2 gamma} (1 - tol)
  bool degenerate = false;
  bool passed = false;
};

struct GrowthConfig {
  GridSpec grid;
  double a = -1.5;
  Matrix A;  ///< empty means identity
  GrowthFamily family = GrowthFamily::homogeneous;
  double r0 = 0.25;
  std::vector<double> radii;
  double tol = 0.05;
  QuadratureRule quad;
  SolverOptions solver;
};

/// Solves the homogeneous problem with the family's outer data and zero data
/// on the singular set, then checks H(u,r) >= H(u,r0)(r/r0)^{2(2-a-n)}(1-tol).
GrowthRecord growth_validator(const GrowthConfig& cfg);

enum class InequalityId { hardy, poincare, trace_poincare, sobolev, caccioppoli, moser, spectral_trace };
std::string to_string(InequalityId id);

struct InequalityRecord {
  InequalityId id;
  int field = 0;
  double ratio = 0.0;
};

struct InequalitySummary {
  InequalityId id;
  double max_ratio = 0.0;
  bool finite = true;
};

/// LHS/RHS of the Hardy, Poincaré, trace-Poincaré and Sobolev inequalities on
/// B_R for each field; zero fields are skipped. Fields must vanish on the
/// constrained nodes of mask. Sobolev uses p = 2d/(d-2), or p = 4 for d = 2.
std::vector<InequalityRecord> inequality_battery(const CellIntegrator& integ, const DomainMask& mask,
                                                 const std::vector<Field>& fields, double R);
std::vector<InequalitySummary> summarize(const std::vector<InequalityRecord>& records);

/// Analytic random test fields evaluated on a grid; identical functions on
/// every grid for a given seed.
std::vector<Field> battery_fields(const Grid& grid, int count, std::uint64_t seed, double eps = 0.0);

struct StabilityRow {
  InequalityId id;
  double coarse = 0.0;
  double fine = 0.0;
  double relative_change = 0.0;
};

/// Battery on nodes and 2 nodes - 1 per axis over [-1,1]^d; per-inequality
/// change of the max ratio.
std::vector<StabilityRow> inequality_refinement(int d, int n, double a, int nodes, int count,
                                                std::uint64_t seed, double R = 0.9,
                                                QuadratureRule quad = {});

/// int_{B_R1} w |grad u|^2 over the bracket
/// (R2-R1)^{-2} int_{B_R2} w u^2 + |f|_{L^{2,a}} |u|_{L^{2,a}} + int_{B_R2} w |F|^2 1_{u != 0}.
/// 0/0 is reported as 0.
double caccioppoli_ratio(const CellIntegrator& integ, std::span<const double> u, const ScalarFn& f,
                         const VectorFn& F, double R1, double R2);

/// max_{B_r} |u| over |u|_{L^{2,a}(B_R)} + |f|_{L^{2,a}(B_R)} + |F|_{L^{4,a}(B_R)}.
double moser_ratio(const CellIntegrator& integ, std::span<const double> u, const ScalarFn& f,
                   const VectorFn& F, double r, double R);

}  // namespace degen
