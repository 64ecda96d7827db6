#pragma once

#include <span>
#include <string>
#include <vector>

#include "degen/fem.hpp"
#include "degen/problem.hpp"
#include "degen/weight.hpp"

namespace degen {

/// Values on a uniform tensor lattice (grid nodes or cell centres).
struct Lattice {
  int d = 2;
  std::array<int, 3> size{1, 1, 1};
  Point origin{0, 0, 0};
  double spacing = 1.0;
  std::vector<double> values;

  Point point(std::size_t idx) const;
  static Lattice nodes(const Grid& grid, std::span<const double> field);
};

struct OscillationProfile {
  std::vector<double> scales;
  std::vector<double> oscillation;
};

/// Max over axis-aligned cubes of side r (lattice-snapped) of max - min of the
/// values inside the cube and the ball of radius region_radius.
OscillationProfile oscillation_profile(const Lattice& lat, const std::vector<double>& scales,
                                       double region_radius);

struct RateReport {
  double exponent = 0.0;
  double raw_slope = 0.0;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  double residual = 0.0;
  double cap = 1.0;
  bool capped = false;
  /// Set by gradient fits when a component oscillates more at small scales
  /// (slope <= 0.1): the gradient is not Hölder continuous, so no C^1 claim.
  bool non_c1 = false;
  std::size_t scales_used = 0;
  OscillationProfile profile;
};

/// Fit scales: 0.25 * 2^{-k/2} snapped to multiples of the spacing, down to 4
/// spacings. Throws PreconditionError when fewer than 4 distinct scales fit.
std::vector<double> fit_scales(double spacing, double r_max = 0.25, double floor_mult = 4.0);

/// Slope of log oscillation against log scale on B_region, clamped to [0, 1].
RateReport holder_exponent_fit(const Grid& grid, std::span<const double> field,
                               double region_radius = 0.5);
RateReport holder_exponent_fit(const Lattice& lat, double region_radius = 0.5);

/// Cell-centre gradient of the multilinear field, each component fitted
/// separately; the minimum exponent is reported. Components that are constant
/// to round-off are skipped.
RateReport gradient_holder_fit(const Grid& grid, std::span<const double> field,
                               double region_radius = 0.5);

struct SweepRow {
  double eps = 0.0;
  double norm_h1 = 0.0;        ///< |u_eps|_{H^{1,a}}
  double diff_h1 = 0.0;        ///< |u_eps - u_0|_{H^{1,a}}
  double relative_residual = 0.0;
  int iterations = 0;
};

struct EpsilonSweep {
  double u0_norm = 0.0;
  double data_norm = 0.0;  ///< |u_0|_{H^{1,a}} + |f|_{L^{2,a}} + |F|_{L^{2,a}}
  double bound_ratio = 0.0;  ///< max_eps |u_eps|_{H^{1,a}} / data_norm
  std::vector<SweepRow> rows;
  Field u0;
  std::vector<Field> fields;
};

/// Solves the spec for eps = 0 and every eps in the schedule on the same grid.
/// Hole nodes carry psi, which for psi = 0 is the trivial extension.
EpsilonSweep epsilon_sweep(const ProblemSpec& spec, const std::vector<double>& schedule);

struct ConormalRow {
  double eps = 0.0;
  double max_grad = 0.0;
  double max_flux = 0.0;
  std::size_t nodes = 0;
};

struct ConormalTrace {
  std::vector<ConormalRow> rows;
  double rate = 0.0;  ///< slope of log max|grad u_eps| against log eps
  double flux_rate = 0.0;
};

/// Gradient and normal flux (A grad u + F).y/|y| at free nodes next to the hole
/// with one-sided differences into the free region.
ConormalRow hole_boundary_trace(const Grid& grid, const DomainMask& mask, std::span<const double> u,
                                const CoefficientField& A, const VectorFn& F);

/// Requires a + n in (0,1) and a strictly decreasing schedule in (h, 0.5).
ConormalTrace conormal_decay(const ProblemSpec& spec, const std::vector<double>& schedule);

struct BandRow {
  double band = 0.0;
  double x_residual = 0.0;
  double normal_residual = 0.0;
  std::size_t samples = 0;
};

/// Over cells with centre |y| <= rho and |x_k| <= x_window: max |grad_x u - grad_x psi|
/// and max_i |(A grad u + F).e_{y_i}|. Requires a + n in (0,1).
std::vector<BandRow> limiting_bc_residual(const Grid& grid, std::span<const double> u,
                                          const ProblemSpec& spec, const std::vector<double>& bands,
                                          double x_window = 0.5);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double* residual = nullptr);

}  // namespace degen
