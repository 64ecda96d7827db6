#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "degen/fem.hpp"
#include "degen/problem.hpp"

namespace degen {

/// Graph y = phi(x) of the singular manifold, phi(0) = 0. Only d > n.
struct Parametrization {
  std::string name;
  int d = 3;
  int n = 2;
  std::string holder_class = "C1,alpha";
  /// Full-length vector with phi(x) in the y slots and zeros in the x slots.
  std::function<Point(const Point&)> offset;
  /// J_phi in the lower-left block of a d x d matrix, zeros elsewhere.
  std::function<Mat3(const Point&)> jacobian;

  static Parametrization zero(int d, int n);
  /// phi(x) = (amplitude * sin(x_1), 0, ...).
  static Parametrization sine_graph(int d, int n, double amplitude = 0.2);
  /// phi(x) = (sum_k c_k x_1^k, 0, ...) with k starting at 1.
  static Parametrization polynomial(int d, int n, std::vector<double> coeffs);
  /// Registry lookup: "zero", "sine-graph", "polynomial".
  static Parametrization by_name(const std::string& name, int d, int n,
                                 const std::vector<double>& params = {});
  static const std::vector<std::string>& registry();
};

/// Phi(x, y) = (x, y + phi(x)); det J_Phi = 1.
class Straightening {
 public:
  explicit Straightening(Parametrization p);

  const Parametrization& param() const { return p_; }
  int dim() const { return p_.d; }
  Point forward(const Point& z) const;
  Point inverse(const Point& z) const;
  Mat3 jacobian(const Point& z) const;
  Mat3 jacobian_inverse(const Point& z) const;
  double det(const Point& z) const;

 private:
  Parametrization p_;
};

/// Weight delta comparable to the distance to the graph.
struct AdmissibleWeight {
  std::string name;
  /// delta at a point in curved coordinates.
  ScalarFn delta;
  /// Closed form of delta(Phi(x,y))/|y| when known; otherwise the ratio is
  /// evaluated directly and its limit at |y| = 0 by a small vertical offset.
  ScalarFn delta_tilde_exact;

  /// delta(z) = |y - phi(x)|, for which delta_tilde is identically 1.
  static AdmissibleWeight vertical_distance(const Parametrization& p);
  /// delta = c * dist_Gamma by nearest-point search on the graph.
  static AdmissibleWeight scaled_graph_distance(const Parametrization& p, double c,
                                                double x_half_width = 1.5);

  double tilde(const Straightening& s, const Point& straight) const;
};

/// Nearest-point distance to the graph over x in [-half_width, half_width]:
/// brute-force parameter sampling followed by a local golden-section polish.
double graph_distance(const Parametrization& p, const Point& z, double half_width = 1.5,
                      int samples = 10000);

struct AdmissibilityReport {
  double c0 = 0.0;
  double c1 = 0.0;
  double holder_quotient = 0.0;
  double holder_alpha = 0.5;
  double delta_tilde_min = 0.0;
  double delta_tilde_max = 0.0;
  int samples = 0;
  bool admissible = false;
};

/// Sampled bounds c0 <= delta/dist_Gamma <= c1 over points with dist > 1e-6
/// and the largest sampled Hölder quotient of delta_tilde. An estimate only.
AdmissibilityReport admissibility_check(const AdmissibleWeight& w, const Parametrization& p,
                                        int samples = 400, std::uint64_t seed = 11,
                                        double half_width = 0.9, double holder_alpha = 0.5);

/// Problem posed around a curved manifold; spec.grid is the straight
/// computational grid and spec.weight carries (a, d, n).
struct CurvedProblem {
  ProblemSpec spec;
  Parametrization phi;
  AdmissibleWeight delta;
};

struct PushedProblem {
  ProblemSpec spec;
  /// delta_tilde^a J^{-1} (A o Phi) J^{-T}, the full straightened coefficient.
  CoefficientField effective;
  double lambda_tilde = 0.0;
  double Lambda_tilde = 0.0;
};

/// Straightened problem: composed weight delta_tilde^a |y|^a, coefficient
/// J^{-1}(A o Phi)J^{-T}, data f o Phi, J^{-1} F o Phi, psi o Phi(., 0), g o Phi.
/// Throws EllipticityError if the transported coefficient degenerates at a node.
PushedProblem push_problem(const CurvedProblem& cp);

struct CurvedResidualRow {
  double band = 0.0;
  double normal = 0.0;
  double tangential = 0.0;
  std::size_t samples = 0;
};

/// Max of |(A grad u + F).nu| and |(grad u - grad psi).tau| at cell centres
/// whose vertical distance |y - phi(x)| is at most each band radius and whose
/// x-part lies in [-x_window, x_window]. Frames come from the graph tangents.
std::vector<CurvedResidualRow> curved_bc_residual(const Grid& grid, std::span<const double> u,
                                                  const CoefficientField& A, const VectorFn& F,
                                                  const ScalarFn& psi, const Parametrization& p,
                                                  const std::vector<double>& bands,
                                                  double x_window = 0.5);

/// Straight field sampled at Phi^{-1} of every curved node. Throws
/// PreconditionError naming the count of curved nodes whose preimage falls
/// outside the straight grid.
Field pullback_field(const Grid& straight, std::span<const double> field, const Straightening& s,
                     const Grid& curved);

/// Curved counterpart of the radial model: u = |y - phi(x)|^{2-a-n}, A = I,
/// f = 0 and F chosen so that the straightened problem is the model equation
/// with coefficient J^{-1}J^{-T}. delta is the vertical distance.
struct CurvedModel {
  CurvedProblem problem;
  ScalarFn exact;
  VectorFn exact_flux;  ///< A grad u + F in curved coordinates
};
CurvedModel curved_radial_model(const Parametrization& p, double a, const GridSpec& straight);

}  // namespace degen
