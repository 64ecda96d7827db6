#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "degen/fem.hpp"
#include "degen/jet.hpp"
#include "degen/problem.hpp"

namespace degen {

/// C^{0,alpha} when a+n in [1,2), C^{1,alpha} when a+n in (0,1).
enum class Regime { c0alpha, c1alpha };
Regime regime_of(double a, int n);
std::string to_string(Regime r);

struct CaseParams {
  int d = 2;
  int n = 2;
  double a = -1.5;
  /// Constant coefficient; empty means the identity.
  Matrix A;
  /// Slope vector for linear_x (first d-n entries used); defaults to e_1.
  std::vector<double> c;
};

/// Closed-form solution/forcing pair of
///   -div(|y|^a A grad u) = |y|^a f + div(|y|^a F).
struct ManufacturedCase {
  std::string name;
  std::string role;
  int d = 2;
  int n = 2;
  double a = -1.5;
  CoefficientField A;
  ScalarFn u;
  VectorFn grad_u;
  ScalarFn f;
  VectorFn F;
  ScalarFn psi;
  /// Hölder exponent of u (values above 1 mean C^{1, exponent-1}).
  double expected_exponent = 2.0;
  Regime regime = Regime::c0alpha;

  WeightSpec weight() const { return WeightSpec(a, d, n); }
  /// Problem on `grid` with outer data g = u, hole radius eps.
  ProblemSpec problem(const GridSpec& grid, double eps = 0.0, QuadratureRule quad = {},
                      SolverOptions solver = {}) const;
  /// Nodal samples of u.
  Field sample(const Grid& grid) const;
};

struct CatalogEntry {
  std::string name;
  std::string validity;
  std::string role;
};

const std::vector<CatalogEntry>& catalog();

/// Throws PreconditionError when (d, n, a) lie outside the case's validity.
ManufacturedCase make_case(std::string_view name, const CaseParams& params);

/// f = -|y|^{-a} div(|y|^a (A grad u + F)) from closed-form templates of u and
/// F, differentiated exactly with second-order jets. A is constant.
template <class UFn, class FFn>
double derived_forcing(const UFn& u, const FFn& F, const Mat3& A, double a, int d, int n,
                       const Point& z) {
  std::array<Jet, 3> zj;
  for (int k = 0; k < 3; ++k) zj[k] = k < d ? Jet::variable(z[k], k) : Jet(0.0);
  const Jet uj = u(zj);
  const std::array<Jet, 3> Fj = F(zj);
  double r2 = 0.0;
  for (int k = d - n; k < d; ++k) r2 += z[k] * z[k];
  double flux_y = 0.0;  // y . (A grad u + F)
  double div = 0.0;     // A : Hess u + div F
  for (int i = 0; i < d; ++i) {
    double Agu = 0.0;
    for (int j = 0; j < d; ++j) {
      Agu += A(i, j) * uj.g[j];
      div += A(i, j) * uj.H[i][j];
    }
    div += Fj[i].g[i];
    if (i >= d - n) flux_y += z[i] * (Agu + Fj[i].v);
  }
  return -(a * flux_y / r2 + div);
}

struct ConsistencyReport {
  double max_residual = 0.0;
  double scale = 1.0;
  double max_gradient_mismatch = 0.0;
  bool passed = false;
};

/// Strong-form residual of the case at random points with |y| >= 0.1, using
/// fourth-order central differences of |y|^a (A grad u + F).
ConsistencyReport forcing_consistency(const ManufacturedCase& c, int samples,
                                      std::uint64_t seed = 7, double tol = 1e-6);

enum class ErrorNorm { linf_half_ball, l2a, h1a };

/// Error between a nodal field and the exact solution of the case.
double exact_error(const Grid& grid, std::span<const double> uh, const ManufacturedCase& c,
                   ErrorNorm norm, QuadratureRule quad = {});

}  // namespace degen
