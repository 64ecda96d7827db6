#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "degen/grid.hpp"
#include "degen/problem.hpp"
#include "degen/weight.hpp"

namespace degen {

/// Compressed-row sparse matrix with sorted column indices.
struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double at(std::size_t i, std::size_t j) const;
  /// Position of (i,j) in val, or npos.
  std::size_t find(std::size_t i, std::size_t j) const;
  bool symmetric(double tol) const;
  Matrix to_dense() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Full nodal Galerkin system before constraints.
struct LinearSystem {
  CsrMatrix K;
  std::vector<double> rhs;
};

/// System restricted to free DOFs after symmetric elimination.
struct ReducedSystem {
  CsrMatrix K;
  std::vector<double> rhs;
  std::vector<std::size_t> free_to_global;
  /// Full nodal vector holding the prescribed values (zero on free nodes).
  std::vector<double> prescribed;
  std::size_t num_constrained = 0;

  /// Scatter a free-DOF vector back into a full nodal field.
  Field expand(std::span<const double> x) const;
};

/// Galerkin matrix and load for the weak form
///   int w A grad u . grad phi = int w (f phi - F . grad phi)
/// over the active cells of the mask.
LinearSystem assemble(const CellIntegrator& integ, const DomainMask& mask,
                      const CoefficientField& A, const ScalarFn& f, const VectorFn& F);
LinearSystem assemble(const ProblemSpec& spec, const Grid& grid, const DomainMask& mask);

class ConstraintConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prescribes psi on sigma0 and hole nodes, g on outer-boundary nodes, and
/// eliminates them symmetrically. Nodes that are both outer and singular must
/// receive matching values from psi and g.
ReducedSystem apply_dirichlet(const LinearSystem& sys, const Grid& grid, const DomainMask& mask,
                              const ScalarFn& psi, const ScalarFn& g);

enum class CgStatus { converged, max_iterations, indefinite };
std::string to_string(CgStatus s);

struct CgResult {
  std::vector<double> x;
  CgStatus status = CgStatus::converged;
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;

  bool converged() const { return status == CgStatus::converged; }
};

/// Jacobi-preconditioned conjugate gradients with a negative-curvature guard.
CgResult solve_cg(const CsrMatrix& K, std::span<const double> rhs, double tol = 1e-10,
                  int maxit = 20000);

/// J(v) = int w (A grad v . grad v / 2 - f v + F . grad v).
double energy(const CellIntegrator& integ, const DomainMask& mask, const CoefficientField& A,
              const ScalarFn& f, const VectorFn& F, std::span<const double> field);

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, CgResult r) : std::runtime_error(what), result(std::move(r)) {}
  CgResult result;
};

struct SolveResult {
  Grid grid;
  DomainMask mask;
  Field u;
  double relative_residual = 0.0;
  int iterations = 0;
  double energy = 0.0;
  double wall_seconds = 0.0;
  std::size_t free_dofs = 0;
};

/// Build, assemble, constrain, solve. Throws SolverError when CG fails.
SolveResult solve(const ProblemSpec& spec);

/// Max over free nodes of |K u - b| relative to max |b| (Galerkin residual).
double galerkin_residual(const LinearSystem& sys, const DomainMask& mask, std::span<const double> u);

}  // namespace degen
