#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cardpen/problem.hpp"
#include "cardpen/symmat.hpp"

namespace cardpen {

/// Certified solution of the semidefinite relaxation
///
///   psi(rho) = min lambda_max(sum_i Y_i)  s.t.  Y_i >= B_i, Y_i >= 0
///            = max sum_i Tr(X^{1/2} B_i X^{1/2})_+  s.t.  X >= 0, Tr X = 1.
///
/// `blocks` is primal feasible and `dual` is dual feasible, so
/// g_lower <= psi <= f_upper regardless of how far the solver got.
struct RelaxationSolution {
  std::vector<SymMatrix> blocks;  // Y_i, m x m
  SymMatrix dual;                 // X, m x m, unit trace
  double f_upper = 0.0;
  double g_lower = 0.0;
  double gap = 0.0;
  Index rank_x = 0;
  bool exact = false;
  bool converged = false;
  std::vector<double> alphas;  // Tr(X^{1/2} B_i X^{1/2})_+
  int outer_iterations = 0;
  int newton_iterations = 0;
};

/// lambda_max(sum_i Y_i). Throws ValidationError naming the first block that
/// violates Y_i >= B_i or Y_i >= 0 beyond -1e-8 (1 + |B_i|).
double psi_upper(const std::vector<SymMatrix>& blocks, const Instance& inst);

/// sum_i Tr(X^{1/2} B_i X^{1/2})_+. Throws ValidationError unless X is PSD
/// with unit trace (1e-10).
double psi_lower(const SymMatrix& x, const Instance& inst);

/// Per-index positive masses Tr(X^{1/2} B_i X^{1/2})_+.
std::vector<double> dual_alphas(const SymMatrix& x, const Instance& inst);

struct InnerMax {
  SymMatrix p;
  double value = 0.0;
};

/// max <P, B> over X >= P >= 0, attained at P = X^{1/2} Pi_+ X^{1/2} where
/// Pi_+ projects onto the nonnegative eigenspace of X^{1/2} B X^{1/2}.
InnerMax inner_max_P(const SymMatrix& x, const SymMatrix& b);

struct SolverOptions {
  double tol = 1e-6;             // relative sandwich gap
  int max_outer = 40;            // barrier parameter updates
  int max_newton = 100;          // per centering
  double size_guard = 5e4;       // refuse when n * m^2 exceeds this
  double rank_tol = 1e-6;        // relative cutoff for rank(X)
};

/// Log-barrier path following on the epigraph form
///
///   min t  s.t.  t I - sum_i Y_i > 0,  Y_i - B_i > 0,  Y_i > 0,
///
/// with damped Newton centering and a barrier weight multiplied by 10 per
/// outer step. The dual X is the trace-normalized inverse of the epigraph
/// slack. Both bounds are recomputed from (Y, X) by psi_upper / psi_lower.
///
/// Throws GuardError when n * m^2 exceeds the guard and ValidationError
/// in the trivial regime. On iteration cap, returns the best certified
/// sandwich with converged = false.
RelaxationSolution solve_relaxation(const Instance& inst, const SolverOptions& opts = {});

/// Best feasible solution from Gaussian rounding of the dual X plus the
/// deterministic top-eigenvector candidate. Each round draws g ~ N(0, I_m),
/// sets z = X^{1/2} g and keeps indices with (a_i^T z)^2 > rho z^T z.
/// Round r uses its own stream seeded from (seed, r).
PrimalSolution randomized_round(const RelaxationSolution& relax, const Instance& inst,
                                int rounds, std::uint64_t seed);

struct ExactnessCertificate {
  bool exact = false;
  Index rank = 0;
  Vector spectrum;  // eigenvalues of X, descending
  double gap = 0.0;
  std::string report;
};

/// Rank-one X at relative threshold tau_rank together with a gap within tol
/// (relative to max(1, f_upper)) certifies phi = psi.
ExactnessCertificate exactness_certificate(const RelaxationSolution& relax,
                                           double tau_rank = 1e-6, double tol = 1e-6);

}  // namespace cardpen
