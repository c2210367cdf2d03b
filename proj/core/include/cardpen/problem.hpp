#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cardpen/symmat.hpp"

namespace cardpen {

enum class Regime { Penalized, Trivial };
enum class NormModel { Equality, Inequality };

std::string_view to_string(Regime r);
std::string_view to_string(NormModel m);

/// A preprocessed cardinality-penalized problem
///
///   phi(rho) = max_{|x|_2 = 1} x^T Sigma x - rho * Card(x).
///
/// Indices of `sigma` are "internal": the diagonal is sorted in descending
/// order and, when screening was requested, every index with Sigma_ii <= rho
/// has been removed. `perm[k]` is the caller index of internal index k.
/// Indices with an exactly zero diagonal are always removed. In the trivial
/// regime (rho >= Sigma_11) nothing is screened.
struct Instance {
  SymMatrix sigma;          // internal (ordered, screened)
  SymMatrix ordered_sigma;  // ordered, unscreened
  SymMatrix caller_sigma;   // as supplied
  RankFactor factor;        // sigma = factor.a^T factor.a
  double rho = 0.0;
  std::vector<Index> perm;          // internal -> caller
  std::vector<Index> ordered_perm;  // ordered_sigma index -> caller
  std::vector<Index> screened;      // caller indices removed, ascending
  bool trivial = false;

  Index n() const { return sigma.dim(); }
  Index m() const { return factor.rank; }
  Index caller_dim() const { return caller_sigma.dim(); }
  double sigma11() const { return ordered_sigma(0, 0); }

  /// Column a_i of the rank factor.
  Vector a(Index i) const { return factor.a.col(i); }
  /// B_i = a_i a_i^T - rho I_m.
  SymMatrix b(Index i) const;

  /// Scatters an internal vector into caller indexing (zeros elsewhere).
  Vector to_caller(const Vector& internal) const;
};

/// Sparsity indicator u in [0,1]^n over internal indices.
class Pattern {
 public:
  explicit Pattern(Vector u);
  static Pattern from_support(Index n, const std::vector<Index>& support);

  const Vector& u() const { return u_; }
  Index size() const { return u_.size(); }
  bool binary() const { return binary_; }
  double cardinality() const { return u_.sum(); }
  /// Indices with u_i == 1 (binary patterns only).
  std::vector<Index> support() const;

 private:
  Vector u_;
  bool binary_ = true;
};

struct PrimalSolution {
  Vector x;  // caller indexing
  double objective = 0.0;
  Index cardinality = 0;
  std::vector<Index> support;  // caller indices, ascending
  NormModel model = NormModel::Equality;
};

Instance preprocess(const SymMatrix& sigma, double rho, bool screen = true);

Regime classify_regime(const Instance& inst);

struct TrivialSolutions {
  PrimalSolution equality;    // x = e_1, value Sigma_11 - rho
  PrimalSolution inequality;  // x = 0, value 0
};

/// Closed-form answers for rho >= Sigma_11. Throws ValidationError in the
/// penalized regime.
TrivialSolutions trivial_solutions(const Instance& inst);

/// x^T Sigma x - rho * Card(x) with x in caller indexing. Card counts the
/// exactly non-zero entries.
double objective(const Vector& x, const Instance& inst);

/// Builds a PrimalSolution (support, cardinality, objective) around x.
PrimalSolution make_solution(const Vector& x, const Instance& inst, NormModel model);

/// lambda_max(sum_i u_i B_i).
double eval_pattern(const Pattern& u, const Instance& inst);

/// sum_i ((a_i^T xi)^2 - rho)_+ for a unit xi in R^m.
double rayleigh_threshold(const Vector& xi, const Instance& inst);

/// Top eigenvector of the principal submatrix on support(u), normalized.
/// Entries off the support are exactly zero.
PrimalSolution pattern_to_solution(const Pattern& u, const Instance& inst);

/// u_i = 1 iff (a_i^T xi)^2 > rho.
Pattern xi_to_pattern(const Vector& xi, const Instance& inst);

struct OracleOptions {
  Index max_n = 20;
  bool record_table = false;
};

struct SupportValue {
  std::vector<Index> support;  // caller indices
  double value = 0.0;          // lambda_max(Sigma_SS) - rho |S|
};

struct OracleResult {
  double phi = 0.0;             // equality model
  double phi_inequality = 0.0;  // unit-ball model, max(phi, 0)
  PrimalSolution solution;
  std::vector<SupportValue> table;
};

/// Exhaustive maximization over all non-empty supports. Ties go to the
/// smaller support, then to the lexicographically smaller one (internal
/// order). Throws GuardError when n > max_n.
OracleResult brute_force(const Instance& inst, const OracleOptions& opts = {});

struct ExactResult {
  double phi = 0.0;
  PrimalSolution solution;
};

/// Sigma = a a^T: phi = sum_i (a_i^2 - rho)_+. Solution indexed like a.
ExactResult solve_rank_one(const Vector& a, double rho);

/// Diagonal Sigma: phi = Sigma_11 - rho at x = e_1.
ExactResult solve_diagonal(const Instance& inst);

/// Sigma = I + a a^T. The support is {i : a_i^2 > rho}, or the single
/// largest |a_i| when that set is empty.
ExactResult solve_identity_plus_dyad(const Vector& a, double rho);

bool is_diagonal(const SymMatrix& m, double tol = 1e-12);

/// Returns a with m = I + a a^T when m has that form (within tol), otherwise
/// nothing.
std::optional<Vector> identity_plus_dyad_vector(const SymMatrix& m, double tol = 1e-10);

enum class InstanceKind { DensePsd, FastDecay, RankOnePlusNoise };

std::string_view to_string(InstanceKind k);
InstanceKind parse_instance_kind(std::string_view s);

/// Seeded random PSD test matrix of size n and rank m.
///
/// dense-psd:            G^T G / m with G an m x n standard normal matrix.
/// fast-decay:           dense-psd rescaled so the ordered diagonal satisfies
///                       Sigma_hh <= Sigma_11 / (h + 1) for every h >= 2.
/// rank-one-plus-noise:  v v^T plus a small rank-(m-1) perturbation.
SymMatrix random_instance(Index n, Index m, std::uint64_t seed, InstanceKind kind);

}  // namespace cardpen
