#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cardpen {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense real symmetric matrix.
///
/// Construction symmetrizes the input as (M + M^T) / 2. An asymmetry larger
/// than 1e-8 relative to the largest entry is rejected with ValidationError;
/// anything below is repaired silently. Entries are exactly symmetric after
/// construction.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Index n);
  static SymMatrix zero(Index n);
  static SymMatrix diagonal(const Vector& d);
  /// v v^T
  static SymMatrix dyad(const Vector& v);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  Vector diag() const { return m_.diagonal(); }
  double trace() const { return m_.trace(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

  /// Principal submatrix on the given rows/columns (in the given order).
  SymMatrix principal(const std::vector<Index>& idx) const;

 private:
  struct Unchecked {};
  SymMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;

  friend SymMatrix symmetrize_unchecked(Matrix m);
};

/// Symmetrizes without the asymmetry check. For results of computations
/// that are symmetric up to roundoff (products like S B S).
SymMatrix symmetrize_unchecked(Matrix m);

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, column k pairs with values[k]
};

struct RankFactor {
  Index rank = 0;
  Matrix a;  // rank x n, Sigma = a^T a, column i is a_i
  double tau_rank = 0.0;

  Vector column(Index i) const { return a.col(i); }
};

struct TopEigenpair {
  double value = 0.0;
  Vector vector;
};

/// Default relative rank cutoff used for factorizations.
inline constexpr double kFactorRankTol = 1e-10;
/// Relative tolerance below which slightly negative eigenvalues are treated
/// as zero when a PSD matrix is expected.
inline constexpr double kPsdClipTol = 1e-8;

EigenDecomposition eigh(const SymMatrix& m);

/// Replaces negative eigenvalues by zero.
SymMatrix psd_part(const SymMatrix& m);

/// Tr M_+, the sum of the positive eigenvalues.
double positive_trace(const SymMatrix& m);

/// Principal square root of a PSD matrix. Throws ValidationError if an
/// eigenvalue is below -1e-8 * lambda_max.
SymMatrix sqrt_psd(const SymMatrix& m);

/// Sigma = A^T A with A = D_+^{1/2} V^T restricted to the eigenvalues
/// exceeding tau_rank * lambda_max.
RankFactor factor_rank(const SymMatrix& sigma, double tau_rank = kFactorRankTol);

TopEigenpair lambda_max(const SymMatrix& m);

double lambda_min(const SymMatrix& m);

/// Number of eigenvalues exceeding tau * lambda_max (0 for the zero matrix).
Index numerical_rank(const SymMatrix& m, double tau);

/// Throws ValidationError unless m is PSD within the clip tolerance.
void require_psd(const SymMatrix& m, const char* what);

}  // namespace cardpen
