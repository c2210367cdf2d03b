#include "cardpen/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cardpen/errors.hpp"

namespace cardpen {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw ValidationError("matrix must be square with dimension >= 1, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ValidationError("matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    throw ValidationError("matrix is not symmetric (max |M_ij - M_ji| = " +
                          std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix symmetrize_unchecked(Matrix m) {
  Matrix s = 0.5 * (m + m.transpose());
  return SymMatrix(std::move(s), SymMatrix::Unchecked{});
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SymMatrix SymMatrix::dyad(const Vector& v) { return symmetrize_unchecked(v * v.transpose()); }

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  return SymMatrix(Matrix(m_ + o.m_), Unchecked{});
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  return SymMatrix(Matrix(m_ - o.m_), Unchecked{});
}

SymMatrix SymMatrix::operator*(double s) const { return SymMatrix(Matrix(m_ * s), Unchecked{}); }

SymMatrix SymMatrix::principal(const std::vector<Index>& idx) const {
  const auto k = static_cast<Index>(idx.size());
  Matrix sub(k, k);
  for (Index r = 0; r < k; ++r)
    for (Index c = 0; c < k; ++c) sub(r, c) = m_(idx[r], idx[c]);
  return SymMatrix(std::move(sub), Unchecked{});
}

EigenDecomposition eigh(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("symmetric eigensolver did not converge for a " +
                           std::to_string(m.dim()) + "x" + std::to_string(m.dim()) + " matrix");
  }
  // Eigen returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

SymMatrix psd_part(const SymMatrix& m) {
  const auto ed = eigh(m);
  const Vector clipped = ed.values.cwiseMax(0.0);
  return symmetrize_unchecked(ed.vectors * clipped.asDiagonal() * ed.vectors.transpose());
}

double positive_trace(const SymMatrix& m) {
  const auto ed = eigh(m);
  return ed.values.cwiseMax(0.0).sum();
}

void require_psd(const SymMatrix& m, const char* what) {
  const auto ed = eigh(m);
  const double top = ed.values(0);
  const double bottom = ed.values(ed.values.size() - 1);
  if (bottom < -kPsdClipTol * std::max(top, 0.0) || (top <= 0.0 && bottom < 0.0)) {
    throw ValidationError(std::string(what) + " is not PSD (min eigenvalue " +
                          std::to_string(bottom) + ", max " + std::to_string(top) + ")");
  }
}

SymMatrix sqrt_psd(const SymMatrix& m) {
  const auto ed = eigh(m);
  const double top = ed.values(0);
  const double bottom = ed.values(ed.values.size() - 1);
  if (bottom < -kPsdClipTol * std::max(top, 0.0) || (top <= 0.0 && bottom < 0.0)) {
    throw ValidationError("sqrt_psd: matrix is not PSD (min eigenvalue " +
                          std::to_string(bottom) + ")");
  }
  const Vector roots = ed.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrize_unchecked(ed.vectors * roots.asDiagonal() * ed.vectors.transpose());
}

RankFactor factor_rank(const SymMatrix& sigma, double tau_rank) {
  const auto ed = eigh(sigma);
  const double top = ed.values(0);
  if (top <= 0.0) throw ValidationError("Sigma must be non-zero");
  require_psd(sigma, "Sigma");

  const double cutoff = tau_rank * top;
  Index rank = 0;
  while (rank < ed.values.size() && ed.values(rank) > cutoff) ++rank;

  RankFactor f;
  f.rank = rank;
  f.tau_rank = tau_rank;
  f.a = ed.values.head(rank).cwiseSqrt().asDiagonal() *
        ed.vectors.leftCols(rank).transpose();
  return f;
}

TopEigenpair lambda_max(const SymMatrix& m) {
  const auto ed = eigh(m);
  TopEigenpair top;
  top.value = ed.values(0);
  top.vector = ed.vectors.col(0);
  top.vector.normalize();
  return top;
}

double lambda_min(const SymMatrix& m) {
  const auto ed = eigh(m);
  return ed.values(ed.values.size() - 1);
}

Index numerical_rank(const SymMatrix& m, double tau) {
  const auto ed = eigh(m);
  const double top = ed.values(0);
  if (top <= 0.0) return 0;
  return static_cast<Index>((ed.values.array() > tau * top).count());
}

}  // namespace cardpen
