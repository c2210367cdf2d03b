#include "cardpen/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "cardpen/errors.hpp"

namespace cardpen {

namespace {

void check_blocks_shape(const std::vector<SymMatrix>& blocks, const Instance& inst) {
  if (static_cast<Index>(blocks.size()) != inst.n()) {
    throw ValidationError("expected " + std::to_string(inst.n()) + " blocks, got " +
                          std::to_string(blocks.size()));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].dim() != inst.m()) {
      throw ValidationError("block " + std::to_string(i) + " has dimension " +
                            std::to_string(blocks[i].dim()) + ", expected m = " +
                            std::to_string(inst.m()));
    }
  }
}

void check_unit_trace_psd(const SymMatrix& x, const Instance& inst) {
  if (x.dim() != inst.m()) {
    throw ValidationError("X has dimension " + std::to_string(x.dim()) + ", expected m = " +
                          std::to_string(inst.m()));
  }
  if (std::abs(x.trace() - 1.0) > 1e-10) {
    throw ValidationError("X must have unit trace (Tr X = " + std::to_string(x.trace()) + ")");
  }
  require_psd(x, "X");
}

// Tr(Xh B_i Xh)_+ with B_i = a_i a_i^T - rho I and Xh = X^{1/2}.
double positive_mass(const SymMatrix& xh, const SymMatrix& x, const Vector& ai, double rho) {
  const Vector w = xh.matrix() * ai;
  Matrix bx = w * w.transpose() - rho * x.matrix();
  return positive_trace(symmetrize_unchecked(std::move(bx)));
}

}  // namespace

double psi_upper(const std::vector<SymMatrix>& blocks, const Instance& inst) {
  check_blocks_shape(blocks, inst);
  Matrix sum = Matrix::Zero(inst.m(), inst.m());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const SymMatrix bi = inst.b(static_cast<Index>(i));
    const double tol = -1e-8 * (1.0 + bi.matrix().operatorNorm());
    if (lambda_min(blocks[i]) < tol) {
      throw ValidationError("block " + std::to_string(i) + " violates Y_i >= 0");
    }
    if (lambda_min(blocks[i] - bi) < tol) {
      throw ValidationError("block " + std::to_string(i) + " violates Y_i >= B_i");
    }
    sum += blocks[i].matrix();
  }
  return lambda_max(symmetrize_unchecked(std::move(sum))).value;
}

std::vector<double> dual_alphas(const SymMatrix& x, const Instance& inst) {
  check_unit_trace_psd(x, inst);
  const SymMatrix xh = sqrt_psd(x);
  std::vector<double> alphas(static_cast<std::size_t>(inst.n()));
  for (Index i = 0; i < inst.n(); ++i) alphas[i] = positive_mass(xh, x, inst.a(i), inst.rho);
  return alphas;
}

double psi_lower(const SymMatrix& x, const Instance& inst) {
  const auto alphas = dual_alphas(x, inst);
  double total = 0.0;
  for (double a : alphas) total += a;
  return total;
}

InnerMax inner_max_P(const SymMatrix& x, const SymMatrix& b) {
  if (x.dim() != b.dim()) throw ValidationError("inner_max_P: X and B differ in dimension");
  const SymMatrix xh = sqrt_psd(x);
  const auto ed = eigh(symmetrize_unchecked(xh.matrix() * b.matrix() * xh.matrix()));
  Matrix proj = Matrix::Zero(x.dim(), x.dim());
  double value = 0.0;
  for (Index k = 0; k < ed.values.size(); ++k) {
    if (ed.values(k) >= 0.0) {
      proj += ed.vectors.col(k) * ed.vectors.col(k).transpose();
      value += ed.values(k);
    }
  }
  return {symmetrize_unchecked(xh.matrix() * proj * xh.matrix()), value};
}

namespace {

// Symmetric vectorization with sqrt(2) on off-diagonal entries so that
// <svec(A), svec(B)> = <A, B>.
class Svec {
 public:
  explicit Svec(Index m) : m_(m) {
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i <= j; ++i) pairs_.emplace_back(i, j);
  }

  Index size() const { return static_cast<Index>(pairs_.size()); }

  Vector pack(const Matrix& a) const {
    Vector v(size());
    for (Index k = 0; k < size(); ++k) {
      const auto [i, j] = pairs_[k];
      v(k) = i == j ? a(i, i) : kSqrt2 * a(i, j);
    }
    return v;
  }

  Matrix unpack(const Vector& v) const {
    Matrix a(m_, m_);
    for (Index k = 0; k < size(); ++k) {
      const auto [i, j] = pairs_[k];
      if (i == j) {
        a(i, i) = v(k);
      } else {
        a(i, j) = a(j, i) = v(k) / kSqrt2;
      }
    }
    return a;
  }

  // Matrix of Z -> A Z A in svec coordinates.
  Matrix kron(const Matrix& a) const {
    const Index p = size();
    Matrix out(p, p);
    for (Index r = 0; r < p; ++r) {
      const auto [i, j] = pairs_[r];
      const double sr = i == j ? 1.0 : kSqrt2;
      for (Index c = 0; c <= r; ++c) {
        const auto [k, l] = pairs_[c];
        const double sc = k == l ? 1.0 : kSqrt2;
        const double v = 0.5 * sr * sc * (a(i, k) * a(j, l) + a(i, l) * a(j, k));
        out(r, c) = v;
        out(c, r) = v;
      }
    }
    return out;
  }

 private:
  static constexpr double kSqrt2 = 1.4142135623730950488;
  Index m_;
  std::vector<std::pair<Index, Index>> pairs_;
};

std::optional<double> log_det(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Vector d = llt.matrixL().toDenseMatrix().diagonal();
  if ((d.array() <= 0.0).any() || !d.allFinite()) return std::nullopt;
  return 2.0 * d.array().log().sum();
}

Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw ConvergenceError("barrier iterate lost positive definiteness");
  }
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

struct Iterate {
  double t = 0.0;
  std::vector<Matrix> y;
};

class BarrierProblem {
 public:
  explicit BarrierProblem(const Instance& inst) : inst_(inst), svec_(inst.m()) {
    for (Index i = 0; i < inst.n(); ++i) b_.push_back(inst.b(i).matrix());
  }

  Index m() const { return inst_.m(); }
  Index n() const { return inst_.n(); }
  const Matrix& b(Index i) const { return b_[i]; }

  Matrix slack(const Iterate& it) const {
    Matrix s = -sum_blocks(it);
    s.diagonal().array() += it.t;
    return s;
  }

  Matrix sum_blocks(const Iterate& it) const {
    Matrix s = Matrix::Zero(m(), m());
    for (const auto& y : it.y) s += y;
    return s;
  }

  // tau * t - logdet(tI - sum Y) - sum logdet(Y_i - B_i) - sum logdet(Y_i),
  // or nothing outside the interior.
  std::optional<double> value(const Iterate& it, double tau) const {
    double f = tau * it.t;
    const auto l0 = log_det(slack(it));
    if (!l0) return std::nullopt;
    f -= *l0;
    for (Index i = 0; i < n(); ++i) {
      const auto ls = log_det(it.y[i] - b_[i]);
      if (!ls) return std::nullopt;
      const auto ly = log_det(it.y[i]);
      if (!ly) return std::nullopt;
      f -= *ls + *ly;
    }
    return f;
  }

  struct Step {
    double dt = 0.0;
    std::vector<Matrix> dy;
    double decrement_sq = 0.0;
    Matrix slack_inverse;
  };

  // Newton direction for the barrier at weight tau. The Hessian is
  // L^T K L + blockdiag(0, D_1, ..., D_n) with L(dt, dY) = dt I - sum dY_i,
  // K = W (x) W, W = (tI - sum Y)^{-1} and D_i = S_i^{-1} (x) S_i^{-1} +
  // Y_i^{-1} (x) Y_i^{-1}. Eliminating dY_i leaves one p x p system in
  // q = K L(dt, dY):  (K^{-1} + sum D_i^{-1}) q = dt e + sum D_i^{-1} g_i.
  Step newton_step(const Iterate& it, double tau) const {
    const Index p = svec_.size();
    const Matrix s0 = slack(it);
    Step step;
    step.slack_inverse = spd_inverse(s0);
    const Matrix& w = step.slack_inverse;

    const double g_t = tau - w.trace();
    std::vector<Vector> g(static_cast<std::size_t>(n()));
    std::vector<Matrix> d_inv(static_cast<std::size_t>(n()));
    Matrix normal = svec_.kron(s0);
    Vector h = Vector::Zero(p);
    for (Index i = 0; i < n(); ++i) {
      const Matrix s_inv = spd_inverse(it.y[i] - b_[i]);
      const Matrix y_inv = spd_inverse(it.y[i]);
      g[i] = svec_.pack(w - s_inv - y_inv);
      const Matrix d = svec_.kron(s_inv) + svec_.kron(y_inv);
      d_inv[i] = spd_inverse(d);
      normal += d_inv[i];
      h += d_inv[i] * g[i];
    }

    const Vector e = svec_.pack(Matrix::Identity(m(), m()));
    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw ConvergenceError("Newton system is not positive definite");
    }
    const Vector qa = llt.solve(e);
    const Vector qb = llt.solve(h);
    step.dt = (-g_t - e.dot(qb)) / e.dot(qa);
    const Vector q = step.dt * qa + qb;

    double dec = g_t * step.dt;
    step.dy.resize(static_cast<std::size_t>(n()));
    for (Index i = 0; i < n(); ++i) {
      const Vector dyi = d_inv[i] * (q - g[i]);
      dec += g[i].dot(dyi);
      step.dy[i] = svec_.unpack(dyi);
    }
    step.decrement_sq = -dec;
    return step;
  }

 private:
  const Instance& inst_;
  Svec svec_;
  std::vector<Matrix> b_;
};

Iterate advance(const Iterate& it, const BarrierProblem::Step& s, double alpha) {
  Iterate out = it;
  out.t += alpha * s.dt;
  for (std::size_t i = 0; i < out.y.size(); ++i) out.y[i] += alpha * s.dy[i];
  return out;
}

struct Sandwich {
  std::optional<std::vector<SymMatrix>> blocks;
  std::optional<SymMatrix> dual;
  double f = std::numeric_limits<double>::infinity();
  double g = -std::numeric_limits<double>::infinity();

  void offer_upper(std::vector<SymMatrix> y, const Instance& inst) {
    const double v = psi_upper(y, inst);
    if (v < f) {
      f = v;
      blocks = std::move(y);
    }
  }

  void offer_lower(SymMatrix x, const Instance& inst) {
    const double v = psi_lower(x, inst);
    if (v > g) {
      g = v;
      dual = std::move(x);
    }
  }

  double gap() const { return f - g; }
};

std::vector<SymMatrix> to_blocks(const std::vector<Matrix>& y) {
  std::vector<SymMatrix> out;
  out.reserve(y.size());
  for (const auto& yi : y) out.push_back(symmetrize_unchecked(yi));
  return out;
}

SymMatrix rank_one_dual(const Vector& v) {
  Vector u = v / v.norm();
  return SymMatrix::dyad(u);
}

// Offers X and the dyad of its top eigenvector as lower-bound witnesses.
void offer_dual(Sandwich& sw, const Matrix& w, const Instance& inst) {
  Matrix x = w / w.trace();
  SymMatrix xs = symmetrize_unchecked(std::move(x));
  const auto top = lambda_max(xs);
  sw.offer_lower(std::move(xs), inst);
  sw.offer_lower(rank_one_dual(top.vector), inst);
}

}  // namespace

RelaxationSolution solve_relaxation(const Instance& inst, const SolverOptions& opts) {
  if (classify_regime(inst) != Regime::Penalized) {
    throw ValidationError("relaxation requires the penalized regime (rho < Sigma_11)");
  }
  const double n = static_cast<double>(inst.n());
  const double m = static_cast<double>(inst.m());
  if (n * m * m > opts.size_guard) {
    throw GuardError("relaxation refused: n * m^2 = " + std::to_string(n * m * m) +
                     " exceeds the guard of " + std::to_string(opts.size_guard));
  }

  BarrierProblem prob(inst);
  const Index mi = inst.m();
  Sandwich sw;

  // Y_i = (B_i)_+ is feasible; with X the dyad of the top eigenvector of
  // sum (B_i)_+ this already pinches in the diagonal and rank-one cases.
  std::vector<SymMatrix> plus;
  double max_norm = 0.0;
  for (Index i = 0; i < inst.n(); ++i) {
    const SymMatrix bi = inst.b(i);
    max_norm = std::max(max_norm, bi.matrix().operatorNorm());
    plus.push_back(psd_part(bi));
  }
  Matrix plus_sum = Matrix::Zero(mi, mi);
  for (const auto& p : plus) plus_sum += p.matrix();
  sw.offer_upper(plus, inst);
  sw.offer_lower(rank_one_dual(lambda_max(symmetrize_unchecked(plus_sum)).vector), inst);
  sw.offer_lower(SymMatrix::identity(mi) * (1.0 / m), inst);

  int outer_iterations = 0;
  int newton_iterations = 0;
  auto pinched = [&] { return sw.gap() <= opts.tol * std::max(1.0, sw.f); };

  if (!pinched()) {
    const double eps = 1e-3 * (1.0 + max_norm);
    Iterate it;
    for (const auto& p : plus) {
      Matrix yi = p.matrix();
      yi.diagonal().array() += eps;
      it.y.push_back(std::move(yi));
    }
    it.t = lambda_max(symmetrize_unchecked(prob.sum_blocks(it))).value + 1.0;

    const double nu = m * (2.0 * n + 1.0);
    double tau = nu / std::max(sw.gap(), 1e-3 * std::max(1.0, sw.f));

    for (int outer = 0; outer < opts.max_outer && !pinched(); ++outer) {
      ++outer_iterations;
      std::optional<Matrix> w;
      for (int k = 0; k < opts.max_newton; ++k) {
        BarrierProblem::Step step;
        try {
          step = prob.newton_step(it, tau);
        } catch (const ConvergenceError&) {
          break;
        }
        ++newton_iterations;
        w = step.slack_inverse;
        if (!std::isfinite(step.decrement_sq) || step.decrement_sq < 0.0) break;
        if (0.5 * step.decrement_sq < 1e-10) break;

        const auto f0 = prob.value(it, tau);
        if (!f0) break;
        const double slope = -step.decrement_sq;
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
          Iterate trial = advance(it, step, alpha);
          const auto f1 = prob.value(trial, tau);
          if (f1 && *f1 <= *f0 + 0.01 * alpha * slope) {
            it = std::move(trial);
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }

      sw.offer_upper(to_blocks(it.y), inst);
      const Matrix s0 = prob.slack(it);
      Eigen::LLT<Matrix> llt(s0);
      if (llt.info() == Eigen::Success) {
        offer_dual(sw, llt.solve(Matrix::Identity(mi, mi)), inst);
      } else if (w) {
        offer_dual(sw, *w, inst);
      }
      tau *= 10.0;
    }
  }

  RelaxationSolution out{std::move(*sw.blocks), std::move(*sw.dual), sw.f, sw.g, sw.gap(), 0, false, false, {}, 0, 0};
  out.converged = pinched();
  out.outer_iterations = outer_iterations;
  out.newton_iterations = newton_iterations;
  out.alphas = dual_alphas(out.dual, inst);
  const auto cert = exactness_certificate(out, opts.rank_tol, opts.tol);
  out.rank_x = cert.rank;
  out.exact = cert.exact;
  return out;
}

PrimalSolution randomized_round(const RelaxationSolution& relax, const Instance& inst,
                                int rounds, std::uint64_t seed) {
  if (rounds < 1) throw ValidationError("randomized_round needs at least one round");
  if (relax.dual.dim() != inst.m()) {
    throw ValidationError("relaxation dual does not match the instance rank");
  }
  const Index m = inst.m();
  const Matrix& a = inst.factor.a;
  const SymMatrix xh = sqrt_psd(relax.dual);

  std::optional<PrimalSolution> best;
  auto consider = [&](const Vector& z) {
    const double zz = z.squaredNorm();
    if (!(zz > 0.0)) return;
    const Vector proj = a.transpose() * z;
    const Vector u = (proj.array().square() > inst.rho * zz).cast<double>();
    if (u.sum() == 0.0) return;
    auto cand = pattern_to_solution(Pattern(u), inst);
    if (!best || cand.objective > best->objective) best = std::move(cand);
  };

  consider(lambda_max(relax.dual).vector);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < rounds; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    Vector g(m);
    for (Index k = 0; k < m; ++k) g(k) = normal(rng);
    normal.reset();
    consider(xh.matrix() * g);
  }

  if (!best) {
    // Index 0 holds Sigma_11 > rho, so e_1 is a valid penalized candidate.
    best = pattern_to_solution(Pattern::from_support(inst.n(), {0}), inst);
  }
  return *best;
}

ExactnessCertificate exactness_certificate(const RelaxationSolution& relax, double tau_rank,
                                           double tol) {
  ExactnessCertificate cert;
  const auto ed = eigh(relax.dual);
  cert.spectrum = ed.values;
  const double top = ed.values(0);
  cert.rank = top > 0.0 ? static_cast<Index>((ed.values.array() > tau_rank * top).count()) : 0;
  cert.gap = relax.f_upper - relax.g_lower;
  const bool gap_ok = cert.gap <= tol * std::max(1.0, relax.f_upper);
  cert.exact = cert.rank == 1 && gap_ok;

  std::ostringstream os;
  os.precision(6);
  os << "rank(X) = " << cert.rank << " at tau = " << tau_rank << "; spectrum(X) = [";
  for (Index k = 0; k < ed.values.size(); ++k) os << (k ? ", " : "") << ed.values(k);
  os << "]; gap = " << cert.gap << (gap_ok ? " (within tol)" : " (above tol)") << "; "
     << (cert.exact ? "relaxation is exact" : "exactness not certified");
  cert.report = os.str();
  return cert;
}

}  // namespace cardpen
