#include "cardpen/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cardpen/errors.hpp"

namespace cardpen {

std::string_view to_string(Regime r) {
  return r == Regime::Penalized ? "penalized" : "trivial";
}

std::string_view to_string(NormModel m) {
  return m == NormModel::Equality ? "equality" : "inequality";
}

SymMatrix Instance::b(Index i) const {
  const Vector ai = a(i);
  Matrix bi = ai * ai.transpose();
  bi.diagonal().array() -= rho;
  return symmetrize_unchecked(std::move(bi));
}

Vector Instance::to_caller(const Vector& internal) const {
  if (internal.size() != n()) {
    throw ValidationError("internal vector has length " + std::to_string(internal.size()) +
                          ", expected " + std::to_string(n()));
  }
  Vector out = Vector::Zero(caller_dim());
  for (Index k = 0; k < n(); ++k) out(perm[k]) = internal(k);
  return out;
}

Pattern::Pattern(Vector u) : u_(std::move(u)) {
  for (Index i = 0; i < u_.size(); ++i) {
    const double v = u_(i);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("pattern entry " + std::to_string(i) + " = " + std::to_string(v) +
                            " is outside [0, 1]");
    }
    if (v != 0.0 && v != 1.0) binary_ = false;
  }
}

Pattern Pattern::from_support(Index n, const std::vector<Index>& support) {
  Vector u = Vector::Zero(n);
  for (Index i : support) u(i) = 1.0;
  return Pattern(std::move(u));
}

std::vector<Index> Pattern::support() const {
  std::vector<Index> s;
  for (Index i = 0; i < u_.size(); ++i)
    if (u_(i) == 1.0) s.push_back(i);
  return s;
}

Instance preprocess(const SymMatrix& sigma, double rho, bool screen) {
  if (!std::isfinite(rho) || rho < 0.0) {
    throw ValidationError("penalty rho must be finite and >= 0, got " + std::to_string(rho));
  }
  // Non-zero and PSD checks; the factor itself is recomputed below.
  (void)factor_rank(sigma);

  const Index n = sigma.dim();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return sigma(i, i) > sigma(j, j); });

  SymMatrix ordered = sigma.principal(order);
  const bool trivial = rho >= ordered(0, 0);

  std::vector<Index> keep;
  std::vector<Index> screened;
  for (Index k = 0; k < n; ++k) {
    const double d = ordered(k, k);
    const bool drop = d <= 0.0 || (screen && !trivial && d <= rho);
    if (drop) {
      screened.push_back(order[k]);
    } else {
      keep.push_back(k);
    }
  }
  std::sort(screened.begin(), screened.end());

  std::vector<Index> perm;
  perm.reserve(keep.size());
  for (Index k : keep) perm.push_back(order[k]);

  SymMatrix reduced = ordered.principal(keep);
  RankFactor factor = factor_rank(reduced);
  return Instance{std::move(reduced), std::move(ordered), sigma,  std::move(factor), rho,
                  std::move(perm),    std::move(order),   std::move(screened), trivial};
}

Regime classify_regime(const Instance& inst) {
  return inst.rho < inst.sigma11() ? Regime::Penalized : Regime::Trivial;
}

TrivialSolutions trivial_solutions(const Instance& inst) {
  if (classify_regime(inst) != Regime::Trivial) {
    throw ValidationError("trivial solutions requested but rho < Sigma_11");
  }
  Vector e = Vector::Zero(inst.caller_dim());
  e(inst.ordered_perm.front()) = 1.0;
  TrivialSolutions out;
  out.equality = make_solution(e, inst, NormModel::Equality);
  out.inequality = make_solution(Vector::Zero(inst.caller_dim()), inst, NormModel::Inequality);
  return out;
}

double objective(const Vector& x, const Instance& inst) {
  if (x.size() != inst.caller_dim()) {
    throw ValidationError("vector has length " + std::to_string(x.size()) + ", expected " +
                          std::to_string(inst.caller_dim()));
  }
  const double quad = x.dot(inst.caller_sigma.matrix() * x);
  const auto card = static_cast<double>((x.array() != 0.0).count());
  return quad - inst.rho * card;
}

PrimalSolution make_solution(const Vector& x, const Instance& inst, NormModel model) {
  PrimalSolution s;
  s.x = x;
  s.objective = objective(x, inst);
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) s.support.push_back(i);
  s.cardinality = static_cast<Index>(s.support.size());
  s.model = model;
  return s;
}

double eval_pattern(const Pattern& u, const Instance& inst) {
  if (u.size() != inst.n()) {
    throw ValidationError("pattern has length " + std::to_string(u.size()) + ", expected " +
                          std::to_string(inst.n()));
  }
  const Matrix& a = inst.factor.a;
  Matrix sum = a * u.u().asDiagonal() * a.transpose();
  sum.diagonal().array() -= inst.rho * u.cardinality();
  return lambda_max(symmetrize_unchecked(std::move(sum))).value;
}

double rayleigh_threshold(const Vector& xi, const Instance& inst) {
  if (xi.size() != inst.m()) {
    throw ValidationError("xi has length " + std::to_string(xi.size()) + ", expected m = " +
                          std::to_string(inst.m()));
  }
  if (std::abs(xi.norm() - 1.0) > 1e-10) {
    throw ValidationError("xi must have unit norm (|xi| = " + std::to_string(xi.norm()) + ")");
  }
  const Vector proj = inst.factor.a.transpose() * xi;
  return (proj.array().square() - inst.rho).cwiseMax(0.0).sum();
}

namespace {

// Flip the sign so the largest-magnitude entry (first on ties) is positive.
void canonical_sign(Vector& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

}  // namespace

PrimalSolution pattern_to_solution(const Pattern& u, const Instance& inst) {
  if (u.size() != inst.n()) {
    throw ValidationError("pattern has length " + std::to_string(u.size()) + ", expected " +
                          std::to_string(inst.n()));
  }
  if (!u.binary()) throw ValidationError("pattern_to_solution needs a binary pattern");
  const auto support = u.support();
  if (support.empty()) throw ValidationError("pattern_to_solution needs a non-empty pattern");

  const auto top = lambda_max(inst.sigma.principal(support));
  Vector y = top.vector;
  Vector internal = Vector::Zero(inst.n());
  const double norm = y.norm();
  if (norm > 0.0 && std::isfinite(norm)) {
    y /= norm;
    canonical_sign(y);
    for (std::size_t k = 0; k < support.size(); ++k) internal(support[k]) = y(static_cast<Index>(k));
  } else {
    // Diagonal is sorted, so the first index of the pattern has the largest Sigma_ii.
    internal(support.front()) = 1.0;
  }
  return make_solution(inst.to_caller(internal), inst, NormModel::Equality);
}

Pattern xi_to_pattern(const Vector& xi, const Instance& inst) {
  if (xi.size() != inst.m()) {
    throw ValidationError("xi has length " + std::to_string(xi.size()) + ", expected m = " +
                          std::to_string(inst.m()));
  }
  const Vector proj = inst.factor.a.transpose() * xi;
  Vector u = (proj.array().square() > inst.rho).cast<double>();
  return Pattern(std::move(u));
}

OracleResult brute_force(const Instance& inst, const OracleOptions& opts) {
  const Index n = inst.n();
  if (n > opts.max_n) {
    throw GuardError("brute force refused: n = " + std::to_string(n) + " exceeds the cap of " +
                     std::to_string(opts.max_n) + " (raise it with --max-oracle-n)");
  }
  if (classify_regime(inst) != Regime::Penalized) {
    throw ValidationError("brute force requires the penalized regime (rho < Sigma_11)");
  }

  const Matrix& sigma = inst.sigma.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  OracleResult result;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Index> best_support;

  std::vector<Index> comb;
  for (Index k = 1; k <= n; ++k) {
    comb.resize(static_cast<std::size_t>(k));
    std::iota(comb.begin(), comb.end(), Index{0});
    Matrix sub(k, k);
    while (true) {
      for (Index r = 0; r < k; ++r)
        for (Index c = 0; c < k; ++c) sub(r, c) = sigma(comb[r], comb[c]);
      double top = sub(0, 0);
      if (k > 1) {
        solver.compute(sub, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
          throw ConvergenceError("eigensolver failed on a " + std::to_string(k) + "x" +
                                 std::to_string(k) + " principal submatrix");
        }
        top = solver.eigenvalues()(k - 1);
      }
      const double value = top - inst.rho * static_cast<double>(k);
      if (best_support.empty() || value > best + 1e-13 * (1.0 + std::abs(best))) {
        best = value;
        best_support = comb;
      }
      if (opts.record_table) {
        SupportValue sv;
        for (Index i : comb) sv.support.push_back(inst.perm[i]);
        std::sort(sv.support.begin(), sv.support.end());
        sv.value = value;
        result.table.push_back(std::move(sv));
      }
      // Next combination in lexicographic order.
      Index pos = k - 1;
      while (pos >= 0 && comb[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++comb[pos];
      for (Index j = pos + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }

  result.phi = best;
  result.phi_inequality = std::max(best, 0.0);
  result.solution = pattern_to_solution(Pattern::from_support(n, best_support), inst);
  return result;
}

namespace {

PrimalSolution solution_for_dyad_family(const Vector& x, const Matrix& sigma, double rho) {
  PrimalSolution s;
  s.x = x;
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) s.support.push_back(i);
  s.cardinality = static_cast<Index>(s.support.size());
  s.objective = x.dot(sigma * x) - rho * static_cast<double>(s.cardinality);
  s.model = NormModel::Equality;
  return s;
}

void require_penalty(double rho) {
  if (!std::isfinite(rho) || rho < 0.0) {
    throw ValidationError("penalty rho must be finite and >= 0, got " + std::to_string(rho));
  }
}

}  // namespace

ExactResult solve_rank_one(const Vector& a, double rho) {
  require_penalty(rho);
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    throw ValidationError("rank-one solver needs a non-zero vector");
  }
  const Matrix sigma = a * a.transpose();
  Index top = 0;
  const double top_sq = a.array().square().maxCoeff(&top);

  ExactResult out;
  if (rho >= top_sq) {
    // Trivial regime: the equality-model answer is the first unit vector.
    Vector e = Vector::Zero(a.size());
    e(top) = 1.0;
    out.solution = solution_for_dyad_family(e, sigma, rho);
    out.phi = top_sq - rho;
    return out;
  }
  Vector thresholded = (a.array().square() > rho).select(a, 0.0);
  Vector x = thresholded / thresholded.norm();
  canonical_sign(x);
  out.phi = (a.array().square() - rho).cwiseMax(0.0).sum();
  out.solution = solution_for_dyad_family(x, sigma, rho);
  return out;
}

bool is_diagonal(const SymMatrix& m, double tol) {
  const double scale = std::max(1.0, m.matrix().diagonal().cwiseAbs().maxCoeff());
  Matrix off = m.matrix();
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() <= tol * scale;
}

ExactResult solve_diagonal(const Instance& inst) {
  if (!is_diagonal(inst.sigma)) throw ValidationError("solve_diagonal: Sigma is not diagonal");
  if (classify_regime(inst) != Regime::Penalized) {
    throw ValidationError("solve_diagonal requires rho < Sigma_11");
  }
  Vector e = Vector::Zero(inst.n());
  e(0) = 1.0;
  ExactResult out;
  out.phi = inst.sigma(0, 0) - inst.rho;
  out.solution = make_solution(inst.to_caller(e), inst, NormModel::Equality);
  return out;
}

ExactResult solve_identity_plus_dyad(const Vector& a, double rho) {
  require_penalty(rho);
  const Index n = a.size();
  if (n == 0) throw ValidationError("identity-plus-dyad solver needs a non-empty vector");
  Matrix sigma = a * a.transpose();
  sigma.diagonal().array() += 1.0;

  const Vector sq = a.array().square();
  Index top = 0;
  const double top_sq = sq.maxCoeff(&top);
  if (rho >= 1.0 + top_sq) {
    throw ValidationError("identity-plus-dyad solver requires rho < 1 + max a_i^2");
  }

  ExactResult out;
  if (top_sq == 0.0) {
    // Sigma = I: every unit vector e_i is optimal, take the first.
    Vector e = Vector::Zero(n);
    e(0) = 1.0;
    out.phi = 1.0 - rho;
    out.solution = solution_for_dyad_family(e, sigma, rho);
    return out;
  }

  Vector x;
  if ((sq.array() > rho).any()) {
    Vector thresholded = (sq.array() > rho).select(a, 0.0);
    x = thresholded / thresholded.norm();
    canonical_sign(x);
    out.phi = 1.0 + (sq.array() - rho).cwiseMax(0.0).sum();
  } else {
    x = Vector::Zero(n);
    x(top) = 1.0;
    out.phi = 1.0 + top_sq - rho;
  }
  out.solution = solution_for_dyad_family(x, sigma, rho);
  return out;
}

std::optional<Vector> identity_plus_dyad_vector(const SymMatrix& m, double tol) {
  Matrix shifted = m.matrix();
  shifted.diagonal().array() -= 1.0;
  const auto ed = eigh(symmetrize_unchecked(std::move(shifted)));
  const Index n = ed.values.size();
  const double scale = std::max(1.0, std::abs(ed.values(0)));
  if (ed.values(0) < -tol * scale) return std::nullopt;
  for (Index k = 1; k < n; ++k)
    if (std::abs(ed.values(k)) > tol * scale) return std::nullopt;
  Vector a = std::sqrt(std::max(ed.values(0), 0.0)) * ed.vectors.col(0);
  canonical_sign(a);
  return a;
}

std::string_view to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::DensePsd:
      return "dense-psd";
    case InstanceKind::FastDecay:
      return "fast-decay";
    case InstanceKind::RankOnePlusNoise:
      return "rank-one-plus-noise";
  }
  return "unknown";
}

InstanceKind parse_instance_kind(std::string_view s) {
  if (s == "dense-psd") return InstanceKind::DensePsd;
  if (s == "fast-decay") return InstanceKind::FastDecay;
  if (s == "rank-one-plus-noise") return InstanceKind::RankOnePlusNoise;
  throw ValidationError("unknown instance kind '" + std::string(s) +
                        "' (expected dense-psd, fast-decay or rank-one-plus-noise)");
}

SymMatrix random_instance(Index n, Index m, std::uint64_t seed, InstanceKind kind) {
  if (n < 1 || m < 1 || m > n) {
    throw ValidationError("random_instance needs 1 <= m <= n, got n = " + std::to_string(n) +
                          ", m = " + std::to_string(m));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    return g;
  };

  switch (kind) {
    case InstanceKind::DensePsd: {
      const Matrix g = gaussian(m, n);
      return symmetrize_unchecked(g.transpose() * g / static_cast<double>(m));
    }
    case InstanceKind::FastDecay: {
      const Matrix g = gaussian(m, n);
      const Matrix base = g.transpose() * g / static_cast<double>(m);
      // Target diagonal t_h = c_h / (h + 1) (1-based h >= 2), t_1 = 1, c_h in
      // [0.5, 0.9]. Sorted descending, the h-th largest still obeys 1/(h+1).
      std::uniform_real_distribution<double> unif(0.5, 0.9);
      std::vector<double> target(static_cast<std::size_t>(n));
      target[0] = 1.0;
      for (Index h = 1; h < n; ++h) target[h] = unif(rng) / static_cast<double>(h + 2);
      std::sort(target.begin(), target.end(), std::greater<>());
      Vector scale(n);
      for (Index i = 0; i < n; ++i) scale(i) = std::sqrt(target[i] / base(i, i));
      Matrix out = scale.asDiagonal() * base * scale.asDiagonal();
      out.diagonal() = Eigen::Map<const Vector>(target.data(), n);
      return symmetrize_unchecked(std::move(out));
    }
    case InstanceKind::RankOnePlusNoise: {
      const Vector v = gaussian(n, 1).col(0);
      Matrix out = v * v.transpose();
      if (m > 1) {
        const Matrix g = gaussian(m - 1, n);
        out += 0.05 * g.transpose() * g / static_cast<double>(m - 1);
      }
      return symmetrize_unchecked(std::move(out));
    }
  }
  throw ValidationError("unknown instance kind");
}

}  // namespace cardpen
