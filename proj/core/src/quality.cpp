#include "cardpen/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "cardpen/errors.hpp"
#include "cardpen/problem.hpp"

namespace cardpen {

std::string_view to_string(ThetaMethod m) {
  switch (m) {
    case ThetaMethod::Quadrature:
      return "quadrature";
    case ThetaMethod::MonteCarlo:
      return "monte-carlo";
    case ThetaMethod::LowerBound:
      return "lower-bound";
  }
  return "unknown";
}

namespace {

constexpr int kGaussOrder = 16;

struct GaussRule {
  std::array<double, kGaussOrder> nodes{};
  std::array<double, kGaussOrder> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
GaussRule make_gauss_rule() {
  GaussRule rule;
  constexpr int n = kGaussOrder;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

const GaussRule& gauss_rule() {
  static const GaussRule rule = make_gauss_rule();
  return rule;
}

// Composite rule with `panels` equal panels on [a, b].
template <class F>
double composite(const F& f, double a, double b, long panels) {
  const auto& rule = gauss_rule();
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (long k = 0; k < panels; ++k) {
    const double lo = a + h * static_cast<double>(k);
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (int q = 0; q < kGaussOrder; ++q) s += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
    total += 0.5 * h * s;
  }
  return total;
}

void require_theta_args(Index m, double gamma) {
  if (m < 2) throw ValidationError("theta_m(gamma) needs m >= 2, got " + std::to_string(m));
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw ValidationError("theta_m(gamma) needs a finite gamma >= 0, got " +
                          std::to_string(gamma));
  }
}

}  // namespace

ThetaEstimate theta_quadrature(Index m, double gamma, double abs_tol) {
  require_theta_args(m, gamma);
  ThetaEstimate est{1.0, ThetaMethod::Quadrature, std::nullopt, m, gamma};
  if (gamma == 0.0) return est;

  const double c = gamma / static_cast<double>(m - 1);
  const double power = static_cast<double>(m - 2);
  const double kink = std::atan(std::sqrt(static_cast<double>(m - 1) / gamma));
  const double half_pi = 0.5 * std::numbers::pi;

  auto weight = [power](double t) { return power == 0.0 ? 1.0 : std::pow(std::sin(t), power); };
  auto numerator = [&](double t) {
    const double cs = std::cos(t);
    const double sn = std::sin(t);
    return std::max(cs * cs - c * sn * sn, 0.0) * weight(t);
  };
  auto denominator = [&](double t) {
    const double cs = std::cos(t);
    return cs * cs * weight(t);
  };

  // Both integrals use the same panels on [0, t*] and [t*, pi/2]; the
  // numerator vanishes on the second piece.
  double prev = std::numeric_limits<double>::quiet_NaN();
  double prev_den = prev;
  double ratio = 0.0;
  for (long panels = 1; panels <= (1L << 20); panels *= 2) {
    const double num = composite(numerator, 0.0, kink, panels);
    const double den = composite(denominator, 0.0, kink, panels) +
                       composite(denominator, kink, half_pi, panels);
    ratio = num / den;
    if (std::isfinite(prev) && std::abs(ratio - prev) < abs_tol &&
        std::abs(den - prev_den) <= abs_tol * den) {
      break;
    }
    prev = ratio;
    prev_den = den;
  }
  est.value = std::clamp(ratio, 0.0, 1.0);
  return est;
}

ThetaEstimate theta_monte_carlo(Index m, double gamma, std::int64_t samples, std::uint64_t seed) {
  require_theta_args(m, gamma);
  if (samples < 1000) {
    throw ValidationError("theta_monte_carlo needs at least 1000 samples");
  }
  const double c = gamma / static_cast<double>(m - 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const double x1 = normal(rng);
    double rest = 0.0;
    for (Index j = 1; j < m; ++j) {
      const double v = normal(rng);
      rest += v * v;
    }
    const double val = std::max(x1 * x1 - c * rest, 0.0);
    const double delta = val - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (val - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, ThetaMethod::MonteCarlo, std::sqrt(var / static_cast<double>(samples)), m, gamma};
}

ThetaEstimate theta_lower_bound(Index m, double gamma) {
  require_theta_args(m, gamma);
  const double root = std::sqrt(1.0 + gamma * gamma / static_cast<double>(m - 1));
  const double v = 0.5 * (1.0 - gamma + (2.0 / std::numbers::pi) * root);
  return {std::clamp(v, 0.0, 1.0), ThetaMethod::LowerBound, std::nullopt, m, gamma};
}

double rho_admissible(double gamma, Index n, double sigma11) {
  if (n < 1) throw ValidationError("rho_admissible needs n >= 1");
  if (!(sigma11 > 0.0)) throw ValidationError("rho_admissible needs Sigma_11 > 0");
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw ValidationError("rho_admissible needs a finite gamma >= 0");
  }
  return gamma / (static_cast<double>(n) + gamma) * sigma11;
}

namespace {

SymMatrix ordered_copy(const SymMatrix& sigma) {
  std::vector<Index> order(static_cast<std::size_t>(sigma.dim()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return sigma(i, i) > sigma(j, j); });
  return sigma.principal(order);
}

bool is_ordered(const SymMatrix& sigma) {
  for (Index i = 1; i < sigma.dim(); ++i)
    if (sigma(i, i) > sigma(i - 1, i - 1)) return false;
  return true;
}

}  // namespace

QualityPoint gamma_of_rho(const SymMatrix& ordered_sigma, double rho) {
  if (!is_ordered(ordered_sigma)) return gamma_of_rho(ordered_copy(ordered_sigma), rho);
  const double s11 = ordered_sigma(0, 0);
  if (!std::isfinite(rho) || rho < 0.0 || rho >= s11) {
    throw ValidationError("gamma(rho) is defined for 0 <= rho < Sigma_11 = " +
                          std::to_string(s11) + ", got rho = " + std::to_string(rho));
  }
  QualityPoint q;
  q.rho = rho;
  while (q.n_rho < ordered_sigma.dim() && ordered_sigma(q.n_rho, q.n_rho) > rho) ++q.n_rho;
  std::vector<Index> lead(static_cast<std::size_t>(q.n_rho));
  std::iota(lead.begin(), lead.end(), Index{0});
  q.m_rho = numerical_rank(ordered_sigma.principal(lead), kFactorRankTol);
  if (q.m_rho > 1) {
    q.gamma = static_cast<double>(q.n_rho) / static_cast<double>(q.m_rho - 1) * rho / (s11 - rho);
  }
  return q;
}

QualityPoint gamma_of_rho(const Instance& inst) { return gamma_of_rho(inst.ordered_sigma, inst.rho); }

QualityPoint quality_point(const SymMatrix& ordered_sigma, double rho,
                           std::optional<Index> rank_override) {
  QualityPoint q = gamma_of_rho(ordered_sigma, rho);
  if (rank_override) {
    if (*rank_override < 1) throw ValidationError("rank override must be >= 1");
    const double s11 = std::max(ordered_sigma.diag().maxCoeff(), 0.0);
    q.m_rho = std::min(q.m_rho, *rank_override);
    q.gamma.reset();
    if (q.m_rho > 1) {
      q.gamma =
          static_cast<double>(q.n_rho) / static_cast<double>(q.m_rho - 1) * rho / (s11 - rho);
    }
  }
  q.vartheta = q.gamma ? theta_quadrature(q.m_rho, *q.gamma).value : 1.0;
  return q;
}

CurveResult vartheta_curve(const SymMatrix& sigma, const std::vector<double>& grid) {
  const SymMatrix ordered = ordered_copy(sigma);
  const Vector diag = ordered.diag();
  const double s11 = diag(0);
  CurveResult out;
  for (double rho : grid) {
    if (!std::isfinite(rho) || rho < 0.0) {
      throw ValidationError("curve grid values must be finite and >= 0, got " +
                            std::to_string(rho));
    }
    if (rho >= s11) {
      out.skipped.push_back(rho);
      continue;
    }
    if ((diag.array() == rho).any()) rho *= 1.0 + 1e-12;
    out.points.push_back(quality_point(ordered, rho));
  }
  if (!grid.empty()) {
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    for (Index i = 0; i < diag.size(); ++i) {
      const double d = diag(i);
      if (d >= *lo && d <= *hi &&
          (out.breakpoints.empty() || out.breakpoints.back() != d)) {
        out.breakpoints.push_back(d);
      }
    }
  }
  return out;
}

StructuralReport check_structural(const SymMatrix& sigma) {
  Vector d = sigma.diag();
  std::sort(d.begin(), d.end(), std::greater<>());
  StructuralReport rep;
  const double s11 = d(0);
  for (Index i = 1; i < d.size(); ++i) {
    const Index h = i + 1;
    StructuralRow row{h, d(i), s11 / static_cast<double>(h + 1), true};
    row.pass = row.sigma_hh <= row.bound;
    rep.holds = rep.holds && row.pass;
    rep.strictly_decreasing = rep.strictly_decreasing && d(i) < d(i - 1);
    rep.rows.push_back(row);
  }
  return rep;
}

AbsMomentCheck abs_moment_bound_check(const Vector& y, std::int64_t samples, std::uint64_t seed) {
  if (y.size() == 0 || y.cwiseAbs().maxCoeff() == 0.0) {
    throw ValidationError("abs_moment_bound_check needs a non-zero vector");
  }
  if (samples < 10000) throw ValidationError("abs_moment_bound_check needs at least 1e4 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    double acc = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double v = normal(rng);
      acc += y(i) * v * v;
    }
    const double val = std::abs(acc);
    const double delta = val - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (val - mean);
  }
  AbsMomentCheck out;
  out.lhs = mean;
  out.rhs = 2.0 / std::numbers::pi * y.norm();
  out.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  return out;
}

}  // namespace cardpen
