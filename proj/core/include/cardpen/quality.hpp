#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cardpen/symmat.hpp"

namespace cardpen {

struct Instance;

enum class ThetaMethod { Quadrature, MonteCarlo, LowerBound };

std::string_view to_string(ThetaMethod m);

/// Estimate of the relaxation quality function
///
///   theta_m(gamma) = E (xi_1^2 - gamma / (m - 1) * sum_{j >= 2} xi_j^2)_+ ,
///
/// xi ~ N(0, I_m).
struct ThetaEstimate {
  double value = 0.0;
  ThetaMethod method = ThetaMethod::Quadrature;
  std::optional<double> std_error;
  Index m = 2;
  double gamma = 0.0;
};

/// Ratio of trigonometric integrals on [0, pi/2] with the numerator split at
/// its kink t* = atan(sqrt((m - 1) / gamma)). Composite Gauss-Legendre
/// panels are halved until successive ratios differ by less than abs_tol.
ThetaEstimate theta_quadrature(Index m, double gamma, double abs_tol = 1e-9);

ThetaEstimate theta_monte_carlo(Index m, double gamma, std::int64_t samples, std::uint64_t seed);

/// 1/2 (1 - gamma + 2/pi sqrt(1 + gamma^2 / (m - 1)))_+, clipped to [0, 1].
ThetaEstimate theta_lower_bound(Index m, double gamma);

/// Largest rho with rho <= gamma / (n + gamma) * sigma11.
double rho_admissible(double gamma, Index n, double sigma11);

struct QualityPoint {
  double rho = 0.0;
  Index n_rho = 0;
  Index m_rho = 0;
  std::optional<double> gamma;
  double vartheta = 1.0;
};

/// n(rho), m(rho) and gamma(rho) for the ordered (unscreened) matrix.
/// vartheta is left at 1; see quality_point for the full evaluation.
/// Throws ValidationError for rho outside [0, Sigma_11).
QualityPoint gamma_of_rho(const SymMatrix& ordered_sigma, double rho);
QualityPoint gamma_of_rho(const Instance& inst);

/// gamma_of_rho plus vartheta = theta_{m(rho)}(gamma(rho)), or 1 when
/// m(rho) == 1. `rank_override` replaces m(rho) by the rank of an optimal
/// dual X when given.
QualityPoint quality_point(const SymMatrix& ordered_sigma, double rho,
                           std::optional<Index> rank_override = std::nullopt);

struct CurveResult {
  std::vector<QualityPoint> points;
  std::vector<double> skipped;      // grid values >= Sigma_11
  std::vector<double> breakpoints;  // diagonal values inside the grid range
};

/// vartheta over a grid of penalties. Sigma need not be ordered; grid
/// points that tie with a diagonal entry are nudged up by 1e-12 relative.
CurveResult vartheta_curve(const SymMatrix& sigma, const std::vector<double>& grid);

struct StructuralRow {
  Index h = 0;  // 1-based
  double sigma_hh = 0.0;
  double bound = 0.0;  // Sigma_11 / (h + 1)
  bool pass = true;
};

struct StructuralReport {
  bool holds = true;                  // Sigma_hh <= Sigma_11/(h+1) for all h >= 2
  bool strictly_decreasing = true;    // Sigma_11 > ... > Sigma_nn
  std::vector<StructuralRow> rows;
};

/// Fast-decay test on the diagonal of Sigma (sorted descending internally).
StructuralReport check_structural(const SymMatrix& sigma);

struct AbsMomentCheck {
  double lhs = 0.0;  // Monte Carlo estimate of E |sum y_i xi_i^2|
  double rhs = 0.0;  // 2/pi |y|_2
  double std_error = 0.0;
  bool pass() const { return lhs >= rhs - 3.0 * std_error; }
};

AbsMomentCheck abs_moment_bound_check(const Vector& y, std::int64_t samples, std::uint64_t seed);

}  // namespace cardpen
