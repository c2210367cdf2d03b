#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cardpen/errors.hpp"
#include "cardpen/quality.hpp"
#include "helpers.hpp"

using namespace cardpen;
using std::numbers::pi;

TEST_CASE("pinned theta values") {
  for (Index m : {2, 3, 10, 100}) CHECK(theta_quadrature(m, 0.0).value == 1.0);
  CHECK(theta_quadrature(2, 1.0).value == doctest::Approx(2 / pi).epsilon(1e-9));
  CHECK(theta_quadrature(2, 3.0).value == doctest::Approx(oracle::theta_two(3.0)).epsilon(1e-9));
  CHECK(theta_lower_bound(2, 1.0).value == doctest::Approx(std::sqrt(2.0) / pi).epsilon(1e-14));
  CHECK(theta_lower_bound(2, 0.0).value == doctest::Approx(0.5 * (1 + 2 / pi)).epsilon(1e-14));
  CHECK(theta_quadrature(100, 1.0).value >= 1 / pi);
}

TEST_CASE("quadrature matches Simpson reference") {
  for (int m : {2, 3, 5, 10, 40}) {
    for (double g : {0.1, 0.5, 1.0, 2.5, 7.0}) {
      CHECK(theta_quadrature(m, g).value == doctest::Approx(oracle::theta_simpson(m, g)).epsilon(1e-8));
    }
  }
}

TEST_CASE("theta grid structure") {
  const std::vector<Index> ms{2, 3, 10, 100};
  for (std::size_t a = 0; a < ms.size(); ++a) {
    double prev = 2.0;
    for (int k = 0; k <= 20; ++k) {
      const double g = 0.25 * k;
      const double q = theta_quadrature(ms[a], g).value;
      CHECK(q <= prev + 1e-9);
      CHECK(theta_lower_bound(ms[a], g).value <= q + 1e-9);
      if (a > 0) CHECK(q <= theta_quadrature(ms[a - 1], g).value + 1e-9);
      prev = q;
    }
  }
}

TEST_CASE("Monte Carlo agrees with quadrature") {
  const auto z = theta_monte_carlo(2, 0.0, 20000, 1);
  REQUIRE(z.std_error);
  CHECK(std::abs(z.value - 1.0) <= 3 * *z.std_error);
  const auto mc = theta_monte_carlo(10, 1.0, 200000, 2);
  CHECK(std::abs(mc.value - theta_quadrature(10, 1.0).value) <= 3 * *mc.std_error);
  CHECK(theta_monte_carlo(3, 1.0, 5000, 9).value == theta_monte_carlo(3, 1.0, 5000, 9).value);
  CHECK_THROWS_AS(theta_monte_carlo(3, 1.0, 10, 9), ValidationError);
  CHECK_THROWS_AS(theta_quadrature(1, 1.0), ValidationError);
  CHECK_THROWS_AS(theta_quadrature(2, -1.0), ValidationError);
}

TEST_CASE("admissible rho") {
  CHECK(rho_admissible(1.0, 5, 1.0) == doctest::Approx(1.0 / 6));
  CHECK(rho_admissible(0.0, 5, 1.0) == 0.0);
  CHECK(rho_admissible(1.0, 3, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("gamma of rho") {
  const auto d = SymMatrix::diagonal((Vector(2) << 3.0, 1.0).finished());
  const auto a = gamma_of_rho(d, 2.0);
  CHECK(a.n_rho == 1);
  CHECK(a.m_rho == 1);
  CHECK_FALSE(a.gamma.has_value());
  const auto b = gamma_of_rho(d, 0.5);
  CHECK(b.n_rho == 2);
  CHECK(b.m_rho == 2);
  CHECK(*b.gamma == doctest::Approx(0.4));
  CHECK(*gamma_of_rho(d, 0.0).gamma == 0.0);
  CHECK(quality_point(d, 2.0).vartheta == 1.0);
  CHECK(quality_point(d, 0.5).vartheta == doctest::Approx(theta_quadrature(2, 0.4).value));
  CHECK(quality_point(d, 0.5, Index{1}).vartheta == 1.0);
  CHECK_THROWS_AS(gamma_of_rho(d, 3.0), ValidationError);
  // Ties use the strict set.
  CHECK(gamma_of_rho(d, 1.0).n_rho == 1);
}

TEST_CASE("vartheta curve") {
  const auto d = SymMatrix::diagonal((Vector(3) << 1.0, 3.0, 0.5).finished());
  const auto c = vartheta_curve(d, {0.0, 0.5, 1.0, 2.0, 3.0, 4.0});
  CHECK(c.points.size() == 4);
  CHECK(c.skipped == std::vector<double>{3.0, 4.0});
  CHECK(c.points[0].vartheta == 1.0);
  CHECK(c.points[3].vartheta == 1.0);
  CHECK(c.points[1].rho > 0.5);  // nudged off the tie
  CHECK(c.points[1].n_rho == 2);
  CHECK_THROWS_AS(vartheta_curve(d, {-0.1}), ValidationError);

  const auto fd = random_instance(5, 5, 4, InstanceKind::FastDecay);
  std::vector<double> grid;
  const double s11 = fd.diag().maxCoeff();
  for (int k = 0; k < 200; ++k) grid.push_back(s11 * k / 200.0);
  for (const auto& p : vartheta_curve(fd, grid).points) {
    CHECK(p.vartheta >= 1 / pi - 1e-9);
    CHECK(p.vartheta <= 1.0);
  }
}

TEST_CASE("structural check") {
  auto diag = [](std::initializer_list<double> v) {
    Vector d(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) d(i++) = x;
    return SymMatrix::diagonal(d);
  };
  CHECK(check_structural(diag({1.0, 1.0 / 3, 0.25})).holds);
  const auto bad = check_structural(diag({1.0, 0.5, 0.1}));
  CHECK_FALSE(bad.holds);
  CHECK(bad.rows[0].h == 2);
  CHECK_FALSE(bad.rows[0].pass);
  CHECK(check_structural(diag({2.0})).holds);
  CHECK_FALSE(check_structural(diag({1.0, 0.2, 0.2})).strictly_decreasing);
}

TEST_CASE("absolute moment bound") {
  const auto one = abs_moment_bound_check((Vector(1) << 1.0).finished(), 100000, 1);
  CHECK(std::abs(one.lhs - 1.0) <= 3 * one.std_error);
  CHECK(one.pass());
  const auto pm = abs_moment_bound_check((Vector(2) << 1.0, -1.0).finished(), 100000, 2);
  CHECK(pm.rhs == doctest::Approx(2 / pi * std::sqrt(2.0)));
  CHECK(pm.pass());
  const auto pp = abs_moment_bound_check((Vector(2) << 1.0, 1.0).finished(), 100000, 3);
  CHECK(std::abs(pp.lhs - 2.0) <= 3 * pp.std_error);
  CHECK_THROWS_AS(abs_moment_bound_check(Vector::Zero(2), 100000, 1), ValidationError);
  CHECK_THROWS_AS(abs_moment_bound_check(Vector::Ones(2), 10, 1), ValidationError);
}
