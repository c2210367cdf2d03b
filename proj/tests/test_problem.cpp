#include <doctest.h>

#include <cmath>
#include <random>

#include "cardpen/errors.hpp"
#include "cardpen/problem.hpp"
#include "cardpen/quality.hpp"
#include "helpers.hpp"

using namespace cardpen;

namespace {

SymMatrix mat2(double a, double b, double c) {
  Matrix m(2, 2);
  m << a, b, b, c;
  return SymMatrix(m);
}

}  // namespace

TEST_CASE("preprocess orders, screens and maps back") {
  const auto s = SymMatrix::diagonal((Vector(4) << 0.5, 3.0, 0.0, 1.5).finished());
  const auto inst = preprocess(s, 1.0);
  CHECK(inst.n() == 2);
  CHECK(inst.perm == std::vector<Index>{1, 3});
  CHECK(inst.screened == std::vector<Index>{0, 2});
  CHECK(inst.sigma11() == 3.0);
  CHECK(classify_regime(inst) == Regime::Penalized);

  const Vector back = inst.to_caller((Vector(2) << 0.6, 0.8).finished());
  CHECK(back(1) == 0.6);
  CHECK(back(3) == 0.8);
  CHECK(back(0) == 0.0);

  const auto kept = preprocess(s, 1.0, false);
  CHECK(kept.n() == 3);  // the zero diagonal is always dropped
  CHECK(kept.screened == std::vector<Index>{2});
}

TEST_CASE("preprocess rejects bad input") {
  CHECK_THROWS_AS(preprocess(SymMatrix::identity(2), -0.1), ValidationError);
  CHECK_THROWS_AS(preprocess(SymMatrix::identity(2), NAN), ValidationError);
  CHECK_THROWS_AS(preprocess(SymMatrix::zero(2), 0.1), ValidationError);
  CHECK_THROWS_AS(preprocess(mat2(1, 2, 1), 0.1), ValidationError);  // indefinite
}

TEST_CASE("trivial regime closed forms") {
  const auto s = SymMatrix::diagonal((Vector(2) << 3.0, 1.0).finished());
  const auto inst = preprocess(s, 3.5);
  CHECK(classify_regime(inst) == Regime::Trivial);
  const auto ts = trivial_solutions(inst);
  CHECK(ts.equality.objective == -0.5);
  CHECK(ts.inequality.objective == 0.0);
  CHECK(ts.equality.x(0) == 1.0);
  CHECK(ts.inequality.x.norm() == 0.0);

  const auto edge = preprocess(s, 3.0);  // rho == Sigma_11 is trivial
  CHECK(classify_regime(edge) == Regime::Trivial);
  CHECK(trivial_solutions(edge).equality.objective == 0.0);
  CHECK_THROWS_AS(trivial_solutions(preprocess(s, 1.0)), ValidationError);
}

TEST_CASE("brute force matches the Jacobi enumeration on unscreened data") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 60; ++t) {
    const auto c = testing_util::random_case(rng, 7);
    const auto inst = preprocess(c.sigma, c.rho);
    const auto res = brute_force(inst);
    const double ref = oracle::phi_by_enumeration(testing_util::to_rows(c.sigma), c.rho);
    CHECK(res.phi == doctest::Approx(ref).epsilon(1e-10));
    CHECK(res.phi_inequality == doctest::Approx(std::max(ref, 0.0)).epsilon(1e-10));
    CHECK(res.solution.x.norm() == doctest::Approx(1.0));
    CHECK(objective(res.solution.x, inst) == doctest::Approx(res.phi).epsilon(1e-10));
  }
}

TEST_CASE("brute force table and guard") {
  const auto inst = preprocess(mat2(2, 1, 2), 0.5);
  OracleOptions opts;
  opts.record_table = true;
  const auto res = brute_force(inst, opts);
  CHECK(res.table.size() == 3);
  CHECK(res.phi == doctest::Approx(2.0));
  CHECK(res.solution.support == std::vector<Index>{0, 1});

  opts.max_n = 1;
  CHECK_THROWS_AS(brute_force(inst, opts), GuardError);
}

TEST_CASE("brute force breaks ties toward smaller supports") {
  // diag(1,1): {0} and {1} both give 1 - rho; {0,1} gives 1 - 2 rho.
  const auto inst = preprocess(SymMatrix::identity(2), 0.25);
  const auto res = brute_force(inst);
  CHECK(res.solution.support == std::vector<Index>{0});
}

TEST_CASE("pattern and Rayleigh representations") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 30; ++t) {
    const auto c = testing_util::random_case(rng, 6);
    const auto inst = preprocess(c.sigma, c.rho);
    const auto res = brute_force(inst);

    // Binary maximum of eval_pattern.
    double best = -INFINITY;
    for (unsigned mask = 1; mask < (1u << inst.n()); ++mask) {
      Vector u = Vector::Zero(inst.n());
      for (Index i = 0; i < inst.n(); ++i)
        if (mask & (1u << i)) u(i) = 1.0;
      best = std::max(best, eval_pattern(Pattern(u), inst));
    }
    CHECK(best == doctest::Approx(res.phi).epsilon(1e-9));

    // Rayleigh threshold at xi = normalized A x*.
    const Vector xin = [&] {
      Vector internal(inst.n());
      for (Index k = 0; k < inst.n(); ++k) internal(k) = res.solution.x(inst.perm[k]);
      return internal;
    }();
    Vector xi = inst.factor.a * xin;
    xi.normalize();
    CHECK(rayleigh_threshold(xi, inst) == doctest::Approx(res.phi).epsilon(1e-8));
    const auto back = pattern_to_solution(xi_to_pattern(xi, inst), inst);
    CHECK(back.objective == doctest::Approx(res.phi).epsilon(1e-8));
  }
}

TEST_CASE("pattern validation") {
  CHECK_THROWS_AS(Pattern((Vector(2) << 0.5, 1.5).finished()), ValidationError);
  const Pattern frac((Vector(2) << 0.5, 1.0).finished());
  CHECK_FALSE(frac.binary());
  CHECK(frac.cardinality() == 1.5);
  const auto p = Pattern::from_support(4, {1, 3});
  CHECK(p.binary());
  CHECK(p.support() == std::vector<Index>{1, 3});
  const auto inst = preprocess(SymMatrix::identity(2), 0.1);
  CHECK_THROWS_AS(pattern_to_solution(Pattern(Vector::Zero(2)), inst), ValidationError);
  CHECK_THROWS_AS(rayleigh_threshold((Vector(2) << 1.0, 1.0).finished(), inst), ValidationError);
}

TEST_CASE("closed-form special cases") {
  SUBCASE("rank one") {
    const Vector a = (Vector(2) << 2.0, 1.0).finished();
    const auto r = solve_rank_one(a, 2.0);
    CHECK(r.phi == doctest::Approx(2.0));
    CHECK(r.solution.support == std::vector<Index>{0});
    const auto none = solve_rank_one(a, 5.0);
    CHECK(none.phi == doctest::Approx(-1.0));
  }
  SUBCASE("diagonal") {
    const auto inst = preprocess(SymMatrix::diagonal((Vector(2) << 3.0, 1.0).finished()), 0.5);
    CHECK(solve_diagonal(inst).phi == 2.5);
  }
  SUBCASE("identity plus dyad against the oracle") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    for (int t = 0; t < 20; ++t) {
      Vector a(4);
      for (Index i = 0; i < 4; ++i) a(i) = z(rng);
      const SymMatrix s(Matrix::Identity(4, 4) + a * a.transpose());
      const double rho = std::uniform_real_distribution<double>(0.0, 0.99)(rng);
      const auto got = identity_plus_dyad_vector(s);
      REQUIRE(got.has_value());
      const auto r = solve_identity_plus_dyad(*got, rho);
      CHECK(r.phi == doctest::Approx(oracle::phi_by_enumeration(testing_util::to_rows(s), rho)).epsilon(1e-10));
    }
  }
  CHECK(is_diagonal(SymMatrix::identity(3)));
  CHECK_FALSE(is_diagonal(mat2(1, 0.1, 1)));
  CHECK_FALSE(identity_plus_dyad_vector(mat2(2, 0.1, 1)).has_value());
}

TEST_CASE("random instances are seeded and shaped") {
  for (auto kind : {InstanceKind::DensePsd, InstanceKind::FastDecay, InstanceKind::RankOnePlusNoise}) {
    const auto a = random_instance(5, 3, 9, kind);
    const auto b = random_instance(5, 3, 9, kind);
    CHECK(a.matrix() == b.matrix());
    CHECK(numerical_rank(a, 1e-10) == 3);
    CHECK_NOTHROW(require_psd(a, "Sigma"));
    CHECK(parse_instance_kind(to_string(kind)) == kind);
  }
  CHECK(check_structural(random_instance(5, 5, 1, InstanceKind::FastDecay)).holds);
  CHECK_THROWS_AS(random_instance(3, 4, 0, InstanceKind::DensePsd), ValidationError);
  CHECK_THROWS_AS(parse_instance_kind("sparse"), ValidationError);
}
