// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cardpen/problem.hpp"
#include "cardpen/quality.hpp"
#include "cardpen/sdp.hpp"
#include "commands.hpp"
#include "helpers.hpp"
#include "matrix_io.hpp"

using namespace cardpen;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Vector internal_of(const PrimalSolution& s, const Instance& inst) {
  Vector v(inst.n());
  for (Index k = 0; k < inst.n(); ++k) v(k) = s.x(inst.perm[k]);
  return v;
}

Outcome representations_agree() {
  Outcome o;
  std::mt19937_64 rng(1001);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const auto c = testing_util::random_case(rng, 8);
    const auto inst = preprocess(c.sigma, c.rho);
    const auto res = brute_force(inst);
    const double scale = std::max(1.0, std::abs(res.phi));

    double pattern_max = -INFINITY;
    for (unsigned mask = 1; mask < (1u << inst.n()); ++mask) {
      Vector u = Vector::Zero(inst.n());
      for (Index i = 0; i < inst.n(); ++i)
        if (mask & (1u << i)) u(i) = 1.0;
      pattern_max = std::max(pattern_max, eval_pattern(Pattern(u), inst));
    }
    Vector xi = inst.factor.a * internal_of(res.solution, inst);
    xi.normalize();
    const double rq = rayleigh_threshold(xi, inst);
    const double err = std::max(std::abs(pattern_max - res.phi), std::abs(rq - res.phi)) / scale;
    worst = std::max(worst, err);
    if (err > 1e-8) fail(o, fmt("instance %.0f: discrepancy %.3g", t, err));
  }
  if (o.pass) o.detail = fmt("200 instances, worst relative discrepancy %.2g", worst);
  return o;
}

Outcome sandwich_holds() {
  Outcome o;
  std::mt19937_64 rng(2002);
  double worst_gap = 0;
  for (int t = 0; t < 100; ++t) {
    const auto c = testing_util::random_case(rng, 6);
    const auto inst = preprocess(c.sigma, c.rho);
    const auto r = solve_relaxation(inst);
    const double phi = brute_force(inst).phi;
    const double gap = (r.f_upper - r.g_lower) / std::max(1.0, r.f_upper);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-6) fail(o, fmt("instance %.0f: relative gap %.3g", t, gap));
    if (r.g_lower > r.f_upper) fail(o, fmt("instance %.0f: g %.17g > f", t, r.g_lower));
    if (phi > r.f_upper + 2e-6) fail(o, fmt("instance %.0f: phi %.17g above f %.17g", t, phi, r.f_upper));
  }
  if (o.pass) o.detail = fmt("100 instances, worst relative gap %.2g", worst_gap);
  return o;
}

Outcome exactness_pinches() {
  Outcome o;
  Matrix m(2, 2);
  m << 4, 2, 2, 1;
  struct Pin {
    SymMatrix sigma;
    double rho, value;
  };
  const Pin pins[] = {{SymMatrix(m), 2.0, 2.0},
                      {SymMatrix::diagonal((Vector(2) << 3.0, 1.0).finished()), 0.5, 2.5}};
  for (const auto& p : pins) {
    const auto inst = preprocess(p.sigma, p.rho);
    const auto r = solve_relaxation(inst);
    const double phi = brute_force(inst).phi;
    for (double v : {phi, r.f_upper, r.g_lower}) {
      if (std::abs(v - p.value) > 1e-6) fail(o, fmt("expected %.6g, got %.17g", p.value, v));
    }
    if (!exactness_certificate(r).exact) fail(o, "certificate not exact");
  }
  if (o.pass) o.detail = "rank-one: 2, diagonal: 2.5, both certified exact";
  return o;
}

Outcome trivial_regime() {
  Outcome o;
  std::mt19937_64 rng(4004);
  for (int t = 0; t < 50; ++t) {
    const auto c = testing_util::random_case(rng, 6);
    const double s11 = c.sigma.diag().maxCoeff();
    const double rho = s11 * (1.0 + std::uniform_real_distribution<double>(0, 2)(rng));
    const auto inst = preprocess(c.sigma, t == 0 ? s11 : rho);
    const auto ts = trivial_solutions(inst);
    if (ts.equality.objective != s11 - inst.rho) fail(o, "equality value differs from Sigma_11 - rho");
    if (ts.inequality.objective != 0.0) fail(o, "inequality value is not 0");
    if (objective(ts.equality.x, inst) != ts.equality.objective) fail(o, "objective at e_1 differs");
    const double ref = oracle::phi_by_enumeration(testing_util::to_rows(c.sigma), inst.rho);
    if (std::abs(ref - ts.equality.objective) > 1e-12 * std::max(1.0, std::abs(ref)))
      fail(o, fmt("enumeration %.17g vs closed form %.17g", ref, ts.equality.objective));
  }
  if (o.pass) o.detail = "50 instances incl. rho = Sigma_11; exact equality";
  return o;
}

Outcome theta_pins() {
  Outcome o;
  const double q0 = theta_quadrature(2, 0).value;
  const double q1 = theta_quadrature(2, 1).value;
  const double lb = theta_lower_bound(2, 1).value;
  if (std::abs(q0 - 1) > 1e-9) fail(o, fmt("theta_2(0) = %.17g", q0));
  if (std::abs(q1 - 2 / pi) > 1e-7) fail(o, fmt("theta_2(1) = %.17g", q1));
  if (std::abs(oracle::theta_two(1) - q1) > 1e-9) fail(o, "hand integral disagrees");
  if (std::abs(lb - std::sqrt(2.0) / pi) > 1e-12) fail(o, fmt("bound_2(1) = %.17g", lb));
  const auto mc = theta_monte_carlo(2, 1, 10'000'000, 5);
  if (std::abs(mc.value - 2 / pi) > 3 * *mc.std_error) fail(o, fmt("MC %.8g +- %.2g", mc.value, *mc.std_error));
  if (o.pass)
    o.detail = fmt("theta_2(1) - 2/pi = %.2g, MC(1e7) = %.6f +- %.1g", q1 - 2 / pi, mc.value, *mc.std_error);
  return o;
}

Outcome theta_structure() {
  Outcome o;
  const std::vector<Index> ms{2, 3, 10, 100};
  int mc_checks = 0;
  for (std::size_t a = 0; a < ms.size(); ++a) {
    double prev = INFINITY;
    for (int k = 0; k <= 20; ++k) {
      const double g = 0.25 * k;
      const double q = theta_quadrature(ms[a], g).value;
      if (k == 0 && q != 1.0) fail(o, "theta_m(0) != 1");
      if (q > prev + 1e-9) fail(o, fmt("not nonincreasing in gamma at m=%.0f, gamma=%.2f", ms[a], g));
      if (theta_lower_bound(ms[a], g).value > q + 1e-9)
        fail(o, fmt("bound exceeds quadrature at m=%.0f, gamma=%.2f", ms[a], g));
      if (a > 0 && q > theta_quadrature(ms[a - 1], g).value + 1e-9)
        fail(o, fmt("not nonincreasing in m at m=%.0f, gamma=%.2f", ms[a], g));
      const auto mc = theta_monte_carlo(ms[a], g, 200000, 100 * a + k);
      ++mc_checks;
      if (std::abs(mc.value - q) > 3 * *mc.std_error)
        fail(o, fmt("MC disagrees at m=%.0f, gamma=%.2f (%.3g sigma)", ms[a], g,
                    std::abs(mc.value - q) / *mc.std_error));
      prev = q;
    }
  }
  if (o.pass) o.detail = "4 x 21 grid: monotone in gamma and m, bound dominated, " + std::to_string(mc_checks) + " MC checks within 3 sigma";
  return o;
}

Outcome end_to_end_quality() {
  Outcome o;
  std::mt19937_64 rng(7007);
  double worst5 = INFINITY, worst2 = INFINITY;
  for (int t = 0; t < 100; ++t) {
    const auto c = testing_util::random_case(rng, 6);
    const double s11 = c.sigma.diag().maxCoeff();
    const double cap = rho_admissible(1.0, c.sigma.dim(), s11);
    const double rho = std::uniform_real_distribution<double>(1e-3, 1.0)(rng) * cap;

    const auto inst = preprocess(c.sigma, rho);
    const auto r = solve_relaxation(inst);
    const double phi = brute_force(inst).phi;
    const double slack5 = phi - r.f_upper / pi;
    worst5 = std::min(worst5, slack5);
    if (slack5 < -1e-6) fail(o, fmt("admissible instance %.0f: phi %.17g < psi/pi", t, phi));

    const auto inst2 = preprocess(c.sigma, c.rho);
    const auto r2 = solve_relaxation(inst2);
    const double phi2 = brute_force(inst2).phi;
    const double vt = quality_point(inst2.ordered_sigma, c.rho).vartheta;
    const double slack2 = phi2 - vt * r2.f_upper;
    worst2 = std::min(worst2, slack2);
    if (slack2 < -1e-6) fail(o, fmt("instance %.0f: phi %.17g < vartheta * psi %.17g", t, phi2, vt * r2.f_upper));
  }
  if (o.pass) o.detail = fmt("100 + 100 instances, min slack psi/pi: %.3g, vartheta*psi: %.3g", worst5, worst2);
  return o;
}

Outcome fast_decay_curve() {
  Outcome o;
  int rows = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sigma = random_instance(5, 5, seed, InstanceKind::FastDecay);
    const auto text = cli::write_matrix(sigma, cli::MatrixFormat::Json);
    const auto compact = nlohmann::json::parse(text)["sigma"];
    std::string inline_m;
    for (std::size_t i = 0; i < compact.size(); ++i) {
      if (i) inline_m += ";";
      for (std::size_t j = 0; j < compact[i].size(); ++j) {
        if (j) inline_m += ",";
        inline_m += cli::format_double(compact[i][j].get<double>());
      }
    }
    Vector d = sigma.diag();
    std::sort(d.begin(), d.end(), std::greater<>());
    std::ostringstream out, err;
    const std::string grid = "0:" + cli::format_double(d(0)) + ":401";
    const int code = cli::run_cli({"curve", "--matrix", inline_m, "--grid", grid}, out, err);
    if (code != 0) {
      fail(o, "curve exited with " + std::to_string(code));
      continue;
    }
    const auto report = nlohmann::json::parse(out.str());
    int below = 0;
    for (const auto& p : report["points"]) {
      const double rho = p["rho"], vt = p["vartheta"];
      ++rows;
      if (rho >= d(1) && vt != 1.0) fail(o, fmt("vartheta %.6g != 1 at rho %.6g >= Sigma_22", vt, rho));
      if (rho > 0 && rho < d(1)) {
        ++below;
        if (vt < 1 / pi) fail(o, fmt("vartheta %.6g < 1/pi at rho %.6g", vt, rho));
      }
    }
    if (below == 0 || report["points"].size() < 300) fail(o, "curve grid did not cover both ranges");
  }
  if (o.pass) o.detail = "20 fast-decay 5x5 instances, " + std::to_string(rows) + " curve rows";
  return o;
}

Outcome rounding_valid() {
  Outcome o;
  std::mt19937_64 rng(9009);
  int outputs = 0;
  for (int t = 0; t < 20; ++t) {
    const auto c = testing_util::random_case(rng, 7, 3);
    const auto inst = preprocess(c.sigma, c.rho);
    const auto r = solve_relaxation(inst);
    const double phi = brute_force(inst).phi;
    auto check = [&](const PrimalSolution& s) {
      ++outputs;
      if (std::abs(s.x.norm() - 1.0) > 1e-12) fail(o, fmt("norm %.17g", s.x.norm()));
      for (Index i = 0; i < s.x.size(); ++i) {
        const bool on = std::find(s.support.begin(), s.support.end(), i) != s.support.end();
        if (!on && s.x(i) != 0.0) fail(o, "non-zero entry off the support");
        if (on && s.x(i) == 0.0) fail(o, "zero entry on the support");
      }
      if (static_cast<Index>(s.support.size()) != s.cardinality) fail(o, "cardinality mismatch");
      if (s.objective > phi + 1e-10) fail(o, fmt("objective %.17g above phi %.17g", s.objective, phi));
      if (std::abs(objective(s.x, inst) - s.objective) > 1e-12 * std::max(1.0, phi))
        fail(o, "reported objective does not recompute");
    };
    for (int round = 0; round < 64; ++round) check(randomized_round(r, inst, 1, 1000 * t + round));
    check(randomized_round(r, inst, 64, t));
  }
  if (o.pass) o.detail = "20 instances, " + std::to_string(outputs) + " rounding outputs feasible and <= phi";
  return o;
}

Outcome abs_moment() {
  Outcome o;
  std::mt19937_64 rng(1010);
  std::normal_distribution<double> z;
  double worst = INFINITY;
  for (int t = 0; t < 50; ++t) {
    const int dim = 1 + static_cast<int>(rng() % 8);
    Vector y(dim);
    for (int i = 0; i < dim; ++i) y(i) = z(rng);
    const auto chk = abs_moment_bound_check(y, 100000, 50 + t);
    worst = std::min(worst, (chk.lhs - chk.rhs) / chk.std_error);
    if (!chk.pass()) fail(o, fmt("y #%.0f: lhs %.6g < rhs %.6g - 3 se", t, chk.lhs, chk.rhs));
  }
  if (o.pass) o.detail = fmt("50 vectors, N = 1e5, min (lhs - rhs)/se = %.2f", worst);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const Criterion criteria[] = {
      {"oracle and representation equivalence", representations_agree, 60},
      {"relaxation sandwich", sandwich_holds, 300},
      {"exactness pinches", exactness_pinches, 60},
      {"trivial regime closed forms", trivial_regime, 60},
      {"theta pinned values", theta_pins, 60},
      {"theta structure on the grid", theta_structure, 60},
      {"end-to-end quality bounds", end_to_end_quality, 300},
      {"fast-decay quality curve", fast_decay_curve, 60},
      {"rounding validity", rounding_valid, 60},
      {"absolute moment bound", abs_moment, 60},
  };
  int failures = 0;
  int k = 0;
  for (const auto& c : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) fail(o, fmt("took %.1f s, budget %.0f s", secs, c.budget_s));
    std::printf("%s  %2d. %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", k, c.name, secs, o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", k - failures, k);
  return failures == 0 ? 0 : 1;
}
