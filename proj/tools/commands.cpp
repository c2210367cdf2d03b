#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "cardpen/errors.hpp"
#include "cardpen/problem.hpp"
#include "cardpen/quality.hpp"
#include "cardpen/sdp.hpp"
#include "matrix_io.hpp"

namespace cardpen::cli {

using nlohmann::ordered_json;

GridSpec parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw ParseError("grid must look like start:stop:count, got '" + spec + "'");
  GridSpec g;
  try {
    std::size_t used = 0;
    g.start = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    g.stop = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    g.count = std::stoi(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
  } catch (const std::logic_error&) {
    throw ParseError("grid must look like start:stop:count, got '" + spec + "'");
  }
  if (g.count < 1) throw ValidationError("grid count must be >= 1");
  if (!(g.start <= g.stop)) throw ValidationError("grid start must not exceed stop");
  return g;
}

SymMatrix load_input(const RunConfig& cfg) {
  if (!cfg.input.empty() && !cfg.inline_matrix.empty()) {
    throw ValidationError("give either --input or --matrix, not both");
  }
  if (!cfg.inline_matrix.empty()) return parse_matrix_inline(cfg.inline_matrix);
  if (cfg.input.empty()) throw ValidationError("an input matrix is required (--input or --matrix)");
  return load_matrix(cfg.input);
}

namespace {

double require_rho(const RunConfig& cfg) {
  if (!cfg.rho) throw ValidationError("--rho is required");
  return *cfg.rho;
}

ordered_json vector_json(const Vector& v) {
  ordered_json arr = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

ordered_json index_json(const std::vector<Index>& idx) {
  ordered_json arr = ordered_json::array();
  for (Index i : idx) arr.push_back(i);
  return arr;
}

ordered_json solution_json(const PrimalSolution& s) {
  ordered_json j;
  j["objective"] = s.objective;
  j["cardinality"] = s.cardinality;
  j["support"] = index_json(s.support);
  j["x"] = vector_json(s.x);
  j["model"] = std::string(to_string(s.model));
  return j;
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void emit(const ordered_json& j, std::ostream& out) { out << j.dump(2) << "\n"; }

struct ExactPath {
  std::string name;
  double phi = 0.0;
  PrimalSolution solution;
};

// Structure is recognised on the caller's matrix (screening can make a
// rank-one input look diagonal); the solve itself runs on the screened one.
std::optional<ExactPath> detect_exact(const Instance& inst) {
  const SymMatrix& caller = inst.caller_sigma;
  if (is_diagonal(caller) && caller.dim() > 1) {
    auto r = solve_diagonal(inst);
    return ExactPath{"diagonal", r.phi, std::move(r.solution)};
  }
  if (inst.m() == 1) {
    const Vector a = inst.factor.a.row(0).transpose();
    auto r = solve_rank_one(a, inst.rho);
    return ExactPath{"rank-one", r.phi,
                     make_solution(inst.to_caller(r.solution.x), inst, NormModel::Equality)};
  }
  if (identity_plus_dyad_vector(caller)) {
    if (auto a = identity_plus_dyad_vector(inst.sigma)) {
      auto r = solve_identity_plus_dyad(*a, inst.rho);
      return ExactPath{"identity-plus-dyad", r.phi,
                       make_solution(inst.to_caller(r.solution.x), inst, NormModel::Equality)};
    }
  }
  return std::nullopt;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("report validation failed: " + what);
}

void validate_solve_report(const ordered_json& r, double tol) {
  if (r["regime"] == "trivial") return;
  const double phi_lower = r["phi_lower"].get<double>();
  const auto& x = r["solution"]["x"];
  double norm2 = 0.0;
  for (const auto& v : x) norm2 += v.get<double>() * v.get<double>();
  check(std::abs(std::sqrt(norm2) - 1.0) <= 1e-10, "solution must have unit norm");
  if (r["psi"].is_null()) return;
  const double f = r["psi"]["f_upper"].get<double>();
  const double g = r["psi"]["g_lower"].get<double>();
  const double slack = tol * std::max(1.0, std::abs(f));
  check(g <= f + 1e-8, "g_lower <= f_upper");
  check(phi_lower <= f + slack, "phi_lower <= f_upper + tol");
  if (r.contains("oracle")) {
    const double phi = r["oracle"]["phi"].get<double>();
    check(phi >= phi_lower - 1e-12 * std::max(1.0, std::abs(phi)), "phi_oracle >= phi_lower");
    check(phi <= f + slack, "phi_oracle <= f_upper + tol");
    const double vartheta = r["quality"]["vartheta"].get<double>();
    check(vartheta * f <= phi + slack, "vartheta * f_upper <= phi_oracle + tol");
  }
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(0.25 * k);
  return g;
}

std::vector<double> curve_grid(const RunConfig& cfg, double sigma11) {
  std::vector<double> grid;
  if (cfg.grid) {
    const auto& g = *cfg.grid;
    for (int k = 0; k < g.count; ++k) {
      grid.push_back(g.count == 1 ? g.start
                                  : g.start + (g.stop - g.start) * k / static_cast<double>(g.count - 1));
    }
  } else {
    for (int k = 0; k < 100; ++k) grid.push_back(sigma11 * k / 100.0);
  }
  return grid;
}

std::string csv_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

ordered_json solve_report(const RunConfig& cfg, int* exit_code) {
  const auto start = std::chrono::steady_clock::now();
  const SymMatrix sigma = load_input(cfg);
  const double rho = require_rho(cfg);
  const Instance inst = preprocess(sigma, rho, cfg.screen);
  int code = kOk;

  ordered_json r;
  r["command"] = "solve";
  r["n"] = inst.caller_dim();
  r["rho"] = rho;
  r["regime"] = std::string(to_string(classify_regime(inst)));
  r["screened"] = index_json(inst.screened);

  if (classify_regime(inst) == Regime::Trivial) {
    const auto ts = trivial_solutions(inst);
    r["path"] = "trivial";
    r["phi_lower"] = ts.equality.objective;
    r["psi"] = nullptr;
    r["exact"] = nullptr;
    r["solution"] = solution_json(ts.equality);
    r["trivial"]["equality_value"] = ts.equality.objective;
    r["trivial"]["inequality_value"] = ts.inequality.objective;
    r["trivial"]["inequality_solution"] = solution_json(ts.inequality);
    r["quality"] = nullptr;
    if (cfg.with_oracle) {
      r["oracle"]["phi"] = ts.equality.objective;
      r["oracle"]["phi_inequality"] = ts.inequality.objective;
    }
  } else {
    SolverOptions opts;
    opts.tol = cfg.tol;
    const auto exact = detect_exact(inst);

    std::optional<RelaxationSolution> relax;
    try {
      relax = solve_relaxation(inst, opts);
    } catch (const GuardError&) {
      if (!exact) throw;
    }

    PrimalSolution sol = exact ? exact->solution : randomized_round(*relax, inst, cfg.rounds, cfg.seed);
    r["path"] = exact ? exact->name : "relaxation";
    r["phi_lower"] = sol.objective;
    if (relax) {
      r["psi"]["g_lower"] = relax->g_lower;
      r["psi"]["f_upper"] = relax->f_upper;
      r["psi"]["gap"] = relax->gap;
      r["psi"]["converged"] = relax->converged;
      r["psi"]["newton_iterations"] = relax->newton_iterations;
      r["exact"] = relax->exact;
      r["certificate"] = exactness_certificate(*relax, opts.rank_tol, opts.tol).report;
      if (!relax->converged) code = kConvergence;
    } else {
      r["psi"] = nullptr;
      r["exact"] = nullptr;
    }
    r["solution"] = solution_json(sol);

    const QualityPoint qm = quality_point(inst.ordered_sigma, rho);
    std::optional<QualityPoint> qk;
    if (relax) qk = quality_point(inst.ordered_sigma, rho, relax->rank_x);
    const QualityPoint& q = cfg.use_rank_k && qk ? *qk : qm;
    ordered_json qj;
    qj["rank_source"] = cfg.use_rank_k && qk ? "k" : "m";
    qj["n_rho"] = q.n_rho;
    qj["m_rho"] = q.m_rho;
    qj["gamma"] = optional_json(q.gamma);
    qj["vartheta"] = q.vartheta;
    qj["theta_bound"] = q.gamma ? theta_lower_bound(q.m_rho, *q.gamma).value : 1.0;
    qj["vartheta_m"] = qm.vartheta;
    if (qk) {
      qj["rank_k"] = relax->rank_x;
      qj["vartheta_k"] = qk->vartheta;
    }
    r["quality"] = std::move(qj);

    if (cfg.with_oracle && inst.n() <= cfg.max_oracle_n) {
      OracleOptions oo;
      oo.max_n = cfg.max_oracle_n;
      const auto orc = brute_force(inst, oo);
      r["oracle"]["phi"] = orc.phi;
      r["oracle"]["support"] = index_json(orc.solution.support);
    }
  }

  validate_solve_report(r, cfg.tol);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r["timings"]["total_seconds"] = secs;
  if (exit_code) *exit_code = code;
  return r;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  int code = kOk;
  emit(solve_report(cfg, &code), out);
  return code;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  const SymMatrix sigma = load_input(cfg);
  const double rho = require_rho(cfg);
  const Instance inst = preprocess(sigma, rho, cfg.screen);

  ordered_json r;
  r["command"] = "oracle";
  r["n"] = inst.caller_dim();
  r["rho"] = rho;
  r["regime"] = std::string(to_string(classify_regime(inst)));
  if (classify_regime(inst) == Regime::Trivial) {
    const auto ts = trivial_solutions(inst);
    r["phi"] = ts.equality.objective;
    r["phi_inequality"] = ts.inequality.objective;
    r["solution"] = solution_json(ts.equality);
  } else {
    OracleOptions oo;
    oo.max_n = cfg.max_oracle_n;
    oo.record_table = cfg.table;
    const auto orc = brute_force(inst, oo);
    r["phi"] = orc.phi;
    r["phi_inequality"] = orc.phi_inequality;
    r["solution"] = solution_json(orc.solution);
    if (cfg.table) {
      ordered_json table = ordered_json::array();
      for (const auto& row : orc.table) {
        ordered_json e;
        e["support"] = index_json(row.support);
        e["value"] = row.value;
        table.push_back(std::move(e));
      }
      r["table"] = std::move(table);
    }
  }
  emit(r, out);
  return kOk;
}

int cmd_theta(const RunConfig& cfg, std::ostream& out) {
  const auto gammas = cfg.gamma_values.empty() ? default_gamma_grid() : cfg.gamma_values;
  if (cfg.mc_samples != 0 && cfg.mc_samples < 1000) {
    throw ValidationError("--mc-samples must be 0 or at least 1000");
  }
  struct Row {
    long m;
    double gamma;
    double quad;
    double bound;
    std::optional<double> mc;
    std::optional<double> mc_stderr;
  };
  std::vector<Row> rows;
  std::uint64_t stream = 0;
  for (long m : cfg.m_values) {
    for (double g : gammas) {
      Row row{m, g, theta_quadrature(m, g).value, theta_lower_bound(m, g).value, {}, {}};
      if (cfg.mc_samples > 0) {
        const auto mc = theta_monte_carlo(m, g, cfg.mc_samples, cfg.seed + stream);
        row.mc = mc.value;
        row.mc_stderr = mc.std_error;
      }
      ++stream;
      rows.push_back(row);
    }
  }

  if (cfg.format == OutputFormat::Csv) {
    out << "m,gamma,theta_quad,theta_bound,theta_mc,mc_stderr\n";
    for (const auto& r : rows) {
      out << r.m << "," << format_double(r.gamma) << "," << format_double(r.quad) << ","
          << format_double(r.bound) << "," << csv_field(r.mc) << "," << csv_field(r.mc_stderr)
          << "\n";
    }
  } else {
    ordered_json j;
    j["command"] = "theta";
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json e;
      e["m"] = r.m;
      e["gamma"] = r.gamma;
      e["theta_quad"] = r.quad;
      e["theta_bound"] = r.bound;
      e["theta_mc"] = optional_json(r.mc);
      e["mc_stderr"] = optional_json(r.mc_stderr);
      j["rows"].push_back(std::move(e));
    }
    emit(j, out);
  }
  return kOk;
}

int cmd_curve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SymMatrix sigma = load_input(cfg);
  require_psd(sigma, "Sigma");
  const double sigma11 = sigma.diag().maxCoeff();
  if (!(sigma11 > 0.0)) throw ValidationError("Sigma must be non-zero");
  const auto curve = vartheta_curve(sigma, curve_grid(cfg, sigma11));
  for (double s : curve.skipped) {
    err << "warning: skipped rho = " << format_double(s) << " (>= Sigma_11 = "
        << format_double(sigma11) << ")\n";
  }

  if (cfg.format == OutputFormat::Csv) {
    out << "rho,n_rho,m_rho,gamma,vartheta\n";
    for (const auto& p : curve.points) {
      out << format_double(p.rho) << "," << p.n_rho << "," << p.m_rho << "," << csv_field(p.gamma)
          << "," << format_double(p.vartheta) << "\n";
    }
  } else {
    ordered_json j;
    j["command"] = "curve";
    j["sigma11"] = sigma11;
    j["points"] = ordered_json::array();
    for (const auto& p : curve.points) {
      ordered_json e;
      e["rho"] = p.rho;
      e["n_rho"] = p.n_rho;
      e["m_rho"] = p.m_rho;
      e["gamma"] = optional_json(p.gamma);
      e["vartheta"] = p.vartheta;
      j["points"].push_back(std::move(e));
    }
    j["breakpoints"] = curve.breakpoints;
    j["skipped"] = curve.skipped;
    emit(j, out);
  }
  return kOk;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  const SymMatrix sigma = load_input(cfg);
  const auto rep = check_structural(sigma);
  if (cfg.format == OutputFormat::Csv) {
    out << "h,sigma_hh,bound,pass\n";
    for (const auto& row : rep.rows) {
      out << row.h << "," << format_double(row.sigma_hh) << "," << format_double(row.bound) << ","
          << (row.pass ? "true" : "false") << "\n";
    }
  } else {
    ordered_json j;
    j["command"] = "check";
    j["holds"] = rep.holds;
    j["strictly_decreasing"] = rep.strictly_decreasing;
    j["rows"] = ordered_json::array();
    for (const auto& row : rep.rows) {
      ordered_json e;
      e["h"] = row.h;
      e["sigma_hh"] = row.sigma_hh;
      e["bound"] = row.bound;
      e["pass"] = row.pass;
      j["rows"].push_back(std::move(e));
    }
    emit(j, out);
  }
  return kOk;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto kind = parse_instance_kind(cfg.kind);
  const SymMatrix m = random_instance(cfg.gen_n, cfg.gen_m, cfg.seed, kind);
  const auto fmt = cfg.format == OutputFormat::Csv ? MatrixFormat::Csv : MatrixFormat::Json;
  const std::string text = write_matrix(m, fmt);

  ordered_json echo;
  echo["command"] = "gen";
  echo["seed"] = cfg.seed;
  echo["kind"] = cfg.kind;
  echo["n"] = cfg.gen_n;
  echo["m"] = cfg.gen_m;
  if (cfg.output.empty()) {
    out << text;
    err << echo.dump() << "\n";
  } else {
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + cfg.output + "'");
    f << text;
    echo["path"] = cfg.output;
    out << echo.dump() << "\n";
  }
  return kOk;
}

namespace {

void add_input_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--input,-i", cfg.input, "Matrix file (.json or .csv)");
  sub->add_option("--matrix", cfg.inline_matrix, "Inline matrix, rows separated by ';'");
}

void add_format_option(CLI::App* sub, RunConfig& cfg, std::string& format) {
  (void)cfg;
  sub->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string format = "json";
  std::string grid;
  bool no_screen = false;

  CLI::App app{"Cardinality-penalized sparse PCA: exact oracle, SDP relaxation and quality bounds"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Solve an instance end to end");
  add_input_options(solve, cfg);
  solve->add_option("--rho", cfg.rho, "Penalty parameter");
  solve->add_option("--tol", cfg.tol, "Relative sandwich tolerance");
  solve->add_option("--seed", cfg.seed, "Seed for randomized rounding");
  solve->add_option("--rounds", cfg.rounds, "Number of rounding draws")->check(CLI::PositiveNumber);
  solve->add_flag("--no-screen", no_screen, "Keep indices with Sigma_ii <= rho");
  solve->add_flag("--use-rank-k", cfg.use_rank_k, "Quality estimate from rank(X) instead of m(rho)");
  solve->add_flag("--with-oracle", cfg.with_oracle, "Also run the brute-force oracle");
  solve->add_option("--max-oracle-n", cfg.max_oracle_n, "Oracle size cap");
  add_format_option(solve, cfg, format);

  auto* oracle = app.add_subcommand("oracle", "Exact value by subset enumeration");
  add_input_options(oracle, cfg);
  oracle->add_option("--rho", cfg.rho, "Penalty parameter");
  oracle->add_flag("--no-screen", no_screen, "Keep indices with Sigma_ii <= rho");
  oracle->add_option("--max-oracle-n", cfg.max_oracle_n, "Oracle size cap");
  oracle->add_flag("--table", cfg.table, "Emit the value of every support");
  add_format_option(oracle, cfg, format);

  auto* theta = app.add_subcommand("theta", "Tabulate theta_m(gamma)");
  theta->add_option("--m", cfg.m_values, "Values of m (comma separated)")->delimiter(',');
  theta->add_option("--gamma", cfg.gamma_values, "Values of gamma (comma separated)")->delimiter(',');
  theta->add_option("--mc-samples", cfg.mc_samples, "Monte Carlo samples per row (0 = off)");
  theta->add_option("--seed", cfg.seed, "Monte Carlo seed");
  add_format_option(theta, cfg, format);

  auto* curve = app.add_subcommand("curve", "Quality estimate vartheta(rho) over a grid");
  add_input_options(curve, cfg);
  curve->add_option("--grid", grid, "start:stop:count (inclusive)");
  add_format_option(curve, cfg, format);

  auto* chk = app.add_subcommand("check", "Fast-decay structural test on the diagonal");
  add_input_options(chk, cfg);
  add_format_option(chk, cfg, format);

  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  gen->add_option("--n", cfg.gen_n, "Dimension");
  gen->add_option("--m", cfg.gen_m, "Rank");
  gen->add_option("--kind", cfg.kind, "dense-psd | fast-decay | rank-one-plus-noise");
  gen->add_option("--seed", cfg.seed, "Generator seed");
  gen->add_option("--output,-o", cfg.output, "Output path (stdout if omitted)");
  add_format_option(gen, cfg, format);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  }

  try {
    cfg.screen = !no_screen;
    cfg.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    if (!grid.empty()) cfg.grid = parse_grid(grid);

    if (solve->parsed()) {
      cfg.command = "solve";
      return cmd_solve(cfg, out);
    }
    if (oracle->parsed()) {
      cfg.command = "oracle";
      return cmd_oracle(cfg, out);
    }
    if (theta->parsed()) {
      cfg.command = "theta";
      return cmd_theta(cfg, out);
    }
    if (curve->parsed()) {
      cfg.command = "curve";
      return cmd_curve(cfg, out, err);
    }
    if (chk->parsed()) {
      cfg.command = "check";
      return cmd_check(cfg, out);
    }
    if (gen->parsed()) {
      cfg.command = "gen";
      return cmd_gen(cfg, out, err);
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const GuardError& e) {
    err << "guard: " << e.what() << "\n";
    return kGuard;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << "\n";
    return kConvergence;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace cardpen::cli
