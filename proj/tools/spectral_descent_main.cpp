// spectral-descent: eigenpairs of symmetric (generalized) problems and of the
// discrete Dirichlet Laplacian on masked grids, via the unconstrained
// functional F_{A,B}(x) = 1/2<x,Ax> + gamma/2<x,Bx> - gamma ||x||_B.
//
// Exit codes: 0 success, 2 partial results, 1 runtime error, 64 usage,
// 66 file error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spectral/experiments.hpp"
#include "spectral/gd.hpp"
#include "spectral/io.hpp"
#include "spectral/newton.hpp"
#include "spectral/oracle.hpp"
#include "spectral/parallel.hpp"
#include "spectral/rng.hpp"
#include "spectral/version.hpp"

namespace fs = std::filesystem;
using namespace spectral;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;
constexpr int kExitFile = 66;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

unsigned resolve_threads(unsigned flag_value, bool flag_set) {
  if (flag_set) return flag_value == 0 ? 1 : flag_value;
  if (const char* env = std::getenv("SPECTRAL_DESCENT_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return default_thread_count();
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void digest_input(io::RunManifest& man, const std::string& path) {
  man.input_digests[path] = io::sha256_hex(io::read_text_file(path));
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string matrix_path;
  std::string b_path;
  std::string method = "gd";
  std::string gamma_s = "auto";
  std::string alpha_s = "auto";
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool exact_gamma = false;
  double margin = 1.0;
  double tol_grad = 1e-12;
  double tol_residual = 1e-13;
  std::uint64_t max_iter = 10000000;
  bool force_alpha = false;
};

int cmd_solve(const SolveArgs& args, io::RunManifest man) {
  Timer load_timer;
  SymMatrix a = io::load_symmetric_csv(args.matrix_path);
  digest_input(man, args.matrix_path);
  std::optional<SpdMatrix> b;
  if (!args.b_path.empty()) {
    b.emplace(io::load_symmetric_csv(args.b_path));
    digest_input(man, args.b_path);
  }
  man.phase_seconds["load"] = load_timer.seconds();

  std::optional<double> oracle_lambda1;
  if (args.exact_gamma) {
    oracle_lambda1 = b ? oracle::generalized_eigh(a, b->sym()).eigenvalues.front()
                       : oracle::jacobi_eigh(a).eigenvalues.front();
  }
  double gamma;
  if (args.gamma_s == "auto") {
    gamma = oracle_lambda1 ? std::max(0.0, -*oracle_lambda1) + args.margin
                           : choose_gamma(a, b, args.margin);
  } else {
    gamma = io::parse_double(args.gamma_s, "--gamma");
    if (oracle_lambda1 && !(gamma > std::max(0.0, -*oracle_lambda1)))
      throw std::invalid_argument("--gamma fails the oracle-checked bound");
  }

  SolverConfig cfg;
  cfg.gamma = gamma;
  cfg.seed = args.seed;
  cfg.tol_grad = args.tol_grad;
  cfg.tol_residual = args.tol_residual;
  cfg.max_iter = args.max_iter;
  cfg.force_alpha = args.force_alpha;
  const bool b_metric_bound = args.method == "gd-b" || args.count > 1;
  if (args.alpha_s == "auto") {
    cfg.alpha = b_metric_bound || !b ? choose_stepsize(a, std::nullopt, gamma, 0.9)
                                     : choose_stepsize(a, b, gamma, 0.9);
  } else {
    cfg.alpha = io::parse_double(args.alpha_s, "--alpha");
  }
  man.config["gamma"] = io::format_double(gamma);
  man.config["alpha"] = io::format_double(cfg.alpha);
  man.config["method"] = args.method;
  man.config["count"] = std::to_string(args.count);
  if (args.force_alpha)
    std::cerr << "warning: --force-alpha bypasses the certified stepsize bound; "
                 "the divergence guard will stop a runaway iteration\n";

  if ((args.method == "gd-b") && !b)
    throw CLI::ValidationError("--method gd-b needs --b");
  if ((args.method == "newton" || args.method == "rqi") && args.count != 1)
    throw CLI::ValidationError("--count > 1 is only available for the descent methods");

  Timer solve_timer;
  std::vector<SpectralPair> pairs;
  std::vector<IterationTrace> traces;
  bool complete = true;
  std::string diagnostic;

  if (args.count > 1) {
    DeflatedResult r = gd_deflated(a, b, cfg, args.count);
    pairs = std::move(r.pairs);
    traces = std::move(r.traces);
    complete = r.complete;
    diagnostic = r.diagnostic;
  } else {
    Rng rng(StreamSeed{cfg.seed}.sub("x0"));
    Vector x0 = rng.sphere(a.n());
    if (args.method == "gd") {
      GdResult r = b ? gd_generalized(a, *b, cfg, x0) : gd_standard(a, cfg, x0);
      complete = r.trace.terminal_reason == TerminalReason::converged;
      pairs.push_back(std::move(r.pair));
      traces.push_back(std::move(r.trace));
    } else if (args.method == "gd-b") {
      GdResult r = gd_b_metric(a, *b, cfg, x0);
      complete = r.trace.terminal_reason == TerminalReason::converged;
      pairs.push_back(std::move(r.pair));
      traces.push_back(std::move(r.trace));
    } else if (args.method == "newton" || args.method == "rqi") {
      UpdateRule rule = args.method == "newton" ? UpdateRule::norm_based : UpdateRule::rayleigh;
      NewtonResult r = newton_solve(a, b, cfg, x0, rule);
      complete = r.trace.terminal_reason == TerminalReason::converged;
      if (!complete) diagnostic = to_string(r.trace.terminal_reason);
      pairs.push_back(std::move(r.pair));
      traces.push_back(std::move(r.trace));
    } else {
      throw CLI::ValidationError("--method must be one of gd, gd-b, newton, rqi");
    }
  }
  man.phase_seconds["solve"] = solve_timer.seconds();

  Timer write_timer;
  fs::create_directories(args.out_dir);
  std::string eig = "index,lambda,residual,norm_law_gap\n";
  std::string vecs;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    eig += std::to_string(i + 1) + ',' + io::format_double(pairs[i].lambda) + ',' +
           io::format_double(pairs[i].residual) + ',' +
           io::format_double(pairs[i].norm_law_gap) + '\n';
    vecs += io::vector_to_csv_row(pairs[i].x) + '\n';
  }
  io::write_text_file((fs::path(args.out_dir) / "eigenpairs.csv").string(), eig);
  man.outputs.push_back("eigenpairs.csv");
  io::write_text_file((fs::path(args.out_dir) / "vectors.csv").string(), vecs);
  man.outputs.push_back("vectors.csv");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::string name =
        traces.size() == 1 ? "trace.csv" : "trace_" + std::to_string(i + 1) + ".csv";
    io::write_text_file((fs::path(args.out_dir) / name).string(), traces[i].to_csv());
    man.outputs.push_back(name);
  }
  man.phase_seconds["write"] = write_timer.seconds();
  man.status = complete ? "complete" : "partial";
  man.write(args.out_dir);
  if (!complete && !diagnostic.empty()) std::cerr << "partial: " << diagnostic << "\n";
  return complete ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// laplacian
// ---------------------------------------------------------------------------

struct LaplacianArgs {
  std::string domain = "l-shape";
  std::size_t grid = 81;
  std::size_t count = 1;
  std::string method = "flow";
  double gamma = 50.0;
  double dt = 0.0;
  double tol = 1e-13;
  std::uint64_t max_steps = 4000000;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

grid::GridDomain make_domain(const std::string& spec_str, std::size_t n, io::RunManifest* man) {
  if (spec_str == "l-shape") return grid::l_shape(n);
  if (spec_str == "square") return grid::unit_square(n);
  if (spec_str == "full-square") return grid::full_square(n);
  if (spec_str.rfind("annulus:", 0) == 0) {
    auto rest = spec_str.substr(8);
    auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--domain annulus needs annulus:<r_in>:<r_out>");
    double rin = io::parse_double(rest.substr(0, colon), "--domain annulus");
    double rout = io::parse_double(rest.substr(colon + 1), "--domain annulus");
    return grid::annulus(n, rin, rout);
  }
  if (spec_str.rfind("file:", 0) == 0) {
    std::string path = spec_str.substr(5);
    auto fmt = path.size() > 4 && path.substr(path.size() - 4) == ".csv"
                   ? grid::MaskFormat::csv
                   : grid::MaskFormat::ascii_grid;
    if (man) digest_input(*man, path);
    return grid::load_mask(path, fmt);
  }
  throw CLI::ValidationError(
      "--domain must be l-shape, square, full-square, annulus:rin:rout or file:path");
}

int cmd_laplacian(const LaplacianArgs& args, io::RunManifest man) {
  grid::GridDomain domain = make_domain(args.domain, args.grid, &man);
  grid::FlowConfig cfg;
  cfg.gamma = args.gamma;
  cfg.dt = args.dt;
  cfg.tol = args.tol;
  cfg.max_steps = args.max_steps;
  cfg.seed = args.seed;
  man.config["gamma"] = io::format_double(cfg.gamma);
  man.config["dt"] = io::format_double(cfg.effective_dt(domain.h));
  man.config["tol"] = io::format_double(cfg.tol);
  man.config["domain"] = args.domain;
  man.config["grid"] = std::to_string(args.grid);

  Timer solve_timer;
  std::vector<grid::GridEigenpair> pairs;
  bool complete = true;
  std::string diagnostic;
  if (args.method == "flow") {
    grid::GridEigResult r = grid::solve_eigenfunctions(domain, args.count, cfg);
    pairs = std::move(r.pairs);
    complete = r.complete;
    diagnostic = r.diagnostic;
  } else if (args.method == "newton") {
    StreamSeed root{cfg.seed};
    for (std::size_t j = 0; j < args.count; ++j) {
      grid::GridField u0 =
          grid::random_field(domain, root.sub("newton/" + std::to_string(j) + "/u0").value);
      grid::NewtonGridResult r =
          grid::newton_grid(domain, u0, cfg, grid::GridUpdateRule::norm_based);
      if (r.trace.terminal_reason != TerminalReason::converged) {
        complete = false;
        diagnostic = to_string(r.trace.terminal_reason);
      }
      grid::GridEigenpair p{r.lambda, std::move(r.u), 0.0, r.residual, 0};
      double nrm = grid::l2_norm(p.u);
      p.norm_law_gap = std::fabs(nrm - cfg.gamma / (cfg.gamma + p.lambda));
      if (nrm > 0.0)
        for (auto& v : p.u.values) v /= nrm;
      pairs.push_back(std::move(p));
    }
  } else {
    throw CLI::ValidationError("--method must be flow or newton");
  }
  man.phase_seconds["solve"] = solve_timer.seconds();

  Timer write_timer;
  fs::create_directories(args.out_dir);
  std::string eig = "index,lambda,residual,norm_law_gap\n";
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    eig += std::to_string(j + 1) + ',' + io::format_double(pairs[j].lambda) + ',' +
           io::format_double(pairs[j].residual) + ',' +
           io::format_double(pairs[j].norm_law_gap) + '\n';
    grid::FieldMeta meta{pairs[j].lambda, cfg.gamma, true};
    std::string base = "eig_" + std::to_string(j + 1);
    grid::export_field(pairs[j].u, (fs::path(args.out_dir) / (base + ".csv")).string(),
                       grid::FieldFormat::csv, meta);
    grid::export_field(pairs[j].u, (fs::path(args.out_dir) / (base + ".pgm")).string(),
                       grid::FieldFormat::pgm, meta);
    man.outputs.push_back(base + ".csv");
    man.outputs.push_back(base + ".pgm");
  }
  io::write_text_file((fs::path(args.out_dir) / "eigenvalues.csv").string(), eig);
  man.outputs.push_back("eigenvalues.csv");
  man.phase_seconds["write"] = write_timer.seconds();
  man.status = complete ? "complete" : "partial";
  man.write(args.out_dir);
  if (!complete && !diagnostic.empty()) std::cerr << "partial: " << diagnostic << "\n";
  return complete ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string mode = "matrix";
  std::size_t pairs = 5;
  std::uint64_t trials = 100;
  std::size_t n = 10;
  std::size_t grid = 41;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double gamma = 1.0;  // pairs are SPD, so any positive value is valid
  double tol_residual = 1e-13;
  double grid_tol = 1e-10;
  unsigned threads = 1;
};

int cmd_compare(const CompareArgs& args, io::RunManifest man) {
  fs::create_directories(args.out_dir);
  Timer solve_timer;
  man.config["mode"] = args.mode;
  man.config["trials"] = std::to_string(args.trials);

  if (args.mode == "matrix") {
    man.config["pairs"] = std::to_string(args.pairs);
    man.config["n"] = std::to_string(args.n);
    std::string agg = "pair,rule,hits,max_lambda,mean_lambda,failures\n";
    StreamSeed root{args.seed};
    for (std::size_t p = 0; p < args.pairs; ++p) {
      oracle::RandomProblemSpec spec;
      spec.n = args.n;
      spec.seed = root.sub("pair/" + std::to_string(p)).value;
      spec.eig_range_a = {0.5, 10.0};
      spec.eig_range_b = {1.0, 3.0};
      spec.spd_a = true;
      auto [a, bsym] = oracle::random_pair(spec);
      SpdMatrix b(bsym);
      SolverConfig cfg;
      cfg.gamma = args.gamma;
      cfg.seed = root.sub("pair/" + std::to_string(p) + "/trials").value;
      cfg.tol_residual = args.tol_residual;
      ComparisonStats stats = compare_update_rules(a, b, args.trials, cfg, args.threads);
      std::string tag = "pair_" + std::to_string(p + 1);
      io::write_text_file((fs::path(args.out_dir) / (tag + "_summary.csv")).string(),
                          stats.summary_csv());
      io::write_text_file((fs::path(args.out_dir) / (tag + "_trials.csv")).string(),
                          stats.trials_csv());
      man.outputs.push_back(tag + "_summary.csv");
      man.outputs.push_back(tag + "_trials.csv");
      const ComparisonStats::PerRule* rules[2] = {&stats.norm_based, &stats.rayleigh};
      const char* names[2] = {"norm_based", "rayleigh"};
      for (int ri = 0; ri < 2; ++ri) {
        agg += std::to_string(p + 1);
        agg += ',';
        agg += names[ri];
        agg += ',' + std::to_string(rules[ri]->hits_on_min) + ',' +
               io::format_double(rules[ri]->max_lambda) + ',' +
               io::format_double(rules[ri]->mean_lambda) + ',' +
               std::to_string(rules[ri]->failures) + '\n';
      }
    }
    io::write_text_file((fs::path(args.out_dir) / "summary.csv").string(), agg);
    man.outputs.push_back("summary.csv");
  } else if (args.mode == "grid") {
    man.config["grid"] = std::to_string(args.grid);
    grid::GridDomain domain = grid::l_shape(args.grid);
    grid::FlowConfig cfg;
    cfg.tol = args.grid_tol;
    cfg.seed = args.seed;
    experiments::GridComparison stats =
        experiments::compare_update_rules_grid(domain, args.trials, cfg, args.threads);
    io::write_text_file((fs::path(args.out_dir) / "summary.csv").string(), stats.summary_csv());
    io::write_text_file((fs::path(args.out_dir) / "trials.csv").string(), stats.trials_csv());
    man.outputs.push_back("summary.csv");
    man.outputs.push_back("trials.csv");
  } else {
    throw CLI::ValidationError("--mode must be matrix or grid");
  }
  man.phase_seconds["solve"] = solve_timer.seconds();
  man.write(args.out_dir);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string domain = "l-shape";
  std::size_t grid = 41;
  std::size_t count = 15;
  double epsilon = 0.01;
  double tol = 1e-11;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

int cmd_bench(const BenchArgs& args, io::RunManifest man) {
  grid::GridDomain domain = make_domain(args.domain, args.grid, &man);
  grid::FlowConfig cfg;
  cfg.tol = args.tol;
  cfg.seed = args.seed;
  man.config["epsilon"] = io::format_double(args.epsilon);
  man.config["count"] = std::to_string(args.count);
  Timer t;
  experiments::BenchResult res =
      experiments::bench_methods(domain, args.count, args.epsilon, cfg);
  man.phase_seconds["bench"] = t.seconds();
  fs::create_directories(args.out_dir);
  io::write_text_file((fs::path(args.out_dir) / "timings.csv").string(), res.csv());
  man.outputs.push_back("timings.csv");
  man.write(args.out_dir);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

int cmd_oracle(const std::string& matrix_path, const std::string& b_path) {
  SymMatrix a = io::load_symmetric_csv(matrix_path);
  Vector evals;
  if (b_path.empty()) {
    evals = oracle::jacobi_eigh(a).eigenvalues;
  } else {
    SymMatrix b = io::load_symmetric_csv(b_path);
    evals = oracle::generalized_eigh(a, b).eigenvalues;
  }
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (i) std::cout << ' ';
    std::cout << io::format_double(evals[i]);
  }
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unconstrained-functional eigensolvers (gradient descent, Newton, grid flow)"};
  app.set_config("--config", "", "key=value config file (flags take precedence)");
  app.require_subcommand(1);

  unsigned threads = 0;
  bool threads_set = false;
  app.add_option("--threads", threads, "worker pool size for compare/bench trials")
      ->each([&threads_set](const std::string&) { threads_set = true; });

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "matrix eigenpairs from a CSV problem");
  solve->add_option("--matrix", solve_args.matrix_path, "symmetric matrix CSV")->required();
  solve->add_option("--b", solve_args.b_path, "SPD matrix CSV for the generalized problem");
  solve->add_option("--method", solve_args.method, "gd | gd-b | newton | rqi");
  solve->add_option("--gamma", solve_args.gamma_s, "gamma value or 'auto'");
  solve->add_option("--alpha", solve_args.alpha_s, "stepsize or 'auto'");
  solve->add_option("--count", solve_args.count, "number of eigenpairs (descent methods)");
  solve->add_option("--seed", solve_args.seed, "RNG seed");
  solve->add_option("--out", solve_args.out_dir, "output directory");
  solve->add_flag("--exact-gamma", solve_args.exact_gamma,
                  "validate gamma against the oracle instead of the certified bound");
  solve->add_option("--margin", solve_args.margin, "margin added to the gamma bound");
  solve->add_option("--tol-grad", solve_args.tol_grad, "gradient-norm stop");
  solve->add_option("--tol-residual", solve_args.tol_residual, "Newton residual stop");
  solve->add_option("--max-iter", solve_args.max_iter, "iteration cap");
  solve->add_flag("--force-alpha", solve_args.force_alpha,
                  "accept a stepsize above the certified bound");

  LaplacianArgs lap_args;
  auto* lap = app.add_subcommand("laplacian", "Dirichlet Laplacian eigenfunctions on a mask");
  lap->add_option("--domain", lap_args.domain,
                  "l-shape | square | full-square | annulus:rin:rout | file:path");
  lap->add_option("--grid", lap_args.grid, "grid size including boundary");
  lap->add_option("--count", lap_args.count, "number of eigenfunctions");
  lap->add_option("--method", lap_args.method, "flow | newton");
  lap->add_option("--gamma", lap_args.gamma, "gamma (any positive value is valid here)");
  lap->add_option("--dt", lap_args.dt, "timestep (default 0.17 h^2)");
  lap->add_option("--tol", lap_args.tol, "residual stop");
  lap->add_option("--max-steps", lap_args.max_steps, "flow step cap");
  lap->add_option("--seed", lap_args.seed, "RNG seed");
  lap->add_option("--out", lap_args.out_dir, "output directory");

  CompareArgs cmp_args;
  auto* cmp = app.add_subcommand("compare", "norm-law vs Rayleigh update-rule experiment");
  cmp->add_option("--mode", cmp_args.mode, "matrix | grid");
  cmp->add_option("--pairs", cmp_args.pairs, "random SPD pairs (matrix mode)");
  cmp->add_option("--trials", cmp_args.trials, "trials per pair / per grid");
  cmp->add_option("--n", cmp_args.n, "matrix dimension (matrix mode)");
  cmp->add_option("--grid", cmp_args.grid, "grid size (grid mode)");
  cmp->add_option("--seed", cmp_args.seed, "RNG seed");
  cmp->add_option("--gamma", cmp_args.gamma, "gamma for the Newton runs (pairs are SPD)");
  cmp->add_option("--out", cmp_args.out_dir, "output directory");
  cmp->add_option("--tol-residual", cmp_args.tol_residual, "Newton stop (matrix mode)");
  cmp->add_option("--grid-tol", cmp_args.grid_tol, "Newton stop (grid mode)");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "deflated flow vs Newton vs RQI timings");
  bench->add_option("--domain", bench_args.domain, "domain name (default l-shape)");
  bench->add_option("--grid", bench_args.grid, "grid size");
  bench->add_option("--count", bench_args.count, "eigenfunctions to time");
  bench->add_option("--epsilon", bench_args.epsilon, "warm-start residual (0.1 or 0.01)");
  bench->add_option("--tol", bench_args.tol, "full-convergence residual stop");
  bench->add_option("--seed", bench_args.seed, "RNG seed");
  bench->add_option("--out", bench_args.out_dir, "output directory");

  std::string oracle_matrix, oracle_b;
  auto* orc = app.add_subcommand("oracle", "independent dense verification");
  auto* eigh = orc->add_subcommand("eigh", "print the oracle spectrum");
  eigh->add_option("--matrix", oracle_matrix, "symmetric matrix CSV");
  eigh->add_option("--b", oracle_b, "SPD matrix CSV");
  eigh->add_option("matrix_file", oracle_matrix, "symmetric matrix CSV (positional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  io::RunManifest man;
  man.version = kVersion;
  man.command_line = join_args(argc, argv);
  man.config["threads"] = std::to_string(resolve_threads(threads, threads_set));

  try {
    if (*solve) {
      man.seed = solve_args.seed;
      man.config["seed"] = std::to_string(solve_args.seed);
      return cmd_solve(solve_args, std::move(man));
    }
    if (*lap) {
      man.seed = lap_args.seed;
      man.config["seed"] = std::to_string(lap_args.seed);
      return cmd_laplacian(lap_args, std::move(man));
    }
    if (*cmp) {
      cmp_args.threads = resolve_threads(threads, threads_set);
      man.seed = cmp_args.seed;
      man.config["seed"] = std::to_string(cmp_args.seed);
      return cmd_compare(cmp_args, std::move(man));
    }
    if (*bench) {
      man.seed = bench_args.seed;
      man.config["seed"] = std::to_string(bench_args.seed);
      return cmd_bench(bench_args, std::move(man));
    }
    if (*orc) {
      if (!*eigh || oracle_matrix.empty())
        throw CLI::ValidationError("usage: oracle eigh --matrix A.csv [--b B.csv]");
      return cmd_oracle(oracle_matrix, oracle_b);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::FileError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitFile;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
