// Integration tests driving the built CLI binary (path from
// SPECTRAL_DESCENT_BIN). Covers the exit-code contract, file formats and the
// byte-identical determinism guarantee.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "spectral/grid.hpp"
#include "spectral/io.hpp"
#include "spectral/oracle.hpp"

namespace fs = std::filesystem;
using namespace spectral;

namespace {

std::string bin() {
  const char* b = std::getenv("SPECTRAL_DESCENT_BIN");
  REQUIRE(b != nullptr);
  return b;
}

fs::path sandbox() {
  fs::path p = fs::temp_directory_path() / "spectral_cli_tests";
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const std::string& redirect = "") {
  std::string cmd = bin() + " " + args;
  if (!redirect.empty()) cmd += " > " + redirect + " 2>&1";
  else cmd += " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& p) {
  CsvTable t;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (first) {
      t.header = fields;
      first = false;
    } else {
      t.rows.push_back(fields);
    }
  }
  return t;
}

void write_matrix(const fs::path& p, const SymMatrix& a) {
  io::write_text_file(p.string(), io::matrix_to_csv(a));
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return io::read_text_file(a.string()) == io::read_text_file(b.string());
}

}  // namespace

TEST_CASE("solve: gd on diag(1,2) writes lambda 1 and a complete manifest") {
  fs::path dir = sandbox() / "solve_gd";
  fs::remove_all(dir);
  write_matrix(sandbox() / "diag12.csv", SymMatrix::diagonal({1.0, 2.0}));
  int rc = run("solve --matrix " + (sandbox() / "diag12.csv").string() +
               " --method gd --gamma auto --out " + dir.string());
  CHECK(rc == 0);
  CsvTable eig = read_csv(dir / "eigenpairs.csv");
  REQUIRE(eig.rows.size() == 1);
  CHECK(std::fabs(io::parse_double(eig.rows[0][1], "lambda") - 1.0) < 1e-8);
  std::string man = io::read_text_file((dir / "manifest.txt").string());
  CHECK(man.find("status=complete") != std::string::npos);
  CHECK(man.find("input.") != std::string::npos);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "vectors.csv"));
}

TEST_CASE("solve: gd-b with count 3 matches the oracle in order") {
  auto [a, bs] = oracle::random_pair({6, 987654, {0.5, 5.0}, {1.0, 2.0}, true});
  fs::path ap = sandbox() / "a6.csv", bp = sandbox() / "b6.csv";
  write_matrix(ap, a);
  write_matrix(bp, bs);
  fs::path dir = sandbox() / "solve_gdb";
  fs::remove_all(dir);
  int rc = run("solve --matrix " + ap.string() + " --b " + bp.string() +
               " --method gd-b --count 3 --seed 5 --out " + dir.string());
  CHECK(rc == 0);
  CsvTable eig = read_csv(dir / "eigenpairs.csv");
  REQUIRE(eig.rows.size() == 3);
  auto dec = oracle::generalized_eigh(a, bs);
  double prev = -1e300;
  for (std::size_t j = 0; j < 3; ++j) {
    double lam = io::parse_double(eig.rows[j][1], "lambda");
    CHECK(std::fabs(lam - dec.eigenvalues[j]) < 1e-7);
    CHECK(lam >= prev - 1e-12);
    prev = lam;
  }
}

TEST_CASE("solve: reruns with the same seed are byte-identical outside the manifest") {
  write_matrix(sandbox() / "d2.csv", SymMatrix::diagonal({1.0, 2.0}));
  fs::path d1 = sandbox() / "det1", d2 = sandbox() / "det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  std::string common = "solve --matrix " + (sandbox() / "d2.csv").string() +
                       " --method gd --count 2 --seed 31 --out ";
  CHECK(run(common + d1.string()) == 0);
  CHECK(run(common + d2.string()) == 0);
  for (const char* f : {"eigenpairs.csv", "vectors.csv", "trace_1.csv", "trace_2.csv"})
    CHECK(same_bytes(d1 / f, d2 / f));
}

TEST_CASE("solve: partial runs exit 2 and the manifest says partial") {
  write_matrix(sandbox() / "d2b.csv", SymMatrix::diagonal({1.0, 2.0}));
  fs::path dir = sandbox() / "solve_partial";
  fs::remove_all(dir);
  int rc = run("solve --matrix " + (sandbox() / "d2b.csv").string() +
               " --method gd --max-iter 3 --out " + dir.string());
  CHECK(rc == 2);
  std::string man = io::read_text_file((dir / "manifest.txt").string());
  CHECK(man.find("status=partial") != std::string::npos);
}

TEST_CASE("solve: newton and rqi methods run to convergence") {
  write_matrix(sandbox() / "d3.csv", SymMatrix::diagonal({2.0, 3.0, 7.0}));
  for (const char* m : {"newton", "rqi"}) {
    fs::path dir = sandbox() / (std::string("solve_") + m);
    fs::remove_all(dir);
    int rc = run("solve --matrix " + (sandbox() / "d3.csv").string() + " --method " + m +
                 " --gamma 1 --seed 3 --out " + dir.string());
    CHECK(rc == 0);
  }
}

TEST_CASE("exit codes: usage 64, missing/malformed files 66") {
  CHECK(run("solve --no-such-flag x") == 64);
  CHECK(run("nonsense") == 64);
  CHECK(run("solve --matrix /nonexistent/a.csv") == 66);

  fs::path bad = sandbox() / "bad.csv";
  io::write_text_file(bad.string(), "1,2\n2,oops\n");
  std::string outfile = (sandbox() / "err.txt").string();
  int rc = run("oracle eigh " + bad.string(), outfile);
  CHECK(rc == 66);
  std::string msg = io::read_text_file(outfile);
  CHECK(msg.find("line 2") != std::string::npos);

  io::write_text_file(bad.string(), "1,2\n3,4\n");  // asymmetric beyond 1e-12
  CHECK(run("oracle eigh " + bad.string()) == 66);
}

TEST_CASE("oracle eigh prints the ascending spectrum") {
  write_matrix(sandbox() / "d312.csv", SymMatrix::diagonal({3.0, 1.0, 2.0}));
  std::string outfile = (sandbox() / "oracle_out.txt").string();
  CHECK(run("oracle eigh " + (sandbox() / "d312.csv").string(), outfile) == 0);
  CHECK(io::read_text_file(outfile) == "1 2 3\n");
}

TEST_CASE("oracle eigh --b prints the generalized spectrum") {
  auto [a, bs] = oracle::random_pair({5, 2468, {0.5, 4.0}, {1.0, 2.0}, true});
  write_matrix(sandbox() / "ga.csv", a);
  write_matrix(sandbox() / "gb.csv", bs);
  std::string outfile = (sandbox() / "oracle_gen.txt").string();
  CHECK(run("oracle eigh --matrix " + (sandbox() / "ga.csv").string() + " --b " +
                (sandbox() / "gb.csv").string(),
            outfile) == 0);
  std::istringstream ss(io::read_text_file(outfile));
  auto dec = oracle::generalized_eigh(a, bs);
  // shortest-round-trip formatting makes the file round trip exact; the
  // tolerance only decouples the check from output formatting details
  for (double expect : dec.eigenvalues) {
    std::string tok;
    REQUIRE((ss >> tok));
    CHECK(std::fabs(io::parse_double(tok, "eig") - expect) < 1e-9 * (1.0 + std::fabs(expect)));
  }
}

TEST_CASE("laplacian: unit square ground state matches the closed form at grid 41") {
  fs::path dir = sandbox() / "lap_square";
  fs::remove_all(dir);
  int rc = run("laplacian --domain square --grid 41 --count 1 --tol 1e-12 --out " +
               dir.string());
  CHECK(rc == 0);
  CsvTable eig = read_csv(dir / "eigenvalues.csv");
  REQUIRE(eig.rows.size() == 1);
  double h = 2.0 / 40.0;
  double expect = (4.0 / (h * h)) * (1.0 - std::cos(3.14159265358979323846 * h));
  CHECK(std::fabs(io::parse_double(eig.rows[0][1], "lambda") - expect) < 1e-8);
  CHECK(fs::exists(dir / "eig_1.pgm"));
  CHECK(fs::exists(dir / "eig_1.csv"));
}

TEST_CASE("laplacian: a file-loaded l-shape mask reproduces the builtin bitwise") {
  fs::path dir_a = sandbox() / "lap_builtin", dir_b = sandbox() / "lap_file";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  CHECK(run("laplacian --domain l-shape --grid 21 --count 2 --tol 1e-11 --seed 9 --out " +
            dir_a.string()) == 0);
  // save the same mask through the library and load it via file:
  auto ls = grid::l_shape(21);
  fs::path mask = sandbox() / "lshape21.txt";
  grid::save_mask(ls, mask.string(), grid::MaskFormat::ascii_grid);
  CHECK(run("laplacian --domain file:" + mask.string() +
            " --grid 21 --count 2 --tol 1e-11 --seed 9 --out " + dir_b.string()) == 0);
  for (const char* f : {"eigenvalues.csv", "eig_1.csv", "eig_2.csv", "eig_1.pgm", "eig_2.pgm"})
    CHECK(same_bytes(dir_a / f, dir_b / f));
}

TEST_CASE("compare: matrix mode emits per-pair stats with the hit accounting intact") {
  fs::path dir = sandbox() / "cmp_matrix";
  fs::remove_all(dir);
  int rc = run("compare --mode matrix --pairs 2 --trials 20 --n 6 --seed 11 --out " +
               dir.string());
  CHECK(rc == 0);
  CsvTable summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.rows.size() == 4);  // 2 pairs x 2 rules
  for (const auto& row : summary.rows) {
    std::uint64_t hits = std::stoull(row[2]);
    std::uint64_t failures = std::stoull(row[5]);
    CHECK(hits + failures <= 20);
  }
  CsvTable trials = read_csv(dir / "pair_1_trials.csv");
  CHECK(trials.rows.size() == 20);
}

TEST_CASE("compare: thread count does not change the numbers") {
  fs::path d1 = sandbox() / "cmp_t1", d2 = sandbox() / "cmp_t4";
  fs::remove_all(d1);
  fs::remove_all(d2);
  std::string base = "compare --mode matrix --pairs 1 --trials 16 --n 5 --seed 2 --out ";
  CHECK(run("--threads 1 " + base + d1.string()) == 0);
  CHECK(run("--threads 4 " + base + d2.string()) == 0);
  CHECK(same_bytes(d1 / "summary.csv", d2 / "summary.csv"));
  CHECK(same_bytes(d1 / "pair_1_trials.csv", d2 / "pair_1_trials.csv"));
}

TEST_CASE("config file supplies defaults, flags take precedence") {
  write_matrix(sandbox() / "dcfg.csv", SymMatrix::diagonal({1.0, 2.0}));
  fs::path cfg = sandbox() / "run.cfg";
  io::write_text_file(cfg.string(), "[solve]\nseed=31\ncount=2\n");
  fs::path d_cfg = sandbox() / "cfg_out", d_flag = sandbox() / "flag_out";
  fs::remove_all(d_cfg);
  fs::remove_all(d_flag);
  CHECK(run("--config " + cfg.string() + " solve --matrix " + (sandbox() / "dcfg.csv").string() +
            " --method gd --out " + d_cfg.string()) == 0);
  // identical to the explicit flags...
  CHECK(run("solve --matrix " + (sandbox() / "dcfg.csv").string() +
            " --method gd --seed 31 --count 2 --out " + d_flag.string()) == 0);
  CHECK(same_bytes(d_cfg / "eigenpairs.csv", d_flag / "eigenpairs.csv"));
  // ...and a flag overrides the config value
  fs::path d_override = sandbox() / "override_out";
  fs::remove_all(d_override);
  CHECK(run("--config " + cfg.string() + " solve --matrix " +
            (sandbox() / "dcfg.csv").string() + " --method gd --seed 77 --out " +
            d_override.string()) == 0);
  std::string man = io::read_text_file((d_override / "manifest.txt").string());
  CHECK(man.find("config.seed=77") != std::string::npos);
}

TEST_CASE("compare: at n = 50 the Rayleigh rule never hits the smallest (shipped seed)") {
  fs::path dir = sandbox() / "cmp_n50";
  fs::remove_all(dir);
  int rc = run("compare --mode matrix --pairs 1 --trials 100 --n 50 --seed 20260809 --out " +
               dir.string());
  CHECK(rc == 0);
  for (const auto& row : read_csv(dir / "summary.csv").rows) {
    if (row[1] == "rayleigh") CHECK(std::stoull(row[2]) == 0);
    if (row[1] == "norm_based") CHECK(std::stoull(row[2]) > 0);
  }
}

TEST_CASE("SPECTRAL_DESCENT_THREADS env matches the --threads flag byte for byte") {
  fs::path d1 = sandbox() / "env_t", d2 = sandbox() / "flag_t";
  fs::remove_all(d1);
  fs::remove_all(d2);
  std::string base = "compare --mode matrix --pairs 1 --trials 8 --n 5 --seed 6 --out ";
  int rc = std::system(("SPECTRAL_DESCENT_THREADS=3 " + bin() + " " + base + d1.string() +
                        " > /dev/null 2>&1")
                           .c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(run("--threads 3 " + base + d2.string()) == 0);
  CHECK(same_bytes(d1 / "summary.csv", d2 / "summary.csv"));
}

TEST_CASE("bench: timing table has one row per eigenfunction with positive times") {
  fs::path dir = sandbox() / "bench_small";
  fs::remove_all(dir);
  int rc = run("bench --domain l-shape --grid 21 --count 2 --epsilon 0.1 --tol 1e-9 --out " +
               dir.string());
  CHECK(rc == 0);
  CsvTable t = read_csv(dir / "timings.csv");
  REQUIRE(t.rows.size() == 2);
  for (const auto& row : t.rows)
    for (int c = 1; c <= 3; ++c) CHECK(io::parse_double(row[c], "time") > 0.0);
}
