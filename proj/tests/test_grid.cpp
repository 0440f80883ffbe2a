#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "spectral/experiments.hpp"
#include "spectral/grid.hpp"
#include "spectral/io.hpp"
#include "spectral/rng.hpp"

using namespace spectral;
using namespace spectral::grid;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Sampled sin(n pi x) sin(m pi y); an exact discrete eigenfunction wherever
// the mask boundary coincides with its zero lines.
GridField sampled_sine(const GridDomain& d, int n, int m) {
  GridField u(d);
  for (std::size_t iy = 0; iy < d.ny; ++iy)
    for (std::size_t ix = 0; ix < d.nx; ++ix)
      if (d.in(ix, iy))
        u.at(ix, iy) = std::sin(n * kPi * d.x(ix)) * std::sin(m * kPi * d.y(iy));
  return u;
}

}  // namespace

TEST_CASE("builtin domains: interior counts and geometry") {
  GridDomain fs = full_square(81);
  CHECK(fs.interior_count() == 79 * 79);

  GridDomain ls = l_shape(81);
  CHECK(ls.interior_count() == 79 * 79 - 40 * 40);
  // removed quadrant [0,1) x (-1,0]: x=0.5, y=-0.5 is out; x=-0.5, y=0.5 in
  CHECK(!ls.in(60, 20));
  CHECK(ls.in(20, 60));
  // x=0 boundary line with y<0 removed, with y>0 kept
  CHECK(!ls.in(40, 20));
  CHECK(ls.in(40, 60));

  GridDomain us = unit_square(81);
  CHECK(us.interior_count() == 39 * 39);

  GridDomain an = annulus(81, 0.3, 0.9);
  CHECK(an.interior_count() > 0);
  CHECK(!an.in(40, 40));  // center is inside the hole
}

TEST_CASE("mask round-trip through both file formats") {
  GridDomain ls = l_shape(41);
  for (auto fmt : {MaskFormat::ascii_grid, MaskFormat::csv}) {
    std::string path = temp_path(fmt == MaskFormat::csv ? "mask_rt.csv" : "mask_rt.txt");
    save_mask(ls, path, fmt);
    GridDomain back = load_mask(path, fmt);
    CHECK(back.nx == ls.nx);
    CHECK(back.ny == ls.ny);
    CHECK(back.h == ls.h);
    CHECK(back.mask == ls.mask);
    std::remove(path.c_str());
  }
}

TEST_CASE("load_mask: malformed files and all-false masks are file errors") {
  std::string path = temp_path("bad_mask.txt");
  io::write_text_file(path, "5 5 0.5\n00000\n00x00\n00000\n00000\n00000\n");
  CHECK_THROWS_AS(load_mask(path, MaskFormat::ascii_grid), io::FileError);
  io::write_text_file(path, "5 5 0.5\n00000\n00000\n00000\n00000\n00000\n");
  CHECK_THROWS_AS(load_mask(path, MaskFormat::ascii_grid), io::FileError);
  io::write_text_file(path, "5 5 0.5\n11111\n10001\n10001\n10001\n11111\n");
  CHECK_THROWS_AS(load_mask(path, MaskFormat::ascii_grid), io::FileError);
  std::remove(path.c_str());
}

TEST_CASE("apply_neg_laplacian: zero field, separable eigenfunction, point spike") {
  GridDomain fs = full_square(81);
  GridField zero(fs);
  GridField lz = apply_neg_laplacian(zero);
  for (double v : lz.values) CHECK(v == 0.0);

  GridField u = sampled_sine(fs, 1, 1);
  double lam = (2.0 / (fs.h * fs.h)) * (2.0 - 2.0 * std::cos(kPi * fs.h));
  GridField lu = apply_neg_laplacian(u);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    if (!fs.mask[k] || std::fabs(u.values[k]) < 1e-12) continue;
    CHECK(std::fabs(lu.values[k] - lam * u.values[k]) <= 1e-10 * std::fabs(lam * u.values[k]));
  }

  GridField spike(fs);
  spike.at(40, 40) = 1.0;
  GridField ls = apply_neg_laplacian(spike);
  double ih2 = 1.0 / (fs.h * fs.h);
  CHECK(ls.at(40, 40) == doctest::Approx(4.0 * ih2));
  CHECK(ls.at(41, 40) == doctest::Approx(-ih2));
  CHECK(ls.at(39, 40) == doctest::Approx(-ih2));
  CHECK(ls.at(40, 41) == doctest::Approx(-ih2));
  CHECK(ls.at(40, 39) == doctest::Approx(-ih2));
}

TEST_CASE("flow_step: exact discrete eigenfield is a fixed point") {
  GridDomain us = unit_square(41);
  FlowConfig cfg;
  cfg.gamma = 50.0;
  double lam = closed_form_square_eig(1, 1, us.h);
  GridField u = sampled_sine(us, 1, 1);
  double target = cfg.gamma / (cfg.gamma + lam);
  double scale = target / l2_norm(u);
  for (auto& v : u.values) v *= scale;
  GridField next = flow_step(u, cfg);
  for (std::size_t k = 0; k < u.values.size(); ++k)
    CHECK(std::fabs(next.values[k] - u.values[k]) <= 1e-12 * (1.0 + std::fabs(u.values[k])));
}

TEST_CASE("flow_step: gamma = 0 reduces to a pure heat step") {
  GridDomain us = unit_square(21);
  GridField u = random_field(us, 5);
  FlowConfig cfg;
  cfg.gamma = 0.0;
  GridField heat = apply_neg_laplacian(u);
  GridField next = flow_step(u, cfg);
  double dt = cfg.effective_dt(us.h);
  for (std::size_t k = 0; k < u.values.size(); ++k)
    CHECK(next.values[k] == doctest::Approx(u.values[k] - dt * heat.values[k]).epsilon(1e-14));
}

TEST_CASE("flow_step decreases the discrete functional from a random field") {
  GridDomain ls = l_shape(41);
  FlowConfig cfg;
  GridField u = random_field(ls, 11);
  double before = functional_value(u, cfg.gamma);
  GridField v = flow_step(u, cfg);
  double after = functional_value(v, cfg.gamma);
  CHECK(after < before);
  // and stays monotone along a short run
  for (int i = 0; i < 200; ++i) {
    u = flow_step(u, cfg);
    double cur = functional_value(u, cfg.gamma);
    CHECK(cur <= before + 1e-13 * (1.0 + std::fabs(before)));
    before = cur;
  }
}

TEST_CASE("flow_step rejects the zero field and unstable dt") {
  GridDomain us = unit_square(21);
  GridField zero(us);
  FlowConfig cfg;
  CHECK_THROWS_AS(flow_step(zero, cfg), std::invalid_argument);
  GridField u = random_field(us, 1);
  cfg.dt = 0.3 * us.h * us.h;
  CHECK_THROWS_AS(flow_step(u, cfg), std::invalid_argument);
}

TEST_CASE("operator symmetry and positivity on random masked fields") {
  GridDomain ls = l_shape(21);
  for (std::uint64_t s = 0; s < 100; ++s) {
    GridField u = random_field(ls, 1000 + s);
    GridField v = random_field(ls, 2000 + s);
    double a = l2_inner(apply_neg_laplacian(u), v);
    double b = l2_inner(u, apply_neg_laplacian(v));
    CHECK(std::fabs(a - b) <= 1e-10 * (std::fabs(a) + 1.0));
    CHECK(l2_inner(apply_neg_laplacian(u), u) > 0.0);
  }
}

TEST_CASE("closed_form_square_eig: values and the continuum limit") {
  // (4/h^2)(1 - cos(pi h)) = 2 pi^2 - pi^4 h^2 / 6 + O(h^4) = 19.72906... at
  // h = 0.025, sitting just below the continuum 2 pi^2 = 19.7392.
  double h = 0.025;
  double v11 = closed_form_square_eig(1, 1, h);
  CHECK(v11 == doctest::Approx((4.0 / (h * h)) * (1.0 - std::cos(kPi * h))).epsilon(1e-12));
  CHECK(std::fabs(v11 - 2.0 * kPi * kPi) < 0.011);
  CHECK(v11 < 2.0 * kPi * kPi);

  double v12 = closed_form_square_eig(1, 2, h);
  CHECK(std::fabs(v12 - 49.2618) < 5e-3);

  double fine = closed_form_square_eig(2, 3, 1e-4);
  CHECK(std::fabs(fine - 13.0 * kPi * kPi) < 1e-4);
  CHECK_THROWS_AS(closed_form_square_eig(0, 1, 0.025), std::invalid_argument);
}

TEST_CASE("solve_eigenfunctions: unit square ground state matches the closed form") {
  GridDomain us = unit_square(41);
  FlowConfig cfg;
  cfg.seed = 3;
  GridEigResult r = solve_eigenfunctions(us, 1, cfg);
  REQUIRE(r.complete);
  CHECK(std::fabs(r.pairs[0].lambda - closed_form_square_eig(1, 1, us.h)) < 1e-8);
  CHECK(r.pairs[0].norm_law_gap < 1e-10);
  // output is L2-normalized and matches the sampled sine up to sign
  CHECK(l2_norm(r.pairs[0].u) == doctest::Approx(1.0).epsilon(1e-12));
  GridField truth = sampled_sine(us, 1, 1);
  double nt = l2_norm(truth);
  double sign = l2_inner(r.pairs[0].u, truth) > 0.0 ? 1.0 : -1.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < truth.values.size(); ++k)
    worst = std::max(worst,
                     std::fabs(sign * r.pairs[0].u.values[k] - truth.values[k] / nt));
  CHECK(worst < 1e-8);
}

TEST_CASE("solve_eigenfunctions: l-shape run is ordered, orthonormal, norm-law clean") {
  GridDomain ls = l_shape(41);
  FlowConfig cfg;
  cfg.seed = 10;
  GridEigResult r = solve_eigenfunctions(ls, 9, cfg);
  REQUIRE(r.complete);
  REQUIRE(r.pairs.size() == 9);
  for (std::size_t j = 0; j < 9; ++j) {
    CHECK(r.pairs[j].residual <= cfg.tol);
    CHECK(r.pairs[j].norm_law_gap < 1e-10);
    if (j) CHECK(r.pairs[j].lambda >= r.pairs[j - 1].lambda - 1e-6);
    for (std::size_t i = 0; i < j; ++i)
      CHECK(std::fabs(l2_inner(r.pairs[j].u, r.pairs[i].u)) < 1e-8);
  }
  // the degenerate (8,9) pair of the symmetric l-shape
  CHECK(std::fabs(r.pairs[7].lambda - r.pairs[8].lambda) <
        1e-6 * std::fabs(r.pairs[7].lambda));
  // modes (1,2)/(2,1) are exact discrete eigenfunctions on this mask
  CHECK(std::fabs(r.pairs[7].lambda - closed_form_square_eig(1, 2, ls.h)) < 1e-8);
  // the third eigenfunction is the sampled sin(pi x) sin(pi y)
  CHECK(std::fabs(r.pairs[2].lambda - closed_form_square_eig(1, 1, ls.h)) < 1e-8);
}

TEST_CASE("solve_eigenfunctions: max_steps yields partial results with a diagnostic") {
  GridDomain us = unit_square(21);
  FlowConfig cfg;
  cfg.max_steps = 10;
  GridEigResult r = solve_eigenfunctions(us, 2, cfg);
  CHECK(!r.complete);
  CHECK(r.pairs.empty());
  CHECK(!r.diagnostic.empty());
}

TEST_CASE("minres solves definite and indefinite shifted systems") {
  GridDomain us = unit_square(21);
  const std::size_t cells = us.nx * us.ny;
  GridField rhs_f = random_field(us, 9);
  double shift = 30.0;  // between eigenvalues: indefinite operator
  auto op = [&](const std::vector<double>& v, std::vector<double>& out) {
    GridField tmp(us);
    tmp.values = v;
    GridField lap = apply_neg_laplacian(tmp);
    out = lap.values;
    for (std::size_t k = 0; k < cells; ++k)
      out[k] = us.mask[k] ? out[k] - shift * v[k] : 0.0;
  };
  std::vector<double> x;
  std::size_t its = minres(op, rhs_f.values, x, 1e-12, 10 * us.interior_count());
  REQUIRE(its > 0);
  std::vector<double> ax;
  op(x, ax);
  double err = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    err += (ax[k] - rhs_f.values[k]) * (ax[k] - rhs_f.values[k]);
    scale += rhs_f.values[k] * rhs_f.values[k];
  }
  CHECK(std::sqrt(err) <= 1e-10 * std::sqrt(scale));
}

TEST_CASE("newton_grid: converges quadratically near an exact eigenfield (both inner solvers)") {
  GridDomain us = unit_square(21);
  GridField u0 = sampled_sine(us, 1, 1);
  double nrm = l2_norm(u0);
  for (auto& v : u0.values) v /= nrm;
  Rng rng(31);
  for (std::size_t k = 0; k < u0.values.size(); ++k)
    if (us.mask[k]) u0.values[k] += 1e-3 * rng.uniform(-1.0, 1.0);
  for (auto inner : {InnerSolver::direct_banded, InnerSolver::minres}) {
    FlowConfig cfg;
    cfg.tol = 1e-12;
    cfg.newton_inner = inner;
    NewtonGridResult r = newton_grid(us, u0, cfg, GridUpdateRule::norm_based);
    REQUIRE(r.trace.terminal_reason == TerminalReason::converged);
    CHECK(r.trace.records.back().k <= 10);
    CHECK(r.residual < 1e-12);
    CHECK(std::fabs(r.lambda - closed_form_square_eig(1, 1, us.h)) < 1e-9);
  }
}

TEST_CASE("newton_grid: the two inner solvers agree from a shared random start") {
  GridDomain ls = l_shape(21);
  GridField u0 = random_field(ls, 404);
  FlowConfig direct_cfg, minres_cfg;
  direct_cfg.tol = minres_cfg.tol = 1e-11;
  direct_cfg.newton_inner = InnerSolver::direct_banded;
  minres_cfg.newton_inner = InnerSolver::minres;
  NewtonGridResult rd = newton_grid(ls, u0, direct_cfg, GridUpdateRule::norm_based);
  NewtonGridResult rm = newton_grid(ls, u0, minres_cfg, GridUpdateRule::norm_based);
  REQUIRE(rd.trace.terminal_reason == TerminalReason::converged);
  REQUIRE(rm.trace.terminal_reason == TerminalReason::converged);
  CHECK(std::fabs(rd.lambda - rm.lambda) < 1e-9 * (1.0 + std::fabs(rd.lambda)));
}

TEST_CASE("newton_grid: random starts land on closed-form unit-square eigenvalues") {
  GridDomain us = unit_square(41);
  FlowConfig cfg;
  cfg.tol = 1e-10;
  StreamSeed root{8181};
  for (int t = 0; t < 10; ++t) {
    GridField u0 = random_field(us, root.sub("t" + std::to_string(t)).value);
    NewtonGridResult r = newton_grid(us, u0, cfg, GridUpdateRule::norm_based);
    if (r.trace.terminal_reason != TerminalReason::converged) continue;
    double best = 1e300;
    for (int nm = 1; nm <= 12; ++nm)
      for (int mm = 1; mm <= 12; ++mm)
        best = std::min(best, std::fabs(r.lambda - closed_form_square_eig(nm, mm, us.h)));
    CHECK(best < 1e-8);
  }
}

TEST_CASE("export_field: constant image, csv round-trip, palette inversion") {
  GridDomain us = unit_square(21);
  GridField ones(us);
  for (std::size_t k = 0; k < ones.values.size(); ++k)
    if (us.mask[k]) ones.values[k] = 1.0;
  std::string pgm_path = temp_path("const.pgm");
  export_field(ones, pgm_path, FieldFormat::pgm);
  std::string pgm = io::read_text_file(pgm_path);
  auto header_end = pgm.find("255\n");
  REQUIRE(header_end != std::string::npos);
  std::string pixels = pgm.substr(header_end + 4);
  REQUIRE(pixels.size() == us.nx * us.ny);
  for (std::size_t k = 0; k < pixels.size(); ++k)
    CHECK(static_cast<unsigned char>(pixels[k]) == (us.mask[k] ? 255 : 0));
  std::remove(pgm_path.c_str());

  GridField u = random_field(us, 77);
  std::string csv_path = temp_path("field.csv");
  export_field(u, csv_path, FieldFormat::csv);
  GridField back = load_field_csv(us, csv_path);
  for (std::size_t k = 0; k < u.values.size(); ++k) CHECK(back.values[k] == u.values[k]);
  std::remove(csv_path.c_str());

  // pgm(u) + pgm(-u) == 255 on the mask for generic fields
  GridField neg = u;
  for (auto& v : neg.values) v = -v;
  std::string p1 = temp_path("u.pgm"), p2 = temp_path("nu.pgm");
  export_field(u, p1, FieldFormat::pgm);
  export_field(neg, p2, FieldFormat::pgm);
  std::string s1 = io::read_text_file(p1), s2 = io::read_text_file(p2);
  std::string px1 = s1.substr(s1.find("255\n") + 4), px2 = s2.substr(s2.find("255\n") + 4);
  for (std::size_t k = 0; k < px1.size(); ++k)
    if (us.mask[k])
      CHECK(static_cast<int>(static_cast<unsigned char>(px1[k])) +
                static_cast<int>(static_cast<unsigned char>(px2[k])) ==
            255);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("pgm header records lambda and gamma") {
  GridDomain us = unit_square(21);
  GridField u = random_field(us, 3);
  std::string path = temp_path("meta.pgm");
  export_field(u, path, FieldFormat::pgm, {12.5, 50.0, true});
  std::string s = io::read_text_file(path);
  CHECK(s.find("# lambda=12.5 gamma=50") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("l-shape mask saved then driven through run_flow matches the builtin") {
  GridDomain ls = l_shape(21);
  std::string path = temp_path("lshape21.txt");
  save_mask(ls, path, MaskFormat::ascii_grid);
  GridDomain loaded = load_mask(path, MaskFormat::ascii_grid);
  FlowConfig cfg;
  cfg.seed = 5;
  GridEigResult a = solve_eigenfunctions(ls, 1, cfg);
  GridEigResult b = solve_eigenfunctions(loaded, 1, cfg);
  REQUIRE(a.complete);
  REQUIRE(b.complete);
  CHECK(a.pairs[0].lambda == b.pairs[0].lambda);  // bitwise equality
  CHECK(a.pairs[0].u.values == b.pairs[0].u.values);
  std::remove(path.c_str());
}

TEST_CASE("bench_methods produces positive timings and plausible eigenvalues") {
  GridDomain ls = l_shape(21);
  FlowConfig cfg;
  cfg.tol = 1e-9;
  cfg.seed = 12;
  experiments::BenchResult r = experiments::bench_methods(ls, 3, 0.1, cfg);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.t_flow > 0.0);
    CHECK(row.t_newton > 0.0);
    CHECK(row.t_rqi > 0.0);
    CHECK(row.lambda_flow > 0.0);
  }
  // flow eigenvalues come out in increasing order for the deflated chain
  CHECK(r.rows[0].lambda_flow < r.rows[1].lambda_flow);
  CHECK(r.rows[1].lambda_flow < r.rows[2].lambda_flow);
}
