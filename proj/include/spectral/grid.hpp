#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spectral/trace.hpp"

namespace spectral::grid {

// Masked uniform grid on (-1,1)^2 with Dirichlet exterior: values are pinned
// to 0 outside the mask, and the 5-point Laplacian reads out-of-mask
// neighbors as 0. Grid point (ix, iy) sits at (-1 + ix h, -1 + iy h); masks
// loaded from files carry their own h.
struct GridDomain {
  std::size_t nx = 0, ny = 0;
  double h = 0.0;
  std::vector<std::uint8_t> mask;  // idx = iy*nx + ix, true = interior

  std::size_t idx(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
  bool in(std::size_t ix, std::size_t iy) const { return mask[idx(ix, iy)] != 0; }
  double x(std::size_t ix) const { return -1.0 + static_cast<double>(ix) * h; }
  double y(std::size_t iy) const { return -1.0 + static_cast<double>(iy) * h; }
  std::size_t interior_count() const;

  // Throws unless all boundary cells are false and at least one cell is true.
  void validate() const;
};

// Builtin domains on an n x n grid (n >= 5, boundary included, h = 2/(n-1)).
// l_shape:     (-1,1)^2 \ [0,1) x (-1,0]           (three unit squares)
// full_square: the whole box interior, (n-2)^2 true cells
// unit_square: the unit square (0,1)^2, whose discrete spectrum is exactly
//              (2/h^2)(2 - cos(i pi h) - cos(j pi h)); needs odd n
// annulus:     r_in < sqrt(x^2+y^2) < r_out
GridDomain l_shape(std::size_t n);
GridDomain full_square(std::size_t n);
GridDomain unit_square(std::size_t n);
GridDomain annulus(std::size_t n, double r_in, double r_out);

enum class MaskFormat { ascii_grid, csv };

// ascii-grid: first line "nx ny h", then ny lines of nx characters from
// {0,1} (line j is row y = j). csv: same layout with comma-separated 0/1.
GridDomain load_mask(const std::string& path, MaskFormat format);
void save_mask(const GridDomain& d, const std::string& path, MaskFormat format);

// References its domain (which must outlive the field); values are pinned to
// 0 off-mask.
struct GridField {
  const GridDomain* domain = nullptr;
  std::vector<double> values;  // same indexing as the mask; 0 off-mask

  explicit GridField(const GridDomain& d) : domain(&d), values(d.nx * d.ny, 0.0) {}
  double& at(std::size_t ix, std::size_t iy) { return values[domain->idx(ix, iy)]; }
  double at(std::size_t ix, std::size_t iy) const { return values[domain->idx(ix, iy)]; }
};

// Inner linear solver for the grid Newton step. The banded direct route
// (shifted operator factored once per outer step, rank-one folded in by
// Sherman-Morrison) has shift-independent cost, which is what keeps the
// per-eigenfunction Newton time flat; the matrix-free MINRES route applies
// the rank-one term functionally and never forms the operator, but its
// iteration count grows when the shift lands near a cluster.
enum class InnerSolver { direct_banded, minres };

struct FlowConfig {
  double gamma = 50.0;
  double dt = 0.0;   // 0 = default 0.17 h^2; validated against 0.25 h^2
  double tol = 1e-13;
  std::uint64_t max_steps = 2000000;
  std::uint64_t seed = 0;
  InnerSolver newton_inner = InnerSolver::direct_banded;

  double effective_dt(double h) const;
};

// (-Delta_d u): (4u - up - down - left - right)/h^2 with Dirichlet reads;
// per-cell sums are Neumaier-compensated so residuals can be driven to the
// paper's 1e-13 in physical units. Output masked.
GridField apply_neg_laplacian(const GridField& u);

// Discrete L2: ||u|| = h sqrt(sum u^2), <u,v> = h^2 sum uv.
double l2_norm(const GridField& u);
double l2_inner(const GridField& u, const GridField& v);

// F_L(u) = 1/2 <-Delta u, u> + gamma/2 ||u||^2 - gamma ||u||.
double functional_value(const GridField& u, double gamma);

// One explicit-Euler step u + dt (Delta u - gamma (1 - 1/||u||) u), masked.
GridField flow_step(const GridField& u, const FlowConfig& cfg);

// Seeded uniform(-1,1) per interior cell, L2-normalized.
GridField random_field(const GridDomain& d, std::uint64_t seed);

struct GridEigenpair {
  double lambda = 0.0;
  GridField u;               // L2-normalized for output
  double norm_law_gap = 0.0; // | ||u_raw|| - gamma/(gamma+lambda) | pre-normalization
  double residual = 0.0;     // ||Delta u - gamma(1 - 1/||u||) u|| at stop (raw field)
  std::uint64_t steps = 0;
};

struct GridEigResult {
  std::vector<GridEigenpair> pairs;
  bool complete = false;
  std::string diagnostic;
};

// First `count` eigenfunctions by the gradient flow, modified Gram-Schmidt
// re-orthogonalization against the already-found ones after every step.
// The integrator keeps a Kahan-compensated state so the update quantization
// cannot floor the residual above cfg.tol (plain double stalls near 4e-13 at
// 81x81 in physical units).
GridEigResult solve_eigenfunctions(const GridDomain& domain, std::size_t count,
                                   const FlowConfig& cfg);

struct FlowRunResult {
  GridField u_raw;          // converged field, not normalized
  double lambda = 0.0;      // gamma (1/||u_raw|| - 1)
  double residual = 0.0;    // projected flow residual at stop
  std::uint64_t steps = 0;
  bool converged = false;
};

// Runs the deflated flow from an explicit start until the projected residual
// drops to stop_residual (or cfg.max_steps). Building block for
// solve_eigenfunctions and for the warm-start/timing harness.
FlowRunResult run_flow(const GridDomain& domain, const GridField& u0, const FlowConfig& cfg,
                       const std::vector<GridField>& deflate_against, double stop_residual);

enum class GridUpdateRule { norm_based, rayleigh };

struct NewtonGridResult {
  double lambda = 0.0;
  GridField u;
  IterationTrace trace;
  double residual = 0.0;  // ||(-Delta)u - lambda u|| at the final iterate
};

// Newton iteration on the grid: each outer step solves
//   [(-Delta) - lambda_k I + (gamma+lambda_k) y<y,.>] x = gamma y
// with the inner solver selected by cfg.newton_inner. MINRES runs on the
// modified operator with the rank-one term applied functionally (the
// rank-one keeps it well conditioned even when the shift sits exactly on
// the spectrum); its iteration cap is 10x the interior cell count.
NewtonGridResult newton_grid(const GridDomain& domain, const GridField& u0,
                             const FlowConfig& cfg, GridUpdateRule rule);

// Exact discrete eigenvalues of the unit square: (2/h^2)(2 - cos(n pi h)
// - cos(m pi h)). Verification helper.
double closed_form_square_eig(int n_mode, int m_mode, double h);

enum class FieldFormat { csv, pgm };

struct FieldMeta {
  double lambda = 0.0;
  double gamma = 0.0;
  bool present = false;
};

// csv: ny lines of nx full-precision values. pgm: binary P5, 8-bit, values
// affinely mapped [min,max] -> [0,255] over the mask, off-mask cells 0; a
// header comment records lambda and gamma when given.
void export_field(const GridField& u, const std::string& path, FieldFormat format,
                  const FieldMeta& meta = {});
GridField load_field_csv(const GridDomain& d, const std::string& path);

// Symmetric matrix-free MINRES for op(v) -> out. Returns the iteration count
// or 0 on breakdown before any progress; on exit x holds the best iterate.
std::size_t minres(const std::function<void(const std::vector<double>&, std::vector<double>&)>& op,
                   const std::vector<double>& rhs, std::vector<double>& x, double rel_tol,
                   std::size_t max_iter);

}  // namespace spectral::grid
