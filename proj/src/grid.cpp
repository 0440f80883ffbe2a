#include "spectral/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spectral/io.hpp"
#include "spectral/numerics.hpp"
#include "spectral/rng.hpp"

namespace spectral::grid {

std::size_t GridDomain::interior_count() const {
  std::size_t c = 0;
  for (auto m : mask) c += m != 0;
  return c;
}

void GridDomain::validate() const {
  if (nx < 3 || ny < 3 || mask.size() != nx * ny || !(h > 0.0))
    throw std::invalid_argument("GridDomain: malformed domain");
  for (std::size_t ix = 0; ix < nx; ++ix)
    if (in(ix, 0) || in(ix, ny - 1))
      throw std::invalid_argument("GridDomain: boundary row cell is inside the mask");
  for (std::size_t iy = 0; iy < ny; ++iy)
    if (in(0, iy) || in(nx - 1, iy))
      throw std::invalid_argument("GridDomain: boundary column cell is inside the mask");
  if (interior_count() == 0) throw std::invalid_argument("GridDomain: all-false mask");
}

namespace {

GridDomain make_grid(std::size_t n) {
  if (n < 5) throw std::invalid_argument("grid size must be >= 5");
  GridDomain d;
  d.nx = d.ny = n;
  d.h = 2.0 / static_cast<double>(n - 1);
  d.mask.assign(n * n, 0);
  return d;
}

}  // namespace

GridDomain l_shape(std::size_t n) {
  GridDomain d = make_grid(n);
  for (std::size_t iy = 1; iy + 1 < n; ++iy)
    for (std::size_t ix = 1; ix + 1 < n; ++ix) {
      double x = d.x(ix), y = d.y(iy);
      bool removed = (x >= 0.0) && (y <= 0.0);  // [0,1) x (-1,0]
      d.mask[d.idx(ix, iy)] = removed ? 0 : 1;
    }
  d.validate();
  return d;
}

GridDomain full_square(std::size_t n) {
  GridDomain d = make_grid(n);
  for (std::size_t iy = 1; iy + 1 < n; ++iy)
    for (std::size_t ix = 1; ix + 1 < n; ++ix) d.mask[d.idx(ix, iy)] = 1;
  d.validate();
  return d;
}

GridDomain unit_square(std::size_t n) {
  if (n % 2 == 0)
    throw std::invalid_argument("unit_square: grid size must be odd so x = 0 lies on the grid");
  GridDomain d = make_grid(n);
  for (std::size_t iy = 1; iy + 1 < n; ++iy)
    for (std::size_t ix = 1; ix + 1 < n; ++ix) {
      double x = d.x(ix), y = d.y(iy);
      d.mask[d.idx(ix, iy)] = (x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) ? 1 : 0;
    }
  d.validate();
  return d;
}

GridDomain annulus(std::size_t n, double r_in, double r_out) {
  if (!(0.0 <= r_in && r_in < r_out))
    throw std::invalid_argument("annulus: need 0 <= r_in < r_out");
  GridDomain d = make_grid(n);
  for (std::size_t iy = 1; iy + 1 < n; ++iy)
    for (std::size_t ix = 1; ix + 1 < n; ++ix) {
      double x = d.x(ix), y = d.y(iy);
      double r = std::sqrt(x * x + y * y);
      d.mask[d.idx(ix, iy)] = (r > r_in && r < r_out) ? 1 : 0;
    }
  d.validate();
  return d;
}

GridDomain load_mask(const std::string& path, MaskFormat format) {
  std::string text = io::read_text_file(path);
  std::istringstream ss(text);
  std::string header;
  if (!std::getline(ss, header)) throw io::FileError(path + ": empty mask file");
  std::istringstream hs(header);
  GridDomain d;
  if (!(hs >> d.nx >> d.ny >> d.h))
    throw io::FileError(path + ": header must be 'nx ny h'");
  d.mask.assign(d.nx * d.ny, 0);
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    std::string line;
    if (!std::getline(ss, line)) throw io::FileError(path + ": truncated mask (row " +
                                                     std::to_string(iy) + ")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<char> cells;
    if (format == MaskFormat::ascii_grid) {
      cells.assign(line.begin(), line.end());
    } else {
      std::istringstream ls(line);
      std::string field;
      while (std::getline(ls, field, ',')) {
        if (field.empty()) throw io::FileError(path + ": empty cell in row " + std::to_string(iy));
        cells.push_back(field[0]);
      }
    }
    if (cells.size() != d.nx)
      throw io::FileError(path + ": row " + std::to_string(iy) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(d.nx));
    for (std::size_t ix = 0; ix < d.nx; ++ix) {
      char c = cells[ix];
      if (c != '0' && c != '1')
        throw io::FileError(path + ": mask cells must be 0 or 1 (row " + std::to_string(iy) +
                            ")");
      d.mask[d.idx(ix, iy)] = c == '1';
    }
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw io::FileError(path + ": " + e.what());
  }
  return d;
}

void save_mask(const GridDomain& d, const std::string& path, MaskFormat format) {
  std::string out = std::to_string(d.nx) + " " + std::to_string(d.ny) + " " +
                    io::format_double(d.h) + "\n";
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    for (std::size_t ix = 0; ix < d.nx; ++ix) {
      if (format == MaskFormat::csv && ix) out += ',';
      out += d.in(ix, iy) ? '1' : '0';
    }
    out += '\n';
  }
  io::write_text_file(path, out);
}

double FlowConfig::effective_dt(double h) const {
  double v = dt == 0.0 ? 0.17 * h * h : dt;
  if (!(v > 0.0) || v > 0.25 * h * h * (1.0 + 1e-12))
    throw std::invalid_argument("FlowConfig: dt must lie in (0, 0.25 h^2] for stability");
  return v;
}

namespace {

void check_domain(const GridField& u, const GridField& v) {
  if (u.domain != v.domain) throw std::invalid_argument("grid fields on different domains");
}

// Neumaier-compensated 5-term stencil sum. The exact cancellation keeps the
// per-cell error at eps*|result| instead of eps*|4u|, which is what allows
// physical residuals down to 1e-13.
inline double stencil_sum(double center, double up, double dn, double lf, double rt) {
  double terms[5] = {4.0 * center, -up, -dn, -lf, -rt};
  double s = 0.0, c = 0.0;
  for (double t : terms) {
    double tmp = s + t;
    if (std::fabs(s) >= std::fabs(t))
      c += (s - tmp) + t;
    else
      c += (t - tmp) + s;
    s = tmp;
  }
  return s + c;
}

void neg_laplacian_into(const GridDomain& d, const std::vector<double>& u,
                        std::vector<double>& out) {
  const std::size_t nx = d.nx, ny = d.ny;
  const double ih2 = 1.0 / (d.h * d.h);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t iy = 1; iy + 1 < ny; ++iy) {
    const std::size_t row = iy * nx;
    for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
      const std::size_t k = row + ix;
      if (!d.mask[k]) continue;
      double up = d.mask[k - nx] ? u[k - nx] : 0.0;
      double dn = d.mask[k + nx] ? u[k + nx] : 0.0;
      double lf = d.mask[k - 1] ? u[k - 1] : 0.0;
      double rt = d.mask[k + 1] ? u[k + 1] : 0.0;
      out[k] = stencil_sum(u[k], up, dn, lf, rt) * ih2;
    }
  }
}

double l2_norm_raw(const GridDomain& d, const std::vector<double>& v) {
  CompensatedSum s;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (d.mask[k]) s.add(v[k] * v[k]);
  return d.h * std::sqrt(s.value());
}

}  // namespace

GridField apply_neg_laplacian(const GridField& u) {
  GridField out(*u.domain);
  neg_laplacian_into(*u.domain, u.values, out.values);
  return out;
}

double l2_norm(const GridField& u) { return l2_norm_raw(*u.domain, u.values); }

double l2_inner(const GridField& u, const GridField& v) {
  check_domain(u, v);
  CompensatedSum s;
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (u.domain->mask[k]) s.add(u.values[k] * v.values[k]);
  return u.domain->h * u.domain->h * s.value();
}

double functional_value(const GridField& u, double gamma) {
  GridField lap = apply_neg_laplacian(u);
  double quad = l2_inner(lap, u);
  double nrm = l2_norm(u);
  return 0.5 * quad + 0.5 * gamma * nrm * nrm - gamma * nrm;
}

GridField flow_step(const GridField& u, const FlowConfig& cfg) {
  double nrm = l2_norm(u);
  if (!(nrm > 0.0)) throw std::invalid_argument("flow_step: zero field");
  double dtv = cfg.effective_dt(u.domain->h);
  GridField lap = apply_neg_laplacian(u);
  double c = cfg.gamma * (1.0 - 1.0 / nrm);
  GridField out(*u.domain);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    if (!u.domain->mask[k]) continue;
    out.values[k] = u.values[k] + dtv * (-lap.values[k] - c * u.values[k]);
  }
  return out;
}

GridField random_field(const GridDomain& d, std::uint64_t seed) {
  Rng rng(StreamSeed{seed});
  GridField u(d);
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (d.mask[k]) u.values[k] = rng.uniform(-1.0, 1.0);
  double nrm = l2_norm(u);
  if (nrm > 0.0)
    for (auto& v : u.values) v /= nrm;
  return u;
}

double closed_form_square_eig(int n_mode, int m_mode, double h) {
  if (n_mode < 1 || m_mode < 1)
    throw std::invalid_argument("closed_form_square_eig: modes must be >= 1");
  double pi = 3.14159265358979323846264338327950288;
  return (2.0 / (h * h)) * (2.0 - std::cos(n_mode * pi * h) - std::cos(m_mode * pi * h));
}

// ---------------------------------------------------------------------------
// Gradient flow with deflation
// ---------------------------------------------------------------------------

namespace {

// Flow state in compensated (hi + lo) form; lo carries the sub-ulp part of
// the Euler updates that plain doubles would quantize away.
struct FlowState {
  std::vector<double> hi, lo;
};

struct FlowWork {
  std::vector<double> lap_hi, lap_lo, r;
};

// Residual r = Delta u - gamma (1 - 1/||u||) u evaluated on hi and lo
// separately (the operator is linear); returns ||u||.
double flow_residual(const GridDomain& d, double gamma, const FlowState& st, FlowWork& w,
                     bool with_lo) {
  neg_laplacian_into(d, st.hi, w.lap_hi);
  if (with_lo) neg_laplacian_into(d, st.lo, w.lap_lo);
  CompensatedSum ns;
  for (std::size_t k = 0; k < st.hi.size(); ++k) {
    if (!d.mask[k]) continue;
    double v = with_lo ? st.hi[k] + st.lo[k] : st.hi[k];
    ns.add(v * v);
  }
  double nrm = d.h * std::sqrt(ns.value());
  double c = gamma * (1.0 - 1.0 / nrm);
  for (std::size_t k = 0; k < st.hi.size(); ++k) {
    if (!d.mask[k]) {
      w.r[k] = 0.0;
      continue;
    }
    double rv = -w.lap_hi[k] - c * st.hi[k];
    if (with_lo) rv += -w.lap_lo[k] - c * st.lo[k];
    w.r[k] = rv;
  }
  return nrm;
}

// v <- v - sum_i <v, phi_i> phi_i in the discrete L2 inner product.
void project_vector(const GridDomain& d, const std::vector<GridField>& phis,
                    std::vector<double>& v) {
  const double h2 = d.h * d.h;
  for (const auto& phi : phis) {
    CompensatedSum s;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (d.mask[k]) s.add(v[k] * phi.values[k]);
    double c = h2 * s.value();
    for (std::size_t k = 0; k < v.size(); ++k)
      if (d.mask[k]) v[k] -= c * phi.values[k];
  }
}

void project_state(const GridDomain& d, const std::vector<GridField>& phis, FlowState& st) {
  const double h2 = d.h * d.h;
  for (const auto& phi : phis) {
    CompensatedSum s;
    for (std::size_t k = 0; k < st.hi.size(); ++k)
      if (d.mask[k]) s.add(st.hi[k] * phi.values[k] + st.lo[k] * phi.values[k]);
    double c = h2 * s.value();
    for (std::size_t k = 0; k < st.hi.size(); ++k) {
      if (!d.mask[k]) continue;
      TwoSum t = two_sum(st.hi[k], st.lo[k] - c * phi.values[k]);
      st.hi[k] = t.s;
      st.lo[k] = t.e;
    }
  }
}

}  // namespace

FlowRunResult run_flow(const GridDomain& domain, const GridField& u0, const FlowConfig& cfg,
                       const std::vector<GridField>& deflate_against, double stop_residual) {
  domain.validate();
  if (u0.domain != &domain) throw std::invalid_argument("run_flow: field/domain mismatch");
  if (!(cfg.gamma > 0.0)) throw std::invalid_argument("run_flow: gamma must be positive");
  const double dtv = cfg.effective_dt(domain.h);
  const std::size_t cells = domain.nx * domain.ny;
  // Once the plain-double iteration gets here, switch to the compensated
  // state so the update quantization cannot stall above the target. Coarse
  // targets (warm starts) never need the second stencil pass.
  const double switch_res =
      stop_residual < 1e-8 ? std::max(1e-10, stop_residual * 100.0) : 0.0;

  FlowWork work{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0),
                std::vector<double>(cells, 0.0)};
  FlowState st{u0.values, std::vector<double>(cells, 0.0)};
  project_state(domain, deflate_against, st);
  if (!(l2_norm_raw(domain, st.hi) > 0.0))
    throw std::invalid_argument("run_flow: start collapsed under deflation");

  FlowRunResult out{GridField(domain), 0.0, 0.0, 0, false};
  bool with_lo = false;
  double nrm = 0.0;
  for (; out.steps < cfg.max_steps; ++out.steps) {
    nrm = flow_residual(domain, cfg.gamma, st, work, with_lo);
    if (!std::isfinite(nrm) || nrm == 0.0) break;
    project_vector(domain, deflate_against, work.r);
    out.residual = l2_norm_raw(domain, work.r);
    if (out.residual <= stop_residual) {
      out.converged = true;
      break;
    }
    if (!with_lo && out.residual <= switch_res) with_lo = true;
    for (std::size_t k = 0; k < cells; ++k) {
      if (!domain.mask[k]) continue;
      TwoSum t = two_sum(st.hi[k], dtv * work.r[k] + st.lo[k]);
      st.hi[k] = t.s;
      st.lo[k] = t.e;
    }
    project_state(domain, deflate_against, st);
  }
  for (std::size_t k = 0; k < cells; ++k)
    if (domain.mask[k]) out.u_raw.values[k] = st.hi[k] + st.lo[k];
  double raw_norm = l2_norm(out.u_raw);
  if (raw_norm > 0.0) out.lambda = cfg.gamma * (1.0 / raw_norm - 1.0);
  return out;
}

GridEigResult solve_eigenfunctions(const GridDomain& domain, std::size_t count,
                                   const FlowConfig& cfg) {
  if (count < 1) throw std::invalid_argument("solve_eigenfunctions: count must be >= 1");
  GridEigResult out;
  std::vector<GridField> phis;
  StreamSeed root{cfg.seed};

  for (std::size_t j = 0; j < count; ++j) {
    GridField u0 = random_field(domain, root.sub("eig/" + std::to_string(j) + "/u0").value);
    FlowRunResult r = run_flow(domain, u0, cfg, phis, cfg.tol);
    if (!r.converged) {
      out.diagnostic = "eigenfunction " + std::to_string(j + 1) +
                       ": max_steps reached at residual " + io::format_double(r.residual);
      return out;
    }
    GridEigenpair pair{r.lambda, std::move(r.u_raw), 0.0, r.residual, r.steps};
    double raw_norm = l2_norm(pair.u);
    pair.norm_law_gap = std::fabs(raw_norm - cfg.gamma / (cfg.gamma + pair.lambda));
    for (auto& v : pair.u.values) v /= raw_norm;
    phis.push_back(pair.u);
    out.pairs.push_back(std::move(pair));
  }
  out.complete = true;
  return out;
}

// ---------------------------------------------------------------------------
// Newton on the grid
// ---------------------------------------------------------------------------

namespace {

// Banded LU with partial pivoting (LAPACK-style band storage) for the
// shifted operator (-Delta - lambda I) over full-grid indexing, with
// identity rows at masked cells. Bandwidth kl = ku = nx, extended by kl for
// pivot fill-in. Near-singular factors are solved anyway: the huge solution
// component along the near-null direction is exactly what the
// Sherman-Morrison normalization needs (inverse-iteration style).
class BandedShiftedOperator {
 public:
  BandedShiftedOperator(const GridDomain& d, double lambda)
      : n_(d.nx * d.ny), kl_(d.nx), ku_(d.nx), ldab_(2 * kl_ + ku_ + 1),
        ab_(ldab_ * n_, 0.0), perm_(n_) {
    const double ih2 = 1.0 / (d.h * d.h);
    for (std::size_t k = 0; k < n_; ++k) {
      if (!d.mask[k]) {
        at(k, k) = 1.0;
        continue;
      }
      at(k, k) = 4.0 * ih2 - lambda;
      if (d.mask[k - 1]) at(k, k - 1) = -ih2;
      if (d.mask[k + 1]) at(k, k + 1) = -ih2;
      if (d.mask[k - d.nx]) at(k, k - d.nx) = -ih2;
      if (d.mask[k + d.nx]) at(k, k + d.nx) = -ih2;
    }
    factor();
  }

  void solve(std::vector<double>& b) const {
    for (std::size_t k = 0; k < n_; ++k) {
      if (perm_[k] != k) std::swap(b[k], b[perm_[k]]);
      std::size_t iend = std::min(k + kl_, n_ - 1);
      double bk = b[k];
      for (std::size_t i = k + 1; i <= iend; ++i) b[i] -= at(i, k) * bk;
    }
    for (std::size_t kk = n_; kk-- > 0;) {
      b[kk] /= at(kk, kk);
      double bk = b[kk];
      std::size_t ibeg = kk > kl_ + ku_ ? kk - kl_ - ku_ : 0;
      for (std::size_t i = ibeg; i < kk; ++i) b[i] -= at(i, kk) * bk;
    }
  }

 private:
  double& at(std::size_t i, std::size_t j) { return ab_[(kl_ + ku_ + i - j) + j * ldab_]; }
  double at(std::size_t i, std::size_t j) const {
    return ab_[(kl_ + ku_ + i - j) + j * ldab_];
  }

  void factor() {
    double maxpiv = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t iend = std::min(k + kl_, n_ - 1);
      std::size_t prow = k;
      double best = std::fabs(at(k, k));
      for (std::size_t i = k + 1; i <= iend; ++i)
        if (std::fabs(at(i, k)) > best) {
          best = std::fabs(at(i, k));
          prow = i;
        }
      perm_[k] = prow;
      std::size_t jend = std::min(k + kl_ + ku_, n_ - 1);
      if (prow != k)
        for (std::size_t j = k; j <= jend; ++j) std::swap(at(k, j), at(prow, j));
      double piv = at(k, k);
      maxpiv = std::max(maxpiv, std::fabs(piv));
      if (piv == 0.0) {
        // exactly singular shift; a tiny pivot keeps the solve defined and
        // the rank-one normalization absorbs the blow-up
        piv = (maxpiv > 0.0 ? maxpiv : 1.0) * 1e-300;
        at(k, k) = piv;
      }
      for (std::size_t i = k + 1; i <= iend; ++i) {
        double m = at(i, k) / piv;
        at(i, k) = m;
        if (m == 0.0) continue;
        for (std::size_t j = k + 1; j <= jend; ++j) at(i, j) -= m * at(k, j);
      }
    }
  }

  std::size_t n_, kl_, ku_, ldab_;
  std::vector<double> ab_;
  std::vector<std::size_t> perm_;
};

}  // namespace

std::size_t minres(const std::function<void(const std::vector<double>&, std::vector<double>&)>& op,
                   const std::vector<double>& rhs, std::vector<double>& x, double rel_tol,
                   std::size_t max_iter) {
  const std::size_t n = rhs.size();
  x.assign(n, 0.0);
  auto nrm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
  };
  double beta1 = nrm(rhs);
  if (beta1 == 0.0) return 0;

  std::vector<double> v_old(n, 0.0), v(n), av(n), d(n, 0.0), d_old(n, 0.0), d_new(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / beta1;
  double beta = beta1, eta_bar = beta1;
  double c_old = 1.0, s_old = 0.0, c = 1.0, s = 0.0;

  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    op(v, av);
    double alpha = 0.0;
    for (std::size_t i = 0; i < n; ++i) alpha += v[i] * av[i];
    for (std::size_t i = 0; i < n; ++i) av[i] -= alpha * v[i] + beta * v_old[i];
    double beta_next = nrm(av);

    double delta = c * alpha - c_old * s * beta;
    double rho3 = s_old * beta;
    double rho2 = s * alpha + c_old * c * beta;
    double rho1 = std::hypot(delta, beta_next);
    if (rho1 == 0.0) break;  // breakdown: operator annihilated the Krylov space
    double c_new = delta / rho1;
    double s_new = beta_next / rho1;

    for (std::size_t i = 0; i < n; ++i)
      d_new[i] = (v[i] - rho3 * d_old[i] - rho2 * d[i]) / rho1;
    double step = c_new * eta_bar;
    for (std::size_t i = 0; i < n; ++i) x[i] += step * d_new[i];
    eta_bar = -s_new * eta_bar;

    if (std::fabs(eta_bar) <= rel_tol * beta1) {
      ++it;
      break;
    }
    if (beta_next == 0.0) break;  // exact invariant subspace reached

    std::swap(v_old, v);
    std::swap(v, av);
    for (std::size_t i = 0; i < n; ++i) v[i] /= beta_next;
    std::swap(d_old, d);
    std::swap(d, d_new);
    c_old = c;
    c = c_new;
    s_old = s;
    s = s_new;
    beta = beta_next;
  }
  return it;
}

NewtonGridResult newton_grid(const GridDomain& domain, const GridField& u0,
                             const FlowConfig& cfg, GridUpdateRule rule) {
  domain.validate();
  if (u0.domain != &domain) throw std::invalid_argument("newton_grid: field/domain mismatch");
  double n0 = l2_norm(u0);
  if (!(n0 > 0.0)) throw std::invalid_argument("newton_grid: u0 must be nonzero");

  const std::size_t cells = domain.nx * domain.ny;
  const std::size_t inner_cap = 10 * domain.interior_count();
  const double gamma = cfg.gamma;
  const double h2 = domain.h * domain.h;

  NewtonGridResult out{0.0, GridField(domain), {}, 0.0};
  std::vector<double> u = u0.values;
  std::vector<double> lap(cells, 0.0), y(cells, 0.0), rhs(cells, 0.0), x(cells, 0.0);

  auto rule_lambda = [&](const std::vector<double>& w, double nrm) {
    if (rule == GridUpdateRule::norm_based) return gamma * (1.0 / nrm - 1.0);
    neg_laplacian_into(domain, w, lap);
    CompensatedSum q;
    for (std::size_t k = 0; k < cells; ++k)
      if (domain.mask[k]) q.add(lap[k] * w[k]);
    return h2 * q.value() / (nrm * nrm);
  };
  double f_value = 0.0;  // F_L at the current iterate, refreshed by true_residual
  auto true_residual = [&](const std::vector<double>& w, double lambda, double nw) {
    neg_laplacian_into(domain, w, lap);
    CompensatedSum s, quad;
    for (std::size_t k = 0; k < cells; ++k)
      if (domain.mask[k]) {
        double r = lap[k] - lambda * w[k];
        s.add(r * r);
        quad.add(lap[k] * w[k]);
      }
    f_value = 0.5 * h2 * quad.value() + 0.5 * gamma * nw * nw - gamma * nw;
    return domain.h * std::sqrt(s.value());
  };

  double nrm = n0;
  double lambda = rule_lambda(u, nrm);
  double res = true_residual(u, lambda, nrm);
  out.trace.push({0, f_value, res, nrm, lambda});
  TerminalReason reason = TerminalReason::max_iter;

  double best_res = res;
  std::uint64_t since_improvement = 0;
  const std::uint64_t max_outer = 200;
  for (std::uint64_t k = 0; k < max_outer; ++k) {
    if (!std::isfinite(nrm) || nrm == 0.0 || nrm > 1e15) {
      reason = TerminalReason::diverged;
      break;
    }
    for (std::size_t i = 0; i < cells; ++i) y[i] = domain.mask[i] ? u[i] / nrm : 0.0;
    double shift = lambda;
    double w_coef = gamma + lambda;
    if (cfg.newton_inner == InnerSolver::direct_banded) {
      // Factor (-Delta - lambda I) once and fold the rank-one term in by
      // Sherman-Morrison: x = gamma z / (1 + (gamma+lambda) h^2 y.z).
      BandedShiftedOperator lu(domain, shift);
      x = y;
      lu.solve(x);
      double ydotz = 0.0;
      for (std::size_t i = 0; i < cells; ++i) ydotz += y[i] * x[i];
      double denom = 1.0 + w_coef * h2 * ydotz;
      if (denom == 0.0 || !std::isfinite(denom))
        throw std::runtime_error("newton_grid: singular Newton step system");
      double scale_x = gamma / denom;
      for (std::size_t i = 0; i < cells; ++i)
        x[i] = domain.mask[i] ? scale_x * x[i] : 0.0;
    } else {
      for (std::size_t i = 0; i < cells; ++i) rhs[i] = gamma * y[i];
      auto op = [&](const std::vector<double>& vin, std::vector<double>& vout) {
        neg_laplacian_into(domain, vin, vout);
        CompensatedSum yv;
        for (std::size_t i = 0; i < cells; ++i)
          if (domain.mask[i]) yv.add(y[i] * vin[i]);
        double c = w_coef * h2 * yv.value();
        for (std::size_t i = 0; i < cells; ++i)
          if (domain.mask[i]) vout[i] += -shift * vin[i] + c * y[i];
          else vout[i] = 0.0;
      };
      // The outer residual inherits roughly gamma times the inner *relative*
      // residual (rhs = gamma y), so the forcing term carries a 1/gamma.
      double inner_tol = std::clamp(0.05 * res / gamma, 1e-14, 1e-5);
      std::size_t its = minres(op, rhs, x, inner_tol, inner_cap);
      if (its >= inner_cap)
        throw std::runtime_error("newton_grid: inner MINRES failed to converge (cap " +
                                 std::to_string(inner_cap) + ")");
    }
    u.swap(x);
    CompensatedSum ns;
    for (std::size_t i = 0; i < cells; ++i)
      if (domain.mask[i]) ns.add(u[i] * u[i]);
    nrm = domain.h * std::sqrt(ns.value());
    if (!std::isfinite(nrm) || nrm == 0.0) {
      reason = TerminalReason::diverged;
      break;
    }
    lambda = rule_lambda(u, nrm);
    res = true_residual(u, lambda, nrm);
    out.trace.push({k + 1, f_value, res, nrm, lambda});
    if (res <= cfg.tol) {
      reason = TerminalReason::converged;
      break;
    }
    if (res < 0.99 * best_res) {
      best_res = res;
      since_improvement = 0;
    } else if (++since_improvement >= 8) {
      throw std::runtime_error("newton_grid: stagnation at residual " +
                               io::format_double(best_res) + " above tol " +
                               io::format_double(cfg.tol));
    }
  }

  out.trace.terminal_reason = reason;
  out.lambda = lambda;
  out.residual = res;
  out.u.values = std::move(u);
  return out;
}

// ---------------------------------------------------------------------------
// Field export
// ---------------------------------------------------------------------------

void export_field(const GridField& u, const std::string& path, FieldFormat format,
                  const FieldMeta& meta) {
  const GridDomain& d = *u.domain;
  if (format == FieldFormat::csv) {
    std::string out;
    for (std::size_t iy = 0; iy < d.ny; ++iy) {
      for (std::size_t ix = 0; ix < d.nx; ++ix) {
        if (ix) out += ',';
        out += io::format_double(u.at(ix, iy));
      }
      out += '\n';
    }
    io::write_text_file(path, out);
    return;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (d.mask[k]) {
      lo = std::min(lo, u.values[k]);
      hi = std::max(hi, u.values[k]);
    }
  std::string out = "P5\n";
  if (meta.present)
    out += "# lambda=" + io::format_double(meta.lambda) + " gamma=" +
           io::format_double(meta.gamma) + "\n";
  out += std::to_string(d.nx) + " " + std::to_string(d.ny) + "\n255\n";
  double span = hi - lo;
  for (std::size_t iy = 0; iy < d.ny; ++iy)
    for (std::size_t ix = 0; ix < d.nx; ++ix) {
      unsigned char px = 0;
      if (d.in(ix, iy)) {
        if (span == 0.0) {
          px = 255;
        } else {
          double t = (u.at(ix, iy) - lo) / span;
          px = static_cast<unsigned char>(std::floor(t * 255.0 + 0.5));
        }
      }
      out += static_cast<char>(px);
    }
  io::write_text_file(path, out);
}

GridField load_field_csv(const GridDomain& d, const std::string& path) {
  std::string text = io::read_text_file(path);
  std::istringstream ss(text);
  GridField u(d);
  std::string line;
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    if (!std::getline(ss, line)) throw io::FileError(path + ": truncated field");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string field;
    std::size_t ix = 0;
    while (std::getline(ls, field, ',')) {
      if (ix >= d.nx) throw io::FileError(path + ": too many columns in row " + std::to_string(iy));
      u.at(ix, iy) = io::parse_double(field, path);
      ++ix;
    }
    if (ix != d.nx) throw io::FileError(path + ": row " + std::to_string(iy) + " too short");
  }
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (!d.mask[k]) u.values[k] = 0.0;
  return u;
}

}  // namespace spectral::grid
