#include "wavekin/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wavekin/fft.hpp"

namespace wavekin {

void QuadratureConfig::validate() const {
  if (M < 4) throw ConfigError("QuadratureConfig: M too small");
  if (!(T_max > 0.0) || !(dt > 0.0) || !(s_max > 0.0)) throw ConfigError("QuadratureConfig: bad horizons");
  auto check = [](const std::vector<double>& lad, const char* name) {
    if (lad.size() < 3) throw ConfigError(std::string(name) + ": ladder needs length >= 3");
    for (std::size_t i = 1; i < lad.size(); ++i)
      if (!(lad[i] < lad[i - 1]) || !(lad[i] > 0.0))
        throw ConfigError(std::string(name) + ": ladder must be strictly decreasing and positive");
  };
  check(eps_ladder, "eps_ladder");
  check(beta_ladder, "beta_ladder");
}

ConvolutionGrid::ConvolutionGrid(const DispersionRelation& disp, const GibbsParams& params, int M)
    : lat_(disp.dim(), M), d_(disp.dim()), M_(M) {
  params.validate(disp);
  if (disp.omega_max() - disp.omega_min() < 1e-12)
    throw ConfigError("kinetics: constant dispersion relation is not admissible");
  omega_ = disp.omega_grid(M);
  W_.resize(omega_.size());
  for (std::size_t i = 0; i < omega_.size(); ++i) W_[i] = params.W(omega_[i]);
  // evenness (required by the conjugation shortcuts downstream)
  for (std::size_t i = 0; i < omega_.size(); ++i) {
    auto x = lat_.site(i);
    for (auto& c : x) c = -c;
    if (std::abs(omega_[i] - omega_[lat_.index(x)]) > 1e-10)
      throw ConfigError("kinetics: omega must be even on the grid");
  }
}

std::vector<cplx> ConvolutionGrid::to_x(std::vector<cplx> f) const {
  dft_pow(f, d_, M_, +1);
  double inv = 1.0 / static_cast<double>(f.size());
  for (auto& v : f) v *= inv;
  return f;
}

std::vector<cplx> ConvolutionGrid::to_k(std::vector<cplx> g, int sign) const {
  dft_pow(g, d_, M_, sign);
  return g;
}

std::vector<cplx> ConvolutionGrid::reverse(const std::vector<cplx>& g) const {
  std::vector<cplx> out(g.size());
  std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto x = lat_.site(i);
    for (auto& c : x) c = -c;
    out[lat_.index(x)] = g[i];
  }
  return out;
}

namespace {

// Composite Simpson weight for node i of n+1 nodes (n even), step dt.
double simpson_w(std::size_t i, std::size_t n, double dt) {
  if (i == 0 || i == n) return dt / 3.0;
  return (i % 2 == 1 ? 4.0 : 2.0) * dt / 3.0;
}

std::size_t even_steps(double T, double dt) {
  auto n = static_cast<std::size_t>(std::llround(T / dt));
  if (n % 2 == 1) ++n;
  return n;
}

// Linear least-squares extrapolation to ladder -> 0 using the `use` smallest rungs.
// Returns {value at 0, |value at 0 - value at smallest rung|}.
std::pair<double, double> lin_extrap(const std::vector<double>& ladder,
                                     const std::vector<double>& vals, std::size_t use) {
  std::size_t n = ladder.size();
  use = std::min(use, n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = n - use; j < n; ++j) {
    sx += ladder[j];
    sy += vals[j];
    sxx += ladder[j] * ladder[j];
    sxy += ladder[j] * vals[j];
  }
  double m = static_cast<double>(use);
  double denom = m * sxx - sx * sx;
  double slope = denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
  double icept = (sy - slope * sx) / m;
  return {icept, std::abs(icept - vals[n - 1])};
}

// Shared driver: accumulate sum over time samples of weight_r(t) * J_t(k) for
// each ladder rung r, where J_t is produced by `make_J` into `scratch`.
// Parallel over disjoint time chunks; deterministic per-chunk accumulation
// merged in fixed rung order.
template <typename MakeJ, typename Damp>
std::vector<std::vector<cplx>> accumulate_time_samples(std::size_t n_vals, std::size_t n_steps,
                                                       double dt, std::size_t n_rungs,
                                                       const MakeJ& make_J, const Damp& damp) {
  int nthreads = worker_threads();
  std::vector<std::vector<std::vector<cplx>>> partial(
      static_cast<std::size_t>(nthreads),
      std::vector<std::vector<cplx>>(n_rungs, std::vector<cplx>(n_vals, cplx{0, 0})));
  std::vector<std::size_t> chunk_of(static_cast<std::size_t>(nthreads) + 1, 0);
  // static contiguous chunks
  std::size_t total = n_steps + 1;
  std::size_t per = (total + static_cast<std::size_t>(nthreads) - 1) / static_cast<std::size_t>(nthreads);
  std::vector<std::thread> pool;
  for (int th = 0; th < nthreads; ++th) {
    std::size_t lo = static_cast<std::size_t>(th) * per;
    std::size_t hi = std::min(total, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, th, lo, hi] {
      std::vector<cplx> J(n_vals);
      for (std::size_t i = lo; i < hi; ++i) {
        double t = static_cast<double>(i) * dt;
        double w = simpson_w(i, n_steps, dt);
        make_J(t, J);
        auto& acc = partial[static_cast<std::size_t>(th)];
        for (std::size_t r = 0; r < n_rungs; ++r) {
          double g = damp(r, t) * w;
          if (g == 0.0) continue;
          auto& a = acc[r];
          for (std::size_t v = 0; v < n_vals; ++v) a[v] += g * J[v];
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  std::vector<std::vector<cplx>> out(n_rungs, std::vector<cplx>(n_vals, cplx{0, 0}));
  for (const auto& p : partial)
    for (std::size_t r = 0; r < n_rungs; ++r)
      for (std::size_t v = 0; v < n_vals; ++v) out[r][v] += p[r][v];
  return out;
}

}  // namespace

KineticRate gamma_time_integral_full(const DispersionRelation& disp, const GibbsParams& params,
                                     const QuadratureConfig& config) {
  config.validate();
  ConvolutionGrid grid(disp, params, config.M);
  std::size_t n = grid.size();
  std::size_t n_steps = even_steps(config.T_max, config.dt);
  std::size_t n_rungs = config.eps_ladder.size();

  auto make_J = [&](double t, std::vector<cplx>& J) {
    std::vector<cplx> ph(n), wph(n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx e = std::exp(cplx{0.0, -t * grid.omega()[i]});
      ph[i] = e;
      wph[i] = grid.W()[i] * e;
    }
    auto p = grid.to_x(std::move(ph));
    auto w = grid.to_x(std::move(wph));
    std::vector<cplx> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      // w_t^2 conj(p_t) - 2 p_t |w_t|^2 ; conj(w_t) = w_{-t} by evenness
      u[i] = w[i] * w[i] * std::conj(p[i]) - 2.0 * p[i] * w[i] * std::conj(w[i]);
    }
    auto I = grid.to_k(std::move(u), -1);
    for (std::size_t i = 0; i < n; ++i)
      J[i] = std::exp(cplx{0.0, t * grid.omega()[i]}) * I[i];
  };
  auto damp = [&](std::size_t r, double t) {
    double e = config.eps_ladder[r] * t;
    return e > 34.0 ? 0.0 : std::exp(-e);
  };
  auto acc = accumulate_time_samples(n, n_steps, config.dt, n_rungs, make_J, damp);

  KineticRate rate;
  rate.grid = grid.lattice();
  rate.M = config.M;
  rate.T_max = config.T_max;
  rate.ladder = config.eps_ladder;
  rate.gamma1.resize(n);
  rate.gamma2.resize(n);
  rate.err1.resize(n);
  rate.err2.resize(n);
  rate.flags.assign(n, 0);
  SingularManifoldNN sing(disp.dim());
  std::vector<double> vals_re(n_rungs), vals_im(n_rungs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < n_rungs; ++r) {
      vals_re[r] = -2.0 * acc[r][i].real();
      vals_im[r] = -2.0 * acc[r][i].imag();
    }
    auto [g1, e1] = lin_extrap(config.eps_ladder, vals_re, 4);
    auto [g2, e2] = lin_extrap(config.eps_ladder, vals_im, 4);
    rate.gamma1[i] = g1;
    rate.gamma2[i] = g2;
    rate.err1[i] = e1;
    rate.err2[i] = e2;
    double scale = std::max({std::abs(g1), std::abs(g2), 1e-12});
    double diff = std::hypot(vals_re[n_rungs - 1] - vals_re[n_rungs - 2],
                             vals_im[n_rungs - 1] - vals_im[n_rungs - 2]);
    if (diff > config.nonconv_tol * scale) rate.flags[i] |= kFlagNonConvergent;
    if (disp.kind() == DispersionRelation::Kind::NearestNeighbor &&
        sing.distance(rate.grid.dual_point(i)) < config.flag_radius)
      rate.flags[i] |= kFlagNearSingular;
  }
  return rate;
}

std::size_t KineticRate::index_of(const std::vector<double>& k) const {
  std::vector<int> j(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    double u = (k[i] - std::floor(k[i])) * grid.L;
    double r = std::round(u);
    if (std::abs(u - r) > 1e-9) throw ConfigError("KineticRate: k not on the quadrature grid");
    j[i] = static_cast<int>(r);
  }
  return grid.index(j);
}

cplx gamma_time_integral(const std::vector<double>& k1, const DispersionRelation& disp,
                         const GibbsParams& params, const QuadratureConfig& config) {
  KineticRate rate = gamma_time_integral_full(disp, params, config);
  std::size_t i = rate.index_of(k1);
  if (rate.flags[i] & kFlagNonConvergent)
    throw NonConvergence("gamma_time_integral: eps ladder not converged at requested k");
  return {rate.gamma1[i], rate.gamma2[i]};
}

std::vector<double> gamma1_delta_full(const DispersionRelation& disp, const GibbsParams& params,
                                      const QuadratureConfig& config, std::vector<double>* err_out,
                                      std::vector<std::uint8_t>* flags_out) {
  config.validate();
  ConvolutionGrid grid(disp, params, config.M);
  std::size_t n = grid.size();
  std::size_t n_steps = even_steps(config.s_max, config.dt);
  std::size_t n_rungs = config.beta_ladder.size();

  auto make_J = [&](double s, std::vector<cplx>& J) {
    std::vector<cplx> wph(n);
    for (std::size_t i = 0; i < n; ++i)
      wph[i] = grid.W()[i] * std::exp(cplx{0.0, -s * grid.omega()[i]});
    auto w = grid.to_x(std::move(wph));
    std::vector<cplx> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = w[i] * w[i] * std::conj(w[i]);
    auto Q = grid.to_k(std::move(u), -1);
    for (std::size_t i = 0; i < n; ++i)
      J[i] = std::exp(cplx{0.0, s * grid.omega()[i]}) * Q[i];
  };
  auto damp = [&](std::size_t r, double s) {
    double b = config.beta_ladder[r] * s;
    double e = 0.5 * b * b;
    return e > 34.0 ? 0.0 : std::exp(-e);
  };
  auto acc = accumulate_time_samples(n, n_steps, config.dt, n_rungs, make_J, damp);

  std::vector<double> g1(n), err(n);
  std::vector<std::uint8_t> flags(n, 0);
  SingularManifoldNN sing(disp.dim());
  std::vector<double> vals(n_rungs);
  LatticeConfig lat = grid.lattice();
  for (std::size_t i = 0; i < n; ++i) {
    // Gamma1 = W(k1)^{-1} * int_{-inf}^{inf} ds gauss * e^{i s w1} Q = 2/W * Re int_0^inf
    for (std::size_t r = 0; r < n_rungs; ++r) vals[r] = 2.0 / grid.W()[i] * acc[r][i].real();
    auto [v, e] = lin_extrap(config.beta_ladder, vals, 3);
    g1[i] = v;
    err[i] = e;
    double scale = std::max(std::abs(v), 1e-12);
    if (std::abs(vals[n_rungs - 1] - vals[n_rungs - 2]) > config.nonconv_tol * scale)
      flags[i] |= kFlagNonConvergent;
    if (disp.kind() == DispersionRelation::Kind::NearestNeighbor &&
        sing.distance(lat.dual_point(i)) < config.flag_radius)
      flags[i] |= kFlagNearSingular;
  }
  if (err_out) *err_out = err;
  if (flags_out) *flags_out = flags;
  return g1;
}

double gamma1_delta_measure(const std::vector<double>& k1, const DispersionRelation& disp,
                            const GibbsParams& params, const QuadratureConfig& config) {
  std::vector<std::uint8_t> flags;
  auto g1 = gamma1_delta_full(disp, params, config, nullptr, &flags);
  ConvolutionGrid grid(disp, params, config.M);
  KineticRate probe;
  probe.grid = grid.lattice();
  std::size_t i = probe.index_of(k1);
  if (flags[i] & kFlagNonConvergent)
    throw NonConvergence("gamma1_delta_measure: beta ladder not converged at requested k");
  return g1[i];
}

double gamma_integrand_magnitude(const std::vector<double>& k1, double t,
                                 const DispersionRelation& disp, const GibbsParams& params,
                                 const QuadratureConfig& config) {
  ConvolutionGrid grid(disp, params, config.M);
  std::size_t n = grid.size();
  std::vector<cplx> ph(n), wph(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx e = std::exp(cplx{0.0, -t * grid.omega()[i]});
    ph[i] = e;
    wph[i] = grid.W()[i] * e;
  }
  auto p = grid.to_x(std::move(ph));
  auto w = grid.to_x(std::move(wph));
  std::vector<cplx> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = w[i] * w[i] * std::conj(p[i]) - 2.0 * p[i] * w[i] * std::conj(w[i]);
  auto I = grid.to_k(std::move(u), -1);
  KineticRate probe;
  probe.grid = grid.lattice();
  return std::abs(I[probe.index_of(k1)]);
}

double omega_ren(double omega_k, double lambda, double R0, double gamma2_k) {
  return omega_k + lambda * R0 + lambda * lambda * gamma2_k;
}

std::vector<double> collision_operator(const HomogeneousState& h, const DispersionRelation& disp,
                                       const QuadratureConfig& config,
                                       std::vector<double>* loss_magnitude_out) {
  config.validate();
  for (double v : h.h)
    if (v < 0.0) throw ConfigError("collision_operator: h must be nonnegative");
  GibbsParams dummy(1.0, disp.omega_min() - 1.0, 0.0);
  ConvolutionGrid grid(disp, dummy, config.M);
  if (h.h.size() != grid.size()) throw ConfigError("collision_operator: grid mismatch");
  std::size_t n = grid.size();
  std::size_t n_steps = even_steps(config.s_max, config.dt);
  std::size_t n_rungs = config.beta_ladder.size();

  // J packs both the full combination (first n) and the loss part (next n).
  auto make_J = [&](double s, std::vector<cplx>& J) {
    std::vector<cplx> ph(n), hph(n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx e = std::exp(cplx{0.0, -s * grid.omega()[i]});
      ph[i] = e;
      hph[i] = h.h[i] * e;
    }
    auto ps = grid.to_x(std::move(ph));
    auto hs = grid.to_x(std::move(hph));
    auto hms = grid.reverse(hs);
    auto pms = grid.reverse(ps);
    for (auto& v : hms) v = std::conj(v);
    for (auto& v : pms) v = std::conj(v);
    std::vector<cplx> u1(n), u2(n), ul(n);
    for (std::size_t i = 0; i < n; ++i) {
      u1[i] = hs[i] * hs[i] * hms[i];          // h2 h3 h4
      u2[i] = hs[i] * hs[i] * pms[i] - 2.0 * hs[i] * ps[i] * hms[i];  // h1(h3h4 - h2h3 - h2h4)
      ul[i] = hs[i] * ps[i] * hms[i];          // loss kernel h2 h3 (+ h2 h4 by symmetry)
    }
    auto T1 = grid.to_k(std::move(u1), -1);
    auto T2 = grid.to_k(std::move(u2), -1);
    auto TL = grid.to_k(std::move(ul), -1);
    for (std::size_t i = 0; i < n; ++i) {
      cplx e1 = std::exp(cplx{0.0, s * grid.omega()[i]});
      J[i] = e1 * (T1[i] + h.h[i] * T2[i]);
      J[n + i] = e1 * (2.0 * h.h[i] * TL[i]);
    }
  };
  auto damp = [&](std::size_t r, double s) {
    double b = config.beta_ladder[r] * s;
    double e = 0.5 * b * b;
    return e > 34.0 ? 0.0 : std::exp(-e);
  };
  auto acc = accumulate_time_samples(2 * n, n_steps, config.dt, n_rungs, make_J, damp);

  std::vector<double> out(n), vals(n_rungs);
  for (std::size_t i = 0; i < n; ++i) {
    // C = 2 int_{-inf}^{inf} ds (...) = 4 Re int_0^inf
    for (std::size_t r = 0; r < n_rungs; ++r) vals[r] = 4.0 * acc[r][i].real();
    out[i] = lin_extrap(config.beta_ladder, vals, 3).first;
  }
  if (loss_magnitude_out) {
    loss_magnitude_out->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < n_rungs; ++r) vals[r] = 4.0 * acc[r][n + i].real();
      (*loss_magnitude_out)[i] = std::abs(lin_extrap(config.beta_ladder, vals, 3).first);
    }
  }
  return out;
}

HomogeneousState solve_kinetic(const HomogeneousState& h0, double t_end,
                               const DispersionRelation& disp, const QuadratureConfig& config,
                               double dt0) {
  HomogeneousState state = h0;
  double dt = dt0 > 0.0 ? dt0 : t_end / 8.0;
  const double dt_min = t_end * 1e-4;
  auto rhs = [&](const std::vector<double>& h) {
    HomogeneousState tmp{state.grid, h, 0.0};
    for (auto& v : tmp.h) v = std::max(v, 0.0);
    return collision_operator(tmp, disp, config);
  };
  double t = state.time;
  std::size_t n = state.h.size();
  while (t < t_end - 1e-12) {
    double step_dt = std::min(dt, t_end - t);
    auto k1 = rhs(state.h);
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state.h[i] + 0.5 * step_dt * k1[i];
    auto k2 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state.h[i] + 0.5 * step_dt * k2[i];
    auto k3 = rhs(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state.h[i] + step_dt * k3[i];
    auto k4 = rhs(tmp);
    std::vector<double> next(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = state.h[i] + step_dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (next[i] < 0.0) ok = false;
    }
    if (!ok) {
      dt *= 0.5;
      if (dt < dt_min) throw NonConvergence("solve_kinetic: step size underflow");
      continue;
    }
    state.h = std::move(next);
    t += step_dt;
    state.time = t;
  }
  return state;
}

cplx predicted_covariance(double W_k, double gamma1_k, double gamma2_k, double t) {
  return W_k * std::exp(cplx{-gamma1_k * std::abs(t), -gamma2_k * t});
}

void KineticRate::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for write: " + path);
  for (int c = 0; c < grid.d; ++c) os << "k" << (c + 1) << ",";
  os << "gamma1,gamma2,err1,err2,flags\n";
  os.precision(12);
  std::size_t n = grid.volume();
  for (std::size_t i = 0; i < n; ++i) {
    auto k = grid.dual_point(i);
    for (double c : k) os << c << ",";
    os << gamma1[i] << "," << gamma2[i] << "," << err1[i] << "," << err2[i] << ","
       << static_cast<int>(flags[i]) << "\n";
  }
}

}  // namespace wavekin
