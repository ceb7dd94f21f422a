#include "wavekin/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "wavekin/fft.hpp"

namespace wavekin {

DispersionRelation DispersionRelation::nearest_neighbor(int d, double c) {
  DispersionRelation w;
  w.kind_ = Kind::NearestNeighbor;
  w.d_ = d;
  w.c_ = c;
  if (d < 1) throw ConfigError("dispersion: d must be positive");
  return w;
}

DispersionRelation DispersionRelation::tabulated(int d, int M, std::vector<double> grid_values,
                                                 bool interpolate) {
  DispersionRelation w;
  w.kind_ = Kind::Tabulated;
  w.d_ = d;
  w.M_ = M;
  w.interpolate_ = interpolate;
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(M);
  if (grid_values.size() != n) throw ConfigError("tabulated dispersion: value count mismatch");
  w.tab_ = std::move(grid_values);
  // evenness check on the grid: omega(-k) = omega(k)
  LatticeConfig lat(d, M);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = lat.site(i);
    for (auto& c : x) c = -c;
    if (std::abs(w.tab_[i] - w.tab_[lat.index(x)]) > 1e-12)
      throw ConfigError("tabulated dispersion: omega(-k) != omega(k)");
  }
  return w;
}

double DispersionRelation::omega(const std::vector<double>& k) const {
  if (static_cast<int>(k.size()) != d_) throw ConfigError("omega: wrong arity");
  if (kind_ == Kind::NearestNeighbor) {
    double s = 0.0;
    for (double c : k) s += std::cos(kTwoPi * c);
    return c_ - s;
  }
  // tabulated
  std::vector<double> u(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    double v = k[i] - std::floor(k[i]);
    u[i] = v * M_;
  }
  if (!interpolate_) {
    LatticeConfig lat(d_, M_);
    std::vector<int> j(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      double r = std::round(u[i]);
      if (std::abs(u[i] - r) > 1e-9)
        throw ConfigError("tabulated dispersion: k off grid and interpolation disabled");
      j[i] = static_cast<int>(r);
    }
    return tab_[lat.index(j)];
  }
  // multilinear interpolation with periodic wrap
  LatticeConfig lat(d_, M_);
  double acc = 0.0;
  int corners = 1 << d_;
  std::vector<int> base(k.size());
  std::vector<double> fr(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    base[i] = static_cast<int>(std::floor(u[i]));
    fr[i] = u[i] - base[i];
  }
  for (int c = 0; c < corners; ++c) {
    double wgt = 1.0;
    std::vector<int> j(base);
    for (int i = 0; i < d_; ++i) {
      if (c & (1 << i)) {
        j[static_cast<std::size_t>(i)] += 1;
        wgt *= fr[static_cast<std::size_t>(i)];
      } else {
        wgt *= 1.0 - fr[static_cast<std::size_t>(i)];
      }
    }
    acc += wgt * tab_[lat.index(j)];
  }
  return acc;
}

double DispersionRelation::omega_min() const {
  if (kind_ == Kind::NearestNeighbor) return c_ - d_;
  return *std::min_element(tab_.begin(), tab_.end());
}

double DispersionRelation::omega_max() const {
  if (kind_ == Kind::NearestNeighbor) return c_ + d_;
  return *std::max_element(tab_.begin(), tab_.end());
}

std::vector<double> DispersionRelation::omega_grid(int M) const {
  LatticeConfig lat(d_, M);
  std::size_t n = lat.volume();
  std::vector<double> g(n);
  if (kind_ == Kind::NearestNeighbor) {
    // separable; build per-axis table once
    std::vector<double> cs(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) cs[static_cast<std::size_t>(j)] = std::cos(kTwoPi * j / M);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = lat.site(i);
      double s = 0.0;
      for (int c : x) s += cs[static_cast<std::size_t>(c)];
      g[i] = c_ - s;
    }
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) g[i] = omega(lat.dual_point(i));
  return g;
}

PropagatorGrid::PropagatorGrid(const DispersionRelation& disp, int M) : disp_(&disp), M_(M) {
  if (M < 16 || M % 2 != 0) throw ConfigError("PropagatorGrid: M must be even and >= 16");
  if (disp.kind() != DispersionRelation::Kind::NearestNeighbor) omega_g_ = disp.omega_grid(M);
}

std::vector<cplx> PropagatorGrid::axis_block(double t) const {
  // 1-d factor a_t(x) = int dk e^{i2pi x k} e^{+i t cos(2pi k)}
  std::vector<cplx> a(static_cast<std::size_t>(M_));
  for (int j = 0; j < M_; ++j)
    a[static_cast<std::size_t>(j)] = std::exp(cplx{0.0, t * std::cos(kTwoPi * j / M_)});
  dft_1d(a, +1);
  for (auto& v : a) v /= static_cast<double>(M_);
  return a;
}

std::vector<cplx> PropagatorGrid::block(double t) const {
  int d = disp_->dim();
  LatticeConfig lat(d, M_);
  std::size_t n = lat.volume();
  std::vector<cplx> p(n);
  if (disp_->kind() == DispersionRelation::Kind::NearestNeighbor) {
    auto a = axis_block(t);
    cplx pref = std::exp(cplx{0.0, -t * disp_->offset()});
    for (std::size_t i = 0; i < n; ++i) {
      auto x = lat.site(i);
      cplx v = pref;
      for (int c : x) v *= a[static_cast<std::size_t>(c)];
      p[i] = v;
    }
    return p;
  }
  for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(cplx{0.0, -t * omega_g_[i]});
  dft_pow(p, d, M_, +1);
  double inv = 1.0 / static_cast<double>(n);
  for (auto& v : p) v *= inv;
  return p;
}

cplx PropagatorGrid::at(double t, const std::vector<int>& x) const {
  for (int c : x)
    if (std::abs(c) >= M_ / 2)
      throw GuardViolation("free_propagator: |x|_inf >= M/2 (grid aliasing)");
  if (disp_->kind() == DispersionRelation::Kind::NearestNeighbor) {
    auto a = axis_block(t);
    cplx v = std::exp(cplx{0.0, -t * disp_->offset()});
    for (int c : x) v *= a[static_cast<std::size_t>((c % M_ + M_) % M_)];
    return v;
  }
  auto p = block(t);
  LatticeConfig lat(disp_->dim(), M_);
  return p[lat.index(x)];
}

double PropagatorGrid::l3_norm_cubed(double t) const {
  if (disp_->kind() == DispersionRelation::Kind::NearestNeighbor) {
    auto a = axis_block(t);
    double s = 0.0;
    for (const auto& v : a) s += std::pow(std::abs(v), 3);
    return std::pow(s, disp_->dim());
  }
  auto p = block(t);
  double s = 0.0;
  for (const auto& v : p) s += std::pow(std::abs(v), 3);
  return s;
}

KFunction::KFunction(const DispersionRelation& disp, int M) : disp_(&disp), M_(M) {
  if (M < 16) throw ConfigError("KFunction: M must be >= 16");
}

cplx KFunction::at(const std::vector<int>& x, double t0, double t1, double t2,
                   const std::vector<double>& u1, const std::vector<double>& u2) const {
  int d = disp_->dim();
  for (int c : x)
    if (std::abs(c) >= M_ / 2) throw GuardViolation("K_function: |x|_inf >= M/2 (grid aliasing)");
  if (disp_->kind() == DispersionRelation::Kind::NearestNeighbor) {
    // per-axis closed-form amplitude R = |t0 + t1 e^{i q1} + t2 e^{i q2}|
    cplx out = std::exp(cplx{0.0, -disp_->offset() * (t0 + t1 + t2)});
    std::vector<cplx> a(static_cast<std::size_t>(M_));
    for (int nu = 0; nu < d; ++nu) {
      double q1 = kTwoPi * u1[static_cast<std::size_t>(nu)];
      double q2 = kTwoPi * u2[static_cast<std::size_t>(nu)];
      cplx z = t0 + t1 * std::exp(cplx{0.0, q1}) + t2 * std::exp(cplx{0.0, q2});
      double R = std::abs(z), phi = std::arg(z);
      for (int j = 0; j < M_; ++j)
        a[static_cast<std::size_t>(j)] = std::exp(cplx{0.0, R * std::cos(kTwoPi * j / M_ + phi)});
      dft_1d(a, +1);
      int xc = (x[static_cast<std::size_t>(nu)] % M_ + M_) % M_;
      out *= a[static_cast<std::size_t>(xc)] / static_cast<double>(M_);
    }
    return out;
  }
  // generic quadrature on the M^d grid
  LatticeConfig lat(d, M_);
  std::size_t n = lat.volume();
  std::vector<cplx> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = lat.dual_point(i);
    std::vector<double> ku1(k), ku2(k);
    for (int c = 0; c < d; ++c) {
      ku1[static_cast<std::size_t>(c)] += u1[static_cast<std::size_t>(c)];
      ku2[static_cast<std::size_t>(c)] += u2[static_cast<std::size_t>(c)];
    }
    double ph = t0 * disp_->omega(k) + t1 * disp_->omega(ku1) + t2 * disp_->omega(ku2);
    f[i] = std::exp(cplx{0.0, -ph});
  }
  dft_pow(f, d, M_, +1);
  return f[lat.index(x)] / static_cast<double>(n);
}

double KFunction::l3_norm(double t0, double t1, double t2, const std::vector<double>& u1,
                          const std::vector<double>& u2) const {
  int d = disp_->dim();
  if (disp_->kind() == DispersionRelation::Kind::NearestNeighbor) {
    double prod = 1.0;
    std::vector<cplx> a(static_cast<std::size_t>(M_));
    for (int nu = 0; nu < d; ++nu) {
      double q1 = kTwoPi * u1[static_cast<std::size_t>(nu)];
      double q2 = kTwoPi * u2[static_cast<std::size_t>(nu)];
      cplx z = t0 + t1 * std::exp(cplx{0.0, q1}) + t2 * std::exp(cplx{0.0, q2});
      double R = std::abs(z), phi = std::arg(z);
      for (int j = 0; j < M_; ++j)
        a[static_cast<std::size_t>(j)] = std::exp(cplx{0.0, R * std::cos(kTwoPi * j / M_ + phi)});
      dft_1d(a, +1);
      double s = 0.0;
      for (const auto& v : a) s += std::pow(std::abs(v) / M_, 3);
      prod *= s;
    }
    return std::cbrt(prod);
  }
  LatticeConfig lat(d, M_);
  std::size_t n = lat.volume();
  std::vector<cplx> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = lat.dual_point(i);
    std::vector<double> ku1(k), ku2(k);
    for (int c = 0; c < d; ++c) {
      ku1[static_cast<std::size_t>(c)] += u1[static_cast<std::size_t>(c)];
      ku2[static_cast<std::size_t>(c)] += u2[static_cast<std::size_t>(c)];
    }
    double ph = t0 * disp_->omega(k) + t1 * disp_->omega(ku1) + t2 * disp_->omega(ku2);
    f[i] = std::exp(cplx{0.0, -ph});
  }
  dft_pow(f, d, M_, +1);
  double s = 0.0;
  for (const auto& v : f) s += std::pow(std::abs(v) / static_cast<double>(n), 3);
  return std::cbrt(s);
}

namespace {
// torus distance of a scalar to the set {0, 1/2}
double half_set_distance(double k) {
  double t = std::abs(k - std::round(k));  // in [0, 1/2]
  return std::min(t, 0.5 - t);
}
}  // namespace

double SingularManifoldNN::distance(const std::vector<double>& k) const {
  double sum = 0.0, mx = 0.0;
  for (double c : k) {
    double del = half_set_distance(c);
    sum += del * del;
    mx = std::max(mx, del * del);
  }
  return std::sqrt(std::max(0.0, sum - mx));
}

double step_profile(double x) {
  auto h = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  double ax = std::abs(x);
  double num = h(2.0 - 2.0 * ax);
  double den = num + h(2.0 * ax - 1.0);
  return den == 0.0 ? 0.0 : num / den;
}

CutoffFamily::CutoffFamily(int d, double lambda, double eps0) : d_(d), lambda_(lambda) {
  lam0p_ = std::min(1.0, std::pow(eps0, 1.0 / 0.75));
  if (!(lambda > 0.0 && lambda < lam0p_))
    throw GuardViolation("CutoffFamily: lambda outside (0, lambda0')");
  width_ = std::pow(lambda, 0.75);
}

double CutoffFamily::line_distance(const std::vector<double>& k, int free_axis,
                                   unsigned corner) const {
  double s = 0.0;
  int bit = 0;
  for (int nu = 0; nu < d_; ++nu) {
    if (nu == free_axis) continue;
    double target = (corner >> bit & 1u) ? 0.5 : 0.0;
    double t = k[static_cast<std::size_t>(nu)] - target;
    t = std::abs(t - std::round(t));
    s += t * t;
    ++bit;
  }
  return std::sqrt(s);
}

double CutoffFamily::F1(const std::vector<double>& k) const {
  double prod = 1.0;
  unsigned corners = 1u << (d_ - 1);
  for (int nu = 0; nu < d_; ++nu)
    for (unsigned c = 0; c < corners; ++c)
      prod *= 1.0 - step_profile(line_distance(k, nu, c) / width_);
  return prod;
}

std::pair<double, double> CutoffFamily::Phi(const std::vector<double>& k1,
                                            const std::vector<double>& k2,
                                            const std::vector<double>& k3) const {
  auto sum = [this](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> s(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i)
      s[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];
    return s;
  };
  double phi1 = F1(sum(k1, k2)) * F1(sum(k2, k3)) * F1(sum(k3, k1));
  return {1.0 - phi1, phi1};
}

DecayFitReport verify_dr2(const DispersionRelation& disp, const std::vector<double>& t_grid, int M) {
  PropagatorGrid pg(disp, M);
  DecayFitReport rep;
  rep.M = M;
  std::vector<double> lx, ly;
  for (double t : t_grid) {
    double v = pg.l3_norm_cubed(t);
    rep.samples.emplace_back(t, v);
    if (t >= 5.0 && v > 0.0) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(v));
    }
  }
  if (lx.size() < 4) throw NonConvergence("verify_dr2: fewer than 4 usable grid points");
  // least squares ln v = ln C - p ln t
  double n = static_cast<double>(lx.size());
  double sx = std::accumulate(lx.begin(), lx.end(), 0.0);
  double sy = std::accumulate(ly.begin(), ly.end(), 0.0);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double icept = (sy - slope * sx) / n;
  rep.exponent = -slope;
  rep.constant = std::exp(icept);
  auto mm = std::minmax_element(t_grid.begin(), t_grid.end());
  rep.t_min = *mm.first;
  rep.t_max = *mm.second;
  return rep;
}

InterferenceReport verify_dr3(const DispersionRelation& disp, const std::vector<double>& t_grid,
                              const std::vector<std::vector<double>>& k0_samples, int M) {
  KFunction kf(disp, M);
  SingularManifoldNN sing(disp.dim());
  InterferenceReport rep;
  std::vector<int> x0(static_cast<std::size_t>(disp.dim()), 0);
  std::vector<double> zero(static_cast<std::size_t>(disp.dim()), 0.0);
  std::vector<double> cs;
  for (const auto& k0 : k0_samples) {
    double dist = sing.distance(k0);
    if (dist <= 1e-12) {
      ++rep.n_skipped;  // bound vacuous on M^sing
      continue;
    }
    std::vector<double> mk0(k0);
    for (auto& c : mk0) c = -c;
    for (double t : t_grid) {
      for (double sgn : {1.0, -1.0}) {
        double I = std::abs(kf.at(x0, t, sgn * t, 0.0, mk0, zero));
        rep.samples.push_back({t, dist, I});
        cs.push_back(I * std::hypot(1.0, t) * dist);
        ++rep.n_samples;
      }
    }
  }
  if (cs.empty()) {
    rep.fitted_constant = 0.0;
    return rep;
  }
  // C = tightest uniform constant over the samples; worst_ratio = peak/mean
  // is a uniformity diagnostic (the bound itself is fitted, non-rigorous).
  rep.fitted_constant = *std::max_element(cs.begin(), cs.end());
  double mean = std::accumulate(cs.begin(), cs.end(), 0.0) / static_cast<double>(cs.size());
  rep.worst_ratio = rep.fitted_constant / std::max(1e-300, mean);
  return rep;
}

std::string DecayFitReport::to_json() const {
  nlohmann::json j;
  j["exponent"] = exponent;
  j["constant"] = constant;
  j["t_range"] = {t_min, t_max};
  j["M"] = M;
  auto& s = j["samples"] = nlohmann::json::array();
  for (const auto& p : samples) s.push_back({p.first, p.second});
  return j.dump(2);
}

std::string InterferenceReport::to_json() const {
  nlohmann::json j;
  j["constant"] = fitted_constant;
  j["worst_ratio"] = worst_ratio;
  j["n_samples"] = n_samples;
  j["n_skipped"] = n_skipped;
  auto& s = j["samples"] = nlohmann::json::array();
  for (const auto& p : samples) s.push_back({p[0], p[1], p[2]});
  return j.dump(2);
}

}  // namespace wavekin
