#include "wavekin/gibbs.hpp"

#include <algorithm>
#include <cmath>

namespace wavekin {

double hamiltonian(const FieldState& field, const GibbsParams& params,
                   const DispersionRelation& disp) {
  if (field.repr != Representation::Site) throw ConfigError("hamiltonian: expected site field");
  FieldState spec = forward_transform(field);
  const LatticeConfig& lat = field.lattice;
  std::size_t n = lat.volume();
  double hop = 0.0;
  for (std::size_t i = 0; i < n; ++i) hop += disp.omega(lat.dual_point(i)) * std::norm(spec.values[i]);
  hop /= static_cast<double>(n);
  double quart = 0.0;
  for (const auto& v : field.values) {
    double a = std::norm(v);
    quart += a * a;
  }
  return hop + 0.5 * params.lambda * quart;
}

double particle_number(const FieldState& field) {
  double s = 0.0;
  if (field.repr == Representation::Site) {
    for (const auto& v : field.values) s += std::norm(v);
    return s;
  }
  for (const auto& v : field.values) s += std::norm(v);
  return s / static_cast<double>(field.lattice.volume());
}

FieldState sample_gaussian(const GibbsParams& params, const LatticeConfig& lat,
                           const DispersionRelation& disp, std::mt19937_64& rng) {
  params.validate(disp);
  FieldState spec(lat, Representation::Spectral);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t n = lat.volume();
  double vol = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = params.W(disp.omega(lat.dual_point(i)));
    double s = std::sqrt(vol * w / 2.0);
    spec.values[i] = cplx{s * gauss(rng), s * gauss(rng)};
  }
  return inverse_transform(spec);
}

MetropolisChain::MetropolisChain(const GibbsParams& params, const LatticeConfig& lat,
                                 const DispersionRelation& disp, std::mt19937_64 rng)
    : params_(params), lat_(lat), disp_(&disp), rng_(std::move(rng)) {
  params_.validate(disp);
  std::size_t n = lat_.volume();
  // alpha_Lambda(x) = inverse transform of omega restricted to Lambda*
  FieldState om(lat_, Representation::Spectral);
  for (std::size_t i = 0; i < n; ++i) om.values[i] = disp.omega(lat_.dual_point(i));
  FieldState alpha = inverse_transform(om);
  for (std::size_t i = 0; i < n; ++i) {
    double a = alpha.values[i].real();
    if (std::abs(a) < 1e-13) continue;
    if (i == 0)
      alpha0_ = a;
    else
      stencil_.emplace_back(i, a);
  }
  field_ = sample_gaussian(params_, lat_, disp, rng_);
  conv_.assign(n, cplx{0, 0});
  // full convolution once; incremental afterwards
  for (std::size_t x = 0; x < n; ++x) {
    cplx s = alpha0_ * field_.values[x];
    auto xs = lat_.site(x);
    for (const auto& [disp_idx, a] : stencil_) {
      auto dx = lat_.site(disp_idx);
      auto y = xs;
      for (int c = 0; c < lat_.d; ++c) y[static_cast<std::size_t>(c)] -= dx[static_cast<std::size_t>(c)];
      s += a * field_.values[lat_.index(y)];
    }
    conv_[x] = s;
  }
  scale_.assign(n, 0.4);
  acc_.assign(n, 0);
  tot_.assign(n, 0);
}

double MetropolisChain::site_delta_action(std::size_t i, cplx prop) const {
  const cplx psi = field_.values[i];
  double dN = 2.0 * (prop.real() * psi.real() + prop.imag() * psi.imag()) + std::norm(prop);
  double dHhop = 2.0 * (prop.real() * conv_[i].real() + prop.imag() * conv_[i].imag()) +
                 alpha0_ * std::norm(prop);
  double p2 = std::norm(psi);
  double p2n = std::norm(psi + prop);
  double dHq = 0.5 * params_.lambda * (p2n * p2n - p2 * p2);
  return params_.beta * (dHhop + dHq - params_.mu * dN);
}

void MetropolisChain::apply_update(std::size_t i, cplx prop) {
  field_.values[i] += prop;
  conv_[i] += alpha0_ * prop;
  auto xs = lat_.site(i);
  for (const auto& [disp_idx, a] : stencil_) {
    auto dx = lat_.site(disp_idx);
    auto y = xs;
    for (int c = 0; c < lat_.d; ++c) y[static_cast<std::size_t>(c)] += dx[static_cast<std::size_t>(c)];
    conv_[lat_.index(y)] += a * prop;  // alpha is even
  }
}

void MetropolisChain::sweep() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t n = lat_.volume();
  for (std::size_t i = 0; i < n; ++i) {
    cplx prop{scale_[i] * gauss(rng_), scale_[i] * gauss(rng_)};
    double dA = site_delta_action(i, prop);
    ++tot_[i];
    if (dA <= 0.0 || unif(rng_) < std::exp(-dA)) {
      apply_update(i, prop);
      ++acc_[i];
    }
  }
  ++sweeps_;
}

void MetropolisChain::burn_in(int sweeps) {
  const int window = 20;
  int done = 0;
  while (done < sweeps) {
    reset_acceptance();
    int batch = std::min(window, sweeps - done);
    for (int s = 0; s < batch; ++s) sweep();
    done += batch;
    for (std::size_t i = 0; i < scale_.size(); ++i) {
      if (tot_[i] == 0) continue;
      double rate = static_cast<double>(acc_[i]) / static_cast<double>(tot_[i]);
      scale_[i] *= std::exp(0.8 * (rate - 0.4));
      scale_[i] = std::clamp(scale_[i], 1e-4, 10.0);
    }
  }
  reset_acceptance();
}

const FieldState& MetropolisChain::advance(int thin) {
  for (int s = 0; s < thin; ++s) sweep();
  return field_;
}

double MetropolisChain::acceptance_rate() const {
  long long a = 0, t = 0;
  for (std::size_t i = 0; i < acc_.size(); ++i) {
    a += acc_[i];
    t += tot_[i];
  }
  return t == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(t);
}

void MetropolisChain::reset_acceptance() {
  std::fill(acc_.begin(), acc_.end(), 0);
  std::fill(tot_.begin(), tot_.end(), 0);
}

double MetropolisChain::autocorrelation_time_H(int probe_sweeps) {
  std::vector<double> hs;
  hs.reserve(static_cast<std::size_t>(probe_sweeps));
  for (int s = 0; s < probe_sweeps; ++s) {
    sweep();
    hs.push_back(hamiltonian(field_, params_, *disp_));
  }
  std::size_t n = hs.size();
  double mean = std::accumulate(hs.begin(), hs.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double h : hs) var += (h - mean) * (h - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 4; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (hs[i] - mean) * (hs[i + lag] - mean);
    c /= static_cast<double>(n - lag) * var;
    if (c < 0.05) break;  // Sokal-style window
    tau += 2.0 * c;
  }
  return tau;
}

EnsembleStats::EnsembleStats(const LatticeConfig& lat, int batch_size)
    : lat_(lat), batch_size_(batch_size) {
  std::size_t n = lat.volume();
  sum_w_.assign(n, 0.0);
  sum_pair_.assign(n, cplx{0, 0});
  cur_w_.assign(n, 0.0);
  cur_pair_.assign(n, cplx{0, 0});
}

void EnsembleStats::close_batch() {
  if (cur_n_ == 0) return;
  double inv = 1.0 / static_cast<double>(cur_n_);
  std::vector<double> bw(cur_w_);
  std::vector<cplx> bp(cur_pair_);
  for (auto& v : bw) v *= inv;
  for (auto& v : bp) v *= inv;
  batch_w_.push_back(std::move(bw));
  batch_pair_.push_back(std::move(bp));
  batch_r0_.push_back(cur_r0_ * inv);
  std::fill(cur_w_.begin(), cur_w_.end(), 0.0);
  std::fill(cur_pair_.begin(), cur_pair_.end(), cplx{0, 0});
  cur_r0_ = 0.0;
  cur_n_ = 0;
}

void EnsembleStats::add_sample(const FieldState& site_field) {
  if (!(site_field.lattice == lat_)) throw ConfigError("EnsembleStats: lattice mismatch");
  FieldState spec =
      site_field.repr == Representation::Site ? forward_transform(site_field) : site_field;
  std::size_t n = lat_.volume();
  double vol = static_cast<double>(n);
  double nsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = std::norm(spec.values[i]) / vol;
    cplx p = spec.values[i] * spec.values[i] / vol;
    sum_w_[i] += w;
    sum_pair_[i] += p;
    cur_w_[i] += w;
    cur_pair_[i] += p;
    nsum += w;
  }
  // 2 E|psi(0)|^2 translation-averaged = 2 N / |Lambda| = 2 mode_average |psi^|^2/|Lambda|
  double r0 = 2.0 * nsum / vol;
  sum_r0_ += r0;
  cur_r0_ += r0;
  ++count_;
  if (++cur_n_ >= batch_size_) close_batch();
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (!(other.lat_ == lat_)) throw ConfigError("EnsembleStats::merge: lattice mismatch");
  EnsembleStats o = other;
  o.close_batch();
  count_ += o.count_;
  sum_r0_ += o.sum_r0_;
  for (std::size_t i = 0; i < sum_w_.size(); ++i) {
    sum_w_[i] += o.sum_w_[i];
    sum_pair_[i] += o.sum_pair_[i];
  }
  for (auto& b : o.batch_w_) batch_w_.push_back(std::move(b));
  for (auto& b : o.batch_pair_) batch_pair_.push_back(std::move(b));
  for (double b : o.batch_r0_) batch_r0_.push_back(b);
}

std::vector<double> EnsembleStats::W_estimate() const {
  require_count();
  std::vector<double> w(sum_w_);
  for (auto& v : w) v /= static_cast<double>(count_);
  return w;
}

namespace {
double batch_stderr(const std::vector<double>& batches) {
  std::size_t m = batches.size();
  if (m < 2) return 0.0;
  double mean = std::accumulate(batches.begin(), batches.end(), 0.0) / static_cast<double>(m);
  double var = 0.0;
  for (double b : batches) var += (b - mean) * (b - mean);
  var /= static_cast<double>(m - 1);
  return std::sqrt(var / static_cast<double>(m));
}
}  // namespace

std::vector<double> EnsembleStats::W_stderr() const {
  require_count();
  std::size_t n = lat_.volume();
  std::vector<double> se(n, 0.0);
  std::size_t m = batch_w_.size();
  if (m < 2) return se;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& b : batch_w_) mean += b[i];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (const auto& b : batch_w_) var += (b[i] - mean) * (b[i] - mean);
    var /= static_cast<double>(m - 1);
    se[i] = std::sqrt(var / static_cast<double>(m));
  }
  return se;
}

double EnsembleStats::R0() const {
  require_count();
  return sum_r0_ / static_cast<double>(count_);
}

double EnsembleStats::R0_stderr() const {
  require_count();
  return batch_stderr(batch_r0_);
}

std::vector<cplx> EnsembleStats::pair_moment() const {
  require_count();
  std::vector<cplx> p(sum_pair_);
  for (auto& v : p) v /= static_cast<double>(count_);
  return p;
}

std::vector<double> EnsembleStats::pair_moment_stderr() const {
  require_count();
  std::size_t n = lat_.volume();
  std::vector<double> se(n, 0.0);
  std::size_t m = batch_pair_.size();
  if (m < 2) return se;
  for (std::size_t i = 0; i < n; ++i) {
    cplx mean{0, 0};
    for (const auto& b : batch_pair_) mean += b[i];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (const auto& b : batch_pair_) var += std::norm(b[i] - mean);
    var /= static_cast<double>(m - 1);
    se[i] = std::sqrt(var / static_cast<double>(m));
  }
  return se;
}

ValueWithError estimate_R0(const EnsembleStats& ensemble) {
  return {ensemble.R0(), ensemble.R0_stderr()};
}

Cumulant4Accumulator::Cumulant4Accumulator(const LatticeConfig& lat,
                                           std::vector<std::vector<int>> offsets,
                                           std::vector<int> parities, int batch_size)
    : lat_(lat), offsets_(std::move(offsets)), parities_(std::move(parities)),
      batch_size_(batch_size) {
  if (offsets_.size() != 4 || parities_.size() != 4)
    throw ConfigError("cumulant4: needs exactly 4 offsets and parities");
  int s = 0;
  for (int p : parities_) {
    if (p != 1 && p != -1) throw ConfigError("cumulant4: parities must be +-1");
    s += p;
  }
  gauge_trivial_ = (s != 0);
  allowed_ = {parities_[0] + parities_[1] == 0 && parities_[2] + parities_[3] == 0,
              parities_[0] + parities_[2] == 0 && parities_[1] + parities_[3] == 0,
              parities_[0] + parities_[3] == 0 && parities_[1] + parities_[2] == 0};
}

void Cumulant4Accumulator::add_sample(const FieldState& f) {
  if (gauge_trivial_) return;
  if (f.repr != Representation::Site) throw ConfigError("cumulant4: expected site field");
  std::size_t n = lat_.volume();
  auto val = [&](std::size_t x, int which) {
    auto xs = lat_.site(x);
    for (int c = 0; c < lat_.d; ++c)
      xs[static_cast<std::size_t>(c)] += offsets_[static_cast<std::size_t>(which)][static_cast<std::size_t>(c)];
    cplx v = f.values[lat_.index(xs)];
    return parities_[static_cast<std::size_t>(which)] == 1 ? v : std::conj(v);
  };
  cplx m4{0, 0}, m12{0, 0}, m34{0, 0}, m13{0, 0}, m24{0, 0}, m14{0, 0}, m23{0, 0};
  for (std::size_t x = 0; x < n; ++x) {
    cplx a0 = val(x, 0), a1 = val(x, 1), a2 = val(x, 2), a3 = val(x, 3);
    m4 += a0 * a1 * a2 * a3;
    m12 += a0 * a1;
    m34 += a2 * a3;
    m13 += a0 * a2;
    m24 += a1 * a3;
    m14 += a0 * a3;
    m23 += a1 * a2;
  }
  double inv = 1.0 / static_cast<double>(n);
  Moments* accs[2] = {&total_, &cur_};
  for (Moments* acc : accs) {
    acc->m4 += m4 * inv;
    acc->m12 += m12 * inv;
    acc->m34 += m34 * inv;
    acc->m13 += m13 * inv;
    acc->m24 += m24 * inv;
    acc->m14 += m14 * inv;
    acc->m23 += m23 * inv;
    acc->n += 1;
  }
  if (cur_.n >= batch_size_) close_batch();
}

cplx Cumulant4Accumulator::kappa(const Moments& m, const std::array<bool, 3>& allowed) {
  double inv = 1.0 / static_cast<double>(m.n);
  cplx k = m.m4 * inv;
  if (allowed[0]) k -= (m.m12 * inv) * (m.m34 * inv);
  if (allowed[1]) k -= (m.m13 * inv) * (m.m24 * inv);
  if (allowed[2]) k -= (m.m14 * inv) * (m.m23 * inv);
  return k;
}

void Cumulant4Accumulator::close_batch() {
  if (cur_.n == 0) return;
  batch_vals_.push_back(kappa(cur_, allowed_));
  cur_ = Moments{};
}

ComplexWithError Cumulant4Accumulator::result() const {
  if (gauge_trivial_) return {cplx{0.0, 0.0}, 0.0};
  if (total_.n == 0) throw GuardViolation("cumulant4: no samples");
  ComplexWithError out;
  out.value = kappa(total_, allowed_);
  std::size_t m = batch_vals_.size();
  if (m >= 2) {
    cplx mean{0, 0};
    for (const auto& b : batch_vals_) mean += b;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (const auto& b : batch_vals_) var += std::norm(b - mean);
    var /= static_cast<double>(m - 1);
    out.stderror = std::sqrt(var / static_cast<double>(m));
  }
  return out;
}

}  // namespace wavekin
