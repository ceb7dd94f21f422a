#include "wavekin/dynamics.hpp"

#include <cmath>
#include <fstream>

#include "wavekin/fft.hpp"

namespace wavekin {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("IntegratorConfig: dt must be > 0");
  double prev = -1.0;
  for (double t : record_times) {
    if (t < 0.0) throw ConfigError("IntegratorConfig: record times must be nonnegative");
    if (t <= prev) throw ConfigError("IntegratorConfig: record times must be strictly increasing");
    double steps = t / dt;
    if (std::abs(steps - std::round(steps)) > 1e-12 * std::max(1.0, steps))
      throw ConfigError("IntegratorConfig: record time not a multiple of dt");
    prev = t;
  }
}

namespace {

void kick_half(FieldState& f, double lambda, double dt) {
  if (lambda == 0.0) return;
  double c = -0.5 * lambda * dt;
  for (auto& v : f.values) v *= std::exp(cplx{0.0, c * std::norm(v)});
}

void linear_full(FieldState& f, const std::vector<cplx>& phase) {
  dft_pow(f.values, f.lattice.d, f.lattice.L, -1);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] *= phase[i];
  dft_pow(f.values, f.lattice.d, f.lattice.L, +1);
  double inv = 1.0 / static_cast<double>(f.lattice.volume());
  for (auto& v : f.values) v *= inv;
}

std::vector<cplx> linear_phase(const LatticeConfig& lat, const DispersionRelation& disp,
                               double dt) {
  std::size_t n = lat.volume();
  std::vector<cplx> ph(n);
  for (std::size_t i = 0; i < n; ++i)
    ph[i] = std::exp(cplx{0.0, -dt * disp.omega(lat.dual_point(i))});
  return ph;
}

void check_finite(const FieldState& f) {
  for (const auto& v : f.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > 1e12)
      throw NonConvergence("evolve: field overflow, dt too large");
}

}  // namespace

FieldState step(const FieldState& field, double dt, const GibbsParams& params,
                const DispersionRelation& disp) {
  FieldState f = field.repr == Representation::Site ? field : inverse_transform(field);
  auto phase = linear_phase(f.lattice, disp, dt);
  kick_half(f, params.lambda, dt);
  linear_full(f, phase);
  kick_half(f, params.lambda, dt);
  return f;
}

Trajectory evolve(const FieldState& initial, const IntegratorConfig& config,
                  const GibbsParams& params, const DispersionRelation& disp,
                  const std::vector<std::size_t>& modes) {
  config.validate();
  Trajectory traj;
  traj.initial = initial.repr == Representation::Site ? initial : inverse_transform(initial);
  traj.modes = modes;
  FieldState f = traj.initial;
  auto phase = linear_phase(f.lattice, disp, config.dt);

  auto record = [&](double t, const FieldState& site_f) {
    FieldState spec = forward_transform(site_f);
    traj.times.push_back(t);
    ConservationRecord rec;
    rec.t = t;
    rec.N = particle_number(site_f);
    rec.H = hamiltonian(site_f, params, disp);
    traj.conservation.push_back(rec);
    if (modes.empty()) {
      traj.spectral.push_back(std::move(spec));
    } else {
      std::vector<cplx> vals(modes.size());
      for (std::size_t m = 0; m < modes.size(); ++m) vals[m] = spec.values[modes[m]];
      traj.mode_records.push_back(std::move(vals));
    }
  };

  long long step_idx = 0;
  for (double t_rec : config.record_times) {
    long long target = static_cast<long long>(std::llround(t_rec / config.dt));
    while (step_idx < target) {
      kick_half(f, params.lambda, config.dt);
      linear_full(f, phase);
      kick_half(f, params.lambda, config.dt);
      ++step_idx;
    }
    check_finite(f);
    record(t_rec, f);
  }
  return traj;
}

ConservationReport conservation_report(const Trajectory& traj) {
  if (traj.conservation.empty()) throw ConfigError("conservation_report: empty trajectory");
  ConservationReport rep;
  rep.table = traj.conservation;
  double N0 = traj.conservation.front().N;
  double H0 = traj.conservation.front().H;
  for (const auto& r : traj.conservation) {
    if (N0 != 0.0) rep.max_rel_N_drift = std::max(rep.max_rel_N_drift, std::abs(r.N - N0) / std::abs(N0));
    if (H0 != 0.0) rep.max_rel_H_drift = std::max(rep.max_rel_H_drift, std::abs(r.H - H0) / std::abs(H0));
  }
  return rep;
}

void write_conservation_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for write: " + path);
  os << "t,N,H\n";
  os.precision(16);
  for (const auto& r : traj.conservation) os << r.t << "," << r.N << "," << r.H << "\n";
}

}  // namespace wavekin
