#pragma once

#include <map>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/dispersion.hpp"
#include "wavekin/gibbs.hpp"
#include "wavekin/lattice.hpp"

namespace wavekin {

// Strang split-step configuration. record_times must be nonnegative, strictly
// increasing, each an integer multiple of dt (within 1e-12).
struct IntegratorConfig {
  double dt = 0.01;
  std::vector<double> record_times;

  void validate() const;
};

struct ConservationRecord {
  double t = 0.0;
  double N = 0.0;
  double H = 0.0;
};

// Recorded trajectory: spectral snapshots at the record times plus the
// conservation log. N is asserted conserved by the scheme; H drift is recorded,
// not asserted.
struct Trajectory {
  FieldState initial;                 // site representation
  std::vector<double> times;
  std::vector<FieldState> spectral;   // full spectral snapshots (empty if mode subset used)
  std::vector<std::vector<cplx>> mode_records;  // per record time, values at `modes`
  std::vector<std::size_t> modes;     // linear mode indices recorded (empty = full snapshots)
  std::vector<ConservationRecord> conservation;
};

// One Strang step: half nonlinear kick, full linear spectral rotation, half kick.
// Both substeps conserve sum_x |psi|^2 exactly.
FieldState step(const FieldState& field, double dt, const GibbsParams& params,
                const DispersionRelation& disp);

// Iterate `step` and record snapshots/conservation at config.record_times.
// If `modes` is nonempty only those spectral components are stored per record.
Trajectory evolve(const FieldState& initial, const IntegratorConfig& config,
                  const GibbsParams& params, const DispersionRelation& disp,
                  const std::vector<std::size_t>& modes = {});

struct ConservationReport {
  double max_rel_N_drift = 0.0;
  double max_rel_H_drift = 0.0;
  std::vector<ConservationRecord> table;
};

ConservationReport conservation_report(const Trajectory& traj);

// CSV with columns t,N,H
void write_conservation_csv(const std::string& path, const Trajectory& traj);

}  // namespace wavekin
