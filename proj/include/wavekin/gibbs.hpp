#pragma once

#include <random>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/dispersion.hpp"
#include "wavekin/lattice.hpp"

namespace wavekin {

// Gibbs measure parameters; density ~ exp(-beta (H - mu N)). Requires
// beta (omega(k) - mu) > 0 on all of Lambda*.
struct GibbsParams {
  double beta = 1.0;
  double mu = -1.0;
  double lambda = 0.0;

  GibbsParams() = default;
  GibbsParams(double beta_, double mu_, double lambda_) : beta(beta_), mu(mu_), lambda(lambda_) {
    if (beta <= 0.0) throw ConfigError("GibbsParams: beta must be > 0");
    if (lambda < 0.0) throw ConfigError("GibbsParams: lambda must be >= 0");
  }

  // checked against inf_k omega
  void validate(const DispersionRelation& disp) const {
    if (!(mu < disp.omega_min())) throw ConfigError("GibbsParams: mu must be < inf_k omega");
  }

  double W(double omega_k) const { return 1.0 / (beta * (omega_k - mu)); }
};

// H_Lambda = int dk omega |psi^|^2 + (lambda/2) sum_x |psi|^4, spectral + site loop.
double hamiltonian(const FieldState& field, const GibbsParams& params,
                   const DispersionRelation& disp);

// sum_x |psi(x)|^2
double particle_number(const FieldState& field);

// Exact lambda=0 sampler: psi^(k) circularly-symmetric Gaussian with
// E|psi^(k)|^2 = |Lambda| W(k); returns the site-space field.
FieldState sample_gaussian(const GibbsParams& params, const LatticeConfig& lat,
                           const DispersionRelation& disp, std::mt19937_64& rng);

// Site-wise random-walk Metropolis for the interacting measure. Proposals are
// Gaussian in (Re psi(x), Im psi(x)); scales adapt to ~0.4 acceptance during
// burn-in. Single-site dH is O(stencil) via the cached convolution field.
class MetropolisChain {
 public:
  MetropolisChain(const GibbsParams& params, const LatticeConfig& lat,
                  const DispersionRelation& disp, std::mt19937_64 rng);

  void sweep();
  void burn_in(int sweeps);                  // adapts proposal scales
  const FieldState& advance(int thin);       // `thin` full sweeps, then current state
  const FieldState& state() const { return field_; }

  double acceptance_rate() const;            // since last reset
  void reset_acceptance();
  const std::vector<double>& site_scales() const { return scale_; }
  long long sweeps_done() const { return sweeps_; }

  // integrated autocorrelation time of H from a short probe run
  double autocorrelation_time_H(int probe_sweeps);

 private:
  double site_delta_action(std::size_t i, cplx prop) const;
  void apply_update(std::size_t i, cplx prop);

  GibbsParams params_;
  LatticeConfig lat_;
  const DispersionRelation* disp_;
  std::mt19937_64 rng_;
  FieldState field_;
  std::vector<cplx> conv_;                   // (alpha_Lambda * psi)(x)
  std::vector<std::pair<std::size_t, double>> stencil_;  // displacement index, alpha value
  double alpha0_ = 0.0;
  std::vector<double> scale_;
  std::vector<long long> acc_, tot_;
  long long sweeps_ = 0;
};

// Accumulates per-mode |psi^|^2, R0 data and fourth-moment contractions, with
// batch-mean standard errors. Supports associative merge of partial accumulators.
class EnsembleStats {
 public:
  EnsembleStats(const LatticeConfig& lat, int batch_size = 16);

  void add_sample(const FieldState& site_field);
  void merge(const EnsembleStats& other);

  long long count() const { return count_; }

  // Ŵ(k) = mean |psi^(k)|^2 / |Lambda| with batch-mean standard errors
  std::vector<double> W_estimate() const;
  std::vector<double> W_stderr() const;

  // R0 = 2 E|psi(0)|^2, translation averaged
  double R0() const;
  double R0_stderr() const;

  // E[psi^(k)^2] / |Lambda| (should vanish by gauge symmetry)
  std::vector<cplx> pair_moment() const;
  std::vector<double> pair_moment_stderr() const;

  const LatticeConfig& lattice() const { return lat_; }

 private:
  void require_count() const {
    if (count_ == 0) throw GuardViolation("EnsembleStats: no samples accumulated");
  }
  LatticeConfig lat_;
  int batch_size_;
  long long count_ = 0;
  std::vector<double> sum_w_;       // per mode, |psi^|^2 / |Lambda|
  std::vector<cplx> sum_pair_;      // per mode, psi^(k)^2 / |Lambda|
  double sum_r0_ = 0.0;
  // batch bookkeeping for scalar R0 and scalar ||W_hat - W||_inf style errors
  std::vector<double> batch_r0_;
  std::vector<std::vector<double>> batch_w_;
  std::vector<std::vector<cplx>> batch_pair_;
  std::vector<double> cur_w_;
  std::vector<cplx> cur_pair_;
  double cur_r0_ = 0.0;
  int cur_n_ = 0;
  void close_batch();
};

struct ValueWithError {
  double value = 0.0;
  double stderror = 0.0;
};

struct ComplexWithError {
  cplx value{0.0, 0.0};
  double stderror = 0.0;
};

// R0 = 2 E|psi(0)|^2 with standard error (translation averaged).
ValueWithError estimate_R0(const EnsembleStats& ensemble);

// Joint 4th cumulant of (psi(x+o_i, sigma_i))_i, translation averaged over x.
// Returns exact 0 when sum sigma != 0 (gauge symmetry), without estimation.
// Moment/partition inversion keeps only gauge-allowed pair blocks.
class Cumulant4Accumulator {
 public:
  Cumulant4Accumulator(const LatticeConfig& lat, std::vector<std::vector<int>> offsets,
                       std::vector<int> parities, int batch_size = 16);
  void add_sample(const FieldState& site_field);
  ComplexWithError result() const;
  bool gauge_trivial() const { return gauge_trivial_; }

 private:
  LatticeConfig lat_;
  std::vector<std::vector<int>> offsets_;
  std::vector<int> parities_;
  bool gauge_trivial_ = false;
  int batch_size_;
  struct Moments {
    cplx m4{0, 0};
    cplx m12{0, 0}, m34{0, 0};
    cplx m13{0, 0}, m24{0, 0};
    cplx m14{0, 0}, m23{0, 0};
    long long n = 0;
  };
  static cplx kappa(const Moments& m, const std::array<bool, 3>& allowed);
  std::array<bool, 3> allowed_{};  // which pairings are gauge-allowed
  Moments total_;
  Moments cur_;
  std::vector<cplx> batch_vals_;
  void close_batch();
};

}  // namespace wavekin
