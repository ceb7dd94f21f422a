#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/dispersion.hpp"
#include "wavekin/gibbs.hpp"
#include "wavekin/lattice.hpp"

namespace wavekin {

// Quadrature setup for the kinetic-rate and collision-operator integrals.
// eps_ladder regularizes the half-line time integral by e^{-eps t};
// beta_ladder is the Gaussian energy-delta width ladder. Both strictly
// decreasing, length >= 3 so the extrapolation has something to work with.
struct QuadratureConfig {
  int M = 32;
  double T_max = 80.0;
  double dt = 0.05;
  double s_max = 60.0;
  std::vector<double> eps_ladder = {0.3, 0.225, 0.16875, 0.1265625, 0.09492188, 0.07119141, 0.05339355};
  std::vector<double> beta_ladder = {0.3, 0.2, 0.15, 0.1};
  double flag_radius = 0.1778;  // lambda^(3/4) at lambda = 0.1
  double nonconv_tol = 0.02;    // gate on the two smallest ladder rungs

  void validate() const;
};

enum : std::uint8_t {
  kFlagNearSingular = 1,
  kFlagNonConvergent = 2,
};

// Decay rate Gamma = Gamma1 + i Gamma2 on the M^d dual grid.
struct KineticRate {
  LatticeConfig grid;   // d, M
  std::vector<double> gamma1, gamma2;
  std::vector<double> err1, err2;
  std::vector<std::uint8_t> flags;
  int M = 0;
  double T_max = 0.0;
  std::vector<double> ladder;

  // columns: k components, Gamma1, Gamma2, err1, err2, flags
  void write_csv(const std::string& path) const;
  std::size_t index_of(const std::vector<double>& k) const;  // requires k on grid
};

// Wave-action spectral density h(k) >= 0 on the M^d grid.
struct HomogeneousState {
  LatticeConfig grid;
  std::vector<double> h;
  double time = 0.0;
};

// Gamma(k1) = -2 int_0^inf dt e^{i t w(k1)} I(k1,t), e^{-eps t} regulated and
// extrapolated over the ladder; I evaluated per time sample by FFT products of
// weighted propagators. Full-grid evaluation.
KineticRate gamma_time_integral_full(const DispersionRelation& disp, const GibbsParams& params,
                                     const QuadratureConfig& config);

// Single k (must be on the M^d grid); throws NonConvergence when the two
// smallest-eps values differ by more than nonconv_tol.
cplx gamma_time_integral(const std::vector<double>& k1, const DispersionRelation& disp,
                         const GibbsParams& params, const QuadratureConfig& config);

// Gamma1 via the positive-measure form: Gaussian energy delta of width beta,
// extrapolated beta -> 0. Full-grid and single-k variants.
std::vector<double> gamma1_delta_full(const DispersionRelation& disp, const GibbsParams& params,
                                      const QuadratureConfig& config,
                                      std::vector<double>* err_out = nullptr,
                                      std::vector<std::uint8_t>* flags_out = nullptr);
double gamma1_delta_measure(const std::vector<double>& k1, const DispersionRelation& disp,
                            const GibbsParams& params, const QuadratureConfig& config);

// |I(k1,t)|, the inner momentum integral of the Gamma integrand (decay-trend tests).
double gamma_integrand_magnitude(const std::vector<double>& k1, double t,
                                 const DispersionRelation& disp, const GibbsParams& params,
                                 const QuadratureConfig& config);

// omega_ren(k) = omega(k) + lambda R0 + lambda^2 Gamma2(k)
double omega_ren(double omega_k, double lambda, double R0, double gamma2_k);

// 4-wave collision operator on the grid, Gaussian-regularized and beta-extrapolated.
// loss_magnitude_out (optional) receives the magnitude of the loss part, for
// stationarity tests measured relative to it.
std::vector<double> collision_operator(const HomogeneousState& h, const DispersionRelation& disp,
                                       const QuadratureConfig& config,
                                       std::vector<double>* loss_magnitude_out = nullptr);

// RK4 for dh/dt = C(h); steps rejected and halved when positivity fails.
HomogeneousState solve_kinetic(const HomogeneousState& h0, double t_end,
                               const DispersionRelation& disp, const QuadratureConfig& config,
                               double dt0 = 0.0);

// W(k) e^{-Gamma1 |t| - i t Gamma2}
cplx predicted_covariance(double W_k, double gamma1_k, double gamma2_k, double t);

// Internal grid machinery shared with the leading-graph evaluator: weighted
// factor transforms on the M^d torus grid.
class ConvolutionGrid {
 public:
  ConvolutionGrid(const DispersionRelation& disp, const GibbsParams& params, int M);

  int M() const { return M_; }
  int dim() const { return d_; }
  std::size_t size() const { return omega_.size(); }
  const std::vector<double>& omega() const { return omega_; }
  const std::vector<double>& W() const { return W_; }
  const LatticeConfig& lattice() const { return lat_; }

  // x-space transform tilde F(x) = (1/M^d) sum_k F(k) e^{+i2pi kx}
  std::vector<cplx> to_x(std::vector<cplx> f) const;
  // k-space sum G(k) = sum_x g(x) e^{-i 2 pi k x}  (sign=-1) or e^{+...} (sign=+1)
  std::vector<cplx> to_k(std::vector<cplx> g, int sign) const;
  // index reversal g(x) -> g(-x)
  std::vector<cplx> reverse(const std::vector<cplx>& g) const;

 private:
  LatticeConfig lat_;
  int d_, M_;
  std::vector<double> omega_, W_;
};

}  // namespace wavekin
