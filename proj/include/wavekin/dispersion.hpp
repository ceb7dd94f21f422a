#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/lattice.hpp"

namespace wavekin {

// omega(k) on the d-torus. Nearest-neighbor kind: omega(k) = c - sum_nu cos(2 pi k^nu).
// Tabulated kind: values on a uniform M^d grid, optional multilinear interpolation.
class DispersionRelation {
 public:
  enum class Kind { NearestNeighbor, Tabulated };

  static DispersionRelation nearest_neighbor(int d, double c);
  static DispersionRelation tabulated(int d, int M, std::vector<double> grid_values,
                                      bool interpolate = false);

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  double offset() const { return c_; }

  double omega(const std::vector<double>& k) const;
  double omega_min() const;
  double omega_max() const;

  // omega sampled on the uniform M^d grid (row-major, component j/M at index j).
  std::vector<double> omega_grid(int M) const;

 private:
  Kind kind_ = Kind::NearestNeighbor;
  int d_ = 1;
  double c_ = 0.0;
  int M_ = 0;
  bool interpolate_ = false;
  std::vector<double> tab_;
};

// Free propagator p_t(x) = int_{T^d} dk e^{i 2 pi x k} e^{-i t omega(k)} on an M^d
// x-block via torus quadrature (one FFT); x components in [-M/2, M/2).
class PropagatorGrid {
 public:
  PropagatorGrid(const DispersionRelation& disp, int M);

  // whole block; linear index row-major over x mod M
  std::vector<cplx> block(double t) const;
  // single x; signals grid aliasing when |x|_inf >= M/2
  cplx at(double t, const std::vector<int>& x) const;

  // ||p_t||_3^3 = sum_x |p_t(x)|^3. For the nearest-neighbor kind this factorizes
  // across dimensions into 1-d sums.
  double l3_norm_cubed(double t) const;

  int grid() const { return M_; }

 private:
  std::vector<cplx> axis_block(double t) const;  // NN: 1-d factor
  const DispersionRelation* disp_;
  int M_;
  std::vector<double> omega_g_;
};

// K(x; t0,t1,t2,u1,u2) = int dk e^{i2pi x k} e^{-i(t0 w(k)+t1 w(k+u1)+t2 w(k+u2))}.
// For the NN kind the phase reduces per axis to R^nu cos(2 pi k + phi^nu) with
// R^nu = |t0 + t1 e^{i q1} + t2 e^{i q2}|, q_j = 2 pi u_j^nu.
class KFunction {
 public:
  KFunction(const DispersionRelation& disp, int M);
  cplx at(const std::vector<int>& x, double t0, double t1, double t2,
          const std::vector<double>& u1, const std::vector<double>& u2) const;
  double l3_norm(double t0, double t1, double t2, const std::vector<double>& u1,
                 const std::vector<double>& u2) const;

 private:
  const DispersionRelation* disp_;
  int M_;
};

// M^sing for the NN dispersion: all but one component of k in {0, 1/2}.
struct SingularManifoldNN {
  int d = 1;
  explicit SingularManifoldNN(int d_) : d(d_) {}
  // closed form sqrt(sum_nu delta_nu^2 - max_nu delta_nu^2),
  // delta_nu = torus distance of k^nu to {0, 1/2}
  double distance(const std::vector<double>& k) const;
};

// C^inf even step: 1 on |x|<=1/2, 0 on |x|>=1, monotone in between;
// phi(x) = h(2-2|x|) / (h(2-2|x|) + h(2|x|-1)), h(s) = e^{-1/s} (s>0).
double step_profile(double x);

// Smooth momentum cutoffs of width lambda^b around M^sing, b = 3/4.
class CutoffFamily {
 public:
  CutoffFamily(int d, double lambda, double eps0 = 0.1);

  double b() const { return 0.75; }
  double lambda() const { return lambda_; }
  double lambda0_prime() const { return lam0p_; }

  // F1 = prod_lines (1 - phi(d(k, M_j)/lambda^b)); F0 = 1 - F1
  double F1(const std::vector<double>& k) const;
  double F0(const std::vector<double>& k) const { return 1.0 - F1(k); }

  // Phi1(k1,k2,k3) = F1(k1+k2) F1(k2+k3) F1(k3+k1); returns (Phi0, Phi1)
  std::pair<double, double> Phi(const std::vector<double>& k1, const std::vector<double>& k2,
                                const std::vector<double>& k3) const;

 private:
  double line_distance(const std::vector<double>& k, int free_axis, unsigned corner) const;
  int d_;
  double lambda_;
  double width_;  // lambda^b
  double lam0p_;
};

// Least-squares log-log decay fit report (DR2) and interference check report (DR3).
struct DecayFitReport {
  double exponent = 0.0;  // fitted decay power p in ||p_t||_3^3 ~ C t^{-p}
  double constant = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int M = 0;
  std::vector<std::pair<double, double>> samples;  // (t, ||p_t||_3^3)
  std::string to_json() const;
};

struct InterferenceReport {
  double fitted_constant = 0.0;  // C in |I(t,k0)| <= C <t>^-1 / d(k0, M^sing)
  double worst_ratio = 0.0;      // max over samples of |I| * d * <t> / C
  int n_samples = 0;
  int n_skipped = 0;  // k0 on M^sing (bound vacuous)
  std::vector<std::array<double, 3>> samples;  // (t, d(k0), |I|)
  std::string to_json() const;
};

// DR2: fit the decay exponent of ||p_t||_3^3 over t_grid (t >= 5 enters the fit).
DecayFitReport verify_dr2(const DispersionRelation& disp, const std::vector<double>& t_grid, int M);

// DR3: evaluate |int dk e^{-it(w(k)+sigma w(k-k0))}| over (t, k0) samples and fit C.
InterferenceReport verify_dr3(const DispersionRelation& disp, const std::vector<double>& t_grid,
                              const std::vector<std::vector<double>>& k0_samples, int M);

}  // namespace wavekin
