#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "wavekin/common.hpp"

namespace wavekin {

// Periodic cubic lattice Lambda = {0,...,L-1}^d with dual Lambda* = {0,1/L,...,(L-1)/L}^d.
// Row-major layout: the dual component j/L lives at array index j, so the
// unnormalized forward transform coincides with the library FFT verbatim.
struct LatticeConfig {
  int d = 1;
  int L = 2;

  LatticeConfig() = default;
  LatticeConfig(int d_, int L_) : d(d_), L(L_) {
    if (d < 1) throw ConfigError("LatticeConfig: d must be positive");
    if (L < 2) throw ConfigError("LatticeConfig: L must be >= 2");
  }

  std::size_t volume() const {
    std::size_t v = 1;
    for (int i = 0; i < d; ++i) v *= static_cast<std::size_t>(L);
    return v;
  }

  // site/mode <-> linear index, components mod L
  std::size_t index(const std::vector<int>& x) const;
  std::vector<int> site(std::size_t idx) const;
  // dual point k = j/L for linear mode index
  std::vector<double> dual_point(std::size_t idx) const;

  bool operator==(const LatticeConfig& o) const { return d == o.d && L == o.L; }
};

enum class Representation : std::uint8_t { Site = 0, Spectral = 1 };

// Complex field on Lambda (site) or Lambda* (spectral), value semantics.
struct FieldState {
  LatticeConfig lattice;
  Representation repr = Representation::Site;
  std::vector<cplx> values;

  FieldState() = default;
  FieldState(LatticeConfig lat, Representation r)
      : lattice(lat), repr(r), values(lat.volume(), cplx{0.0, 0.0}) {}
};

// hat f(k) = sum_x f(x) e^{-i 2 pi k x}; unnormalized forward convention.
FieldState forward_transform(const FieldState& f);

// tilde g(x) = (1/|Lambda|) sum_k g(k) e^{+i 2 pi k x}.
FieldState inverse_transform(const FieldState& g);

// delta_Lambda(k) = |Lambda| iff every component of k is an integer, else 0.
double delta_lattice(const LatticeConfig& lat, const std::vector<double>& k);

// (1/|Lambda|) sum_{k in Lambda*} F(k)
double mode_average(const LatticeConfig& lat, const std::function<double(const std::vector<double>&)>& F);
cplx mode_average_c(const LatticeConfig& lat, const std::function<cplx(const std::vector<double>&)>& F);

// f(x - y) with periodic wrap; used by the translation-covariance tests.
FieldState shift_field(const FieldState& f, const std::vector<int>& y);

// sum_x |f(x)|^2 (site) or (1/|Lambda|) sum_k |f(k)|^2 (spectral)
double norm2_sq(const FieldState& f);

// Binary snapshot: magic "WKIN1", u32 d, u32 L, u8 representation, then
// |Lambda| little-endian (re,im) f64 pairs in row-major order.
void write_snapshot(std::ostream& os, const FieldState& f);
FieldState read_snapshot(std::istream& is);
void save_snapshot(const std::string& path, const FieldState& f);
FieldState load_snapshot(const std::string& path);

}  // namespace wavekin
