#include "wavekin/lattice.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "wavekin/fft.hpp"

namespace wavekin {

std::size_t LatticeConfig::index(const std::vector<int>& x) const {
  if (static_cast<int>(x.size()) != d) throw ConfigError("LatticeConfig::index: wrong arity");
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i) {
    int c = x[static_cast<std::size_t>(i)] % L;
    if (c < 0) c += L;
    idx = idx * static_cast<std::size_t>(L) + static_cast<std::size_t>(c);
  }
  return idx;
}

std::vector<int> LatticeConfig::site(std::size_t idx) const {
  std::vector<int> x(static_cast<std::size_t>(d));
  for (int i = d - 1; i >= 0; --i) {
    x[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(L));
    idx /= static_cast<std::size_t>(L);
  }
  return x;
}

std::vector<double> LatticeConfig::dual_point(std::size_t idx) const {
  auto j = site(idx);
  std::vector<double> k(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) k[static_cast<std::size_t>(i)] = static_cast<double>(j[static_cast<std::size_t>(i)]) / L;
  return k;
}

FieldState forward_transform(const FieldState& f) {
  if (f.repr != Representation::Site) throw ConfigError("forward_transform: expected site representation");
  FieldState out = f;
  dft_pow(out.values, f.lattice.d, f.lattice.L, -1);
  out.repr = Representation::Spectral;
  return out;
}

FieldState inverse_transform(const FieldState& g) {
  if (g.repr != Representation::Spectral) throw ConfigError("inverse_transform: expected spectral representation");
  FieldState out = g;
  dft_pow(out.values, g.lattice.d, g.lattice.L, +1);
  double inv = 1.0 / static_cast<double>(g.lattice.volume());
  for (auto& v : out.values) v *= inv;
  out.repr = Representation::Site;
  return out;
}

double delta_lattice(const LatticeConfig& lat, const std::vector<double>& k) {
  if (static_cast<int>(k.size()) != lat.d) throw ConfigError("delta_lattice: wrong arity");
  for (double c : k) {
    double frac = c - std::round(c);
    if (std::abs(frac) > 1e-9) return 0.0;
  }
  return static_cast<double>(lat.volume());
}

double mode_average(const LatticeConfig& lat, const std::function<double(const std::vector<double>&)>& F) {
  double acc = 0.0;
  std::size_t n = lat.volume();
  for (std::size_t i = 0; i < n; ++i) acc += F(lat.dual_point(i));
  return acc / static_cast<double>(n);
}

cplx mode_average_c(const LatticeConfig& lat, const std::function<cplx(const std::vector<double>&)>& F) {
  cplx acc{0.0, 0.0};
  std::size_t n = lat.volume();
  for (std::size_t i = 0; i < n; ++i) acc += F(lat.dual_point(i));
  return acc / static_cast<double>(n);
}

FieldState shift_field(const FieldState& f, const std::vector<int>& y) {
  if (f.repr != Representation::Site) throw ConfigError("shift_field: expected site representation");
  FieldState out(f.lattice, Representation::Site);
  std::size_t n = f.lattice.volume();
  for (std::size_t i = 0; i < n; ++i) {
    auto x = f.lattice.site(i);
    for (int c = 0; c < f.lattice.d; ++c) x[static_cast<std::size_t>(c)] -= y[static_cast<std::size_t>(c)];
    out.values[i] = f.values[f.lattice.index(x)];
  }
  return out;
}

double norm2_sq(const FieldState& f) {
  double acc = 0.0;
  for (const auto& v : f.values) acc += std::norm(v);
  if (f.repr == Representation::Spectral) acc /= static_cast<double>(f.lattice.volume());
  return acc;
}

namespace {
constexpr char kMagic[5] = {'W', 'K', 'I', 'N', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("snapshot: truncated stream");
  return v;
}
}  // namespace

void write_snapshot(std::ostream& os, const FieldState& f) {
  os.write(kMagic, 5);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.lattice.d));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.lattice.L));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(f.repr));
  for (const auto& v : f.values) {
    put<double>(os, v.real());
    put<double>(os, v.imag());
  }
}

FieldState read_snapshot(std::istream& is) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, kMagic, 5) != 0) throw ConfigError("snapshot: bad magic");
  auto d = get<std::uint32_t>(is);
  auto L = get<std::uint32_t>(is);
  auto r = get<std::uint8_t>(is);
  if (r > 1) throw ConfigError("snapshot: bad representation flag");
  FieldState f(LatticeConfig(static_cast<int>(d), static_cast<int>(L)),
               static_cast<Representation>(r));
  for (auto& v : f.values) {
    double re = get<double>(is);
    double im = get<double>(is);
    v = cplx{re, im};
  }
  return f;
}

void save_snapshot(const std::string& path, const FieldState& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for write: " + path);
  write_snapshot(os, f);
}

FieldState load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for read: " + path);
  return read_snapshot(is);
}

}  // namespace wavekin
