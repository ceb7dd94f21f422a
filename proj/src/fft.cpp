#include "wavekin/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace wavekin {

namespace {

std::mutex g_plan_mutex;

struct PlanKey {
  int d;
  int M;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (d != o.d) return d < o.d;
    if (M != o.M) return M < o.M;
    return sign < o.sign;
  }
};

// One cached in-place plan per (rank, side, sign); executed via the new-array
// interface so concurrent transforms on distinct buffers are safe.
fftw_plan get_plan(const PlanKey& key, fftw_complex* buf) {
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<int> dims(static_cast<std::size_t>(key.d), key.M);
  // FFTW_ESTIMATE does not touch the buffer, so planning on the caller's data is fine.
  fftw_plan p = fftw_plan_dft(key.d, dims.data(), buf, buf,
                              key.sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, p);
  return p;
}

}  // namespace

void dft_pow(std::vector<cplx>& data, int d, int M, int sign) {
  if (d < 1 || M < 1) throw ConfigError("dft_pow: bad dimensions");
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(M);
  if (data.size() != n) throw ConfigError("dft_pow: buffer size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan p = get_plan({d, M, sign}, buf);
  fftw_execute_dft(p, buf, buf);
}

void dft_1d(std::vector<cplx>& data, int sign) {
  dft_pow(data, 1, static_cast<int>(data.size()), sign);
}

}  // namespace wavekin
