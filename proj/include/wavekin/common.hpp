#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wavekin {

using cplx = std::complex<double>;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Thrown on malformed configuration or bad arguments (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a ladder extrapolation or iteration fails to converge (CLI exit code 2).
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a hard size/validity guard is violated (CLI exit code 3).
struct GuardViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Number of worker threads used by parallel_for; settable from the CLI.
int worker_threads();
void set_worker_threads(int n);

// Static chunking over [0, n); deterministic independent of thread count as long
// as the body writes to disjoint slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_body);

}  // namespace wavekin
