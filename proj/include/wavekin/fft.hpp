#pragma once

#include <vector>

#include "wavekin/common.hpp"

namespace wavekin {

// Unnormalized complex DFT on a d-dimensional cube of side M (row-major layout),
// backed by FFTW. sign = -1 is the forward convention sum_x f(x) e^{-i2pi kx/M},
// sign = +1 the unnormalized inverse. In-place on `data`.
//
// Thread safety: plan creation is serialized internally; execution on distinct
// buffers is safe to run concurrently.
void dft_pow(std::vector<cplx>& data, int d, int M, int sign);

// 1-d unnormalized DFT of length M (used by the per-axis factorized propagators).
void dft_1d(std::vector<cplx>& data, int sign);

}  // namespace wavekin
