#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pat {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place radix-2 transform with unitary scaling: both directions multiply
// by 1/sqrt(n), so a forward/inverse pair is the identity and energy is
// preserved bin-for-sample. n must be a power of two.
void fft(std::span<std::complex<double>> a, bool inverse);

// Full n-bin spectrum of a real signal.
std::vector<std::complex<double>> fft_real(std::span<const double> x);

// Inverse transform, returning the real part. The caller is responsible for
// feeding a conjugate-symmetric spectrum when a real result is expected.
std::vector<double> ifft_real(std::span<const std::complex<double>> spec);

}  // namespace pat
