#include "pat/fft.hpp"

#include <cmath>
#include <mutex>
#include <unordered_map>

#include "pat/errors.hpp"

namespace pat {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Twiddle factors e^{-2*pi*i*k/n}, k < n/2, cached per size. Tables are
// immutable once built, so readers can hold plain pointers after the lock.
const std::vector<std::complex<double>>* twiddles(std::size_t n) {
  static std::mutex mu;
  static std::unordered_map<std::size_t, std::vector<std::complex<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<std::complex<double>> t(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      t[k] = {std::cos(ang), std::sin(ang)};
    }
    it = cache.emplace(n, std::move(t)).first;
  }
  return &it->second;
}

}  // namespace

void fft(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw ArgumentError("fft: length must be a power of two");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const auto& tw = *twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> w = tw[k * stride];
        if (inverse) w = std::conj(w);
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }

  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& z : a) z *= s;
}

std::vector<std::complex<double>> fft_real(std::span<const double> x) {
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
  fft(a, /*inverse=*/false);
  return a;
}

std::vector<double> ifft_real(std::span<const std::complex<double>> spec) {
  std::vector<std::complex<double>> a(spec.begin(), spec.end());
  fft(a, /*inverse=*/true);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real();
  return out;
}

}  // namespace pat
