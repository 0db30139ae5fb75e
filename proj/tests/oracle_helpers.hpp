#pragma once

// Independent reference implementations the tests check the library against.
// Everything here is written for clarity over speed: quadratic DFTs, exhaustive
// path enumeration, exponential-time edit distance. Keep sizes small.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pat/common.hpp"
#include "pat/rng.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Unitary DFT by direct summation, matching the library's fft scaling.
inline std::vector<std::complex<double>> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s * acc;
  }
  return out;
}

// P(labels | logits) by summing the probability of every frame-label path
// whose blank-collapse equals `labels`. K^T paths; keep T and K tiny.
inline double ctc_path_enumeration(const pat::Mat& logits, std::span<const int> labels) {
  const std::size_t T = logits.rows, K = logits.cols;
  pat::Mat prob(T, K);
  for (std::size_t t = 0; t < T; ++t) {
    double mx = logits(t, 0);
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, logits(t, k));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits(t, k) - mx);
    for (std::size_t k = 0; k < K; ++k) prob(t, k) = std::exp(logits(t, k) - mx) / z;
  }

  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    // collapse: drop repeats, then blanks
    std::vector<int> col;
    int prev = -1;
    for (int s : path) {
      if (s != prev && s != 0) col.push_back(s);
      prev = s;
    }
    if (col.size() == labels.size() &&
        std::equal(col.begin(), col.end(), labels.begin())) {
      double p = 1.0;
      for (std::size_t t = 0; t < T; ++t) p *= prob(t, path[t]);
      total += p;
    }
    // odometer increment over K symbols per frame
    std::size_t pos = 0;
    while (pos < T && ++path[pos] == static_cast<int>(K)) path[pos++] = 0;
    if (pos == T) break;
  }
  return total;
}

// Plain recursive Levenshtein distance (unit costs). Exponential; fine for
// strings up to length ~5.
inline std::size_t naive_edit_distance(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t same = a[0] == b[0] ? 0 : 1;
  const std::size_t sub = naive_edit_distance(a.substr(1), b.substr(1)) + same;
  const std::size_t del = naive_edit_distance(a.substr(1), b) + 1;
  const std::size_t ins = naive_edit_distance(a, b.substr(1)) + 1;
  return std::min(sub, std::min(del, ins));
}

// Same recursion as naive_edit_distance with a cache, for exhaustive sweeps
// where the plain version would take hours.
inline std::size_t memo_edit_distance(std::string_view a, std::string_view b) {
  const std::size_t w = b.size() + 1;
  std::vector<std::size_t> memo((a.size() + 1) * w, static_cast<std::size_t>(-1));
  std::function<std::size_t(std::size_t, std::size_t)> go =
      [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    std::size_t& m = memo[i * w + j];
    if (m != static_cast<std::size_t>(-1)) return m;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    return m = best;
  };
  return go(0, 0);
}

// Central finite difference of a scalar function along coordinate i.
inline double central_diff(const std::function<double(std::span<const double>)>& f,
                           std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / denom;
}

// Relative error with an absolute floor, for quantities that pass through 0.
inline double mixed_err(double got, double want, double floor) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline std::vector<double> random_vec(pat::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace oracle
