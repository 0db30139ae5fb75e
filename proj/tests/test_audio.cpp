#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracle_helpers.hpp"
#include "pat/audio.hpp"
#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/rng.hpp"

using namespace pat;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const char* name) {
  return fs::temp_directory_path() / name;
}

Waveform sine(double freq, double amp, std::size_t n, int fs = 16000) {
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * oracle::kPi * freq * i / fs);
  return w;
}

}  // namespace

TEST_CASE("fft matches the direct DFT") {
  Rng rng(11);
  for (std::size_t n : {8u, 64u, 256u}) {
    auto x = oracle::random_vec(rng, n, -1.0, 1.0);
    auto got = fft_real(x);
    auto want = oracle::naive_dft(x);
    REQUIRE(got.size() == n);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(std::abs(got[k] - want[k]) < 1e-10);
  }
}

TEST_CASE("fft inverse recovers the signal") {
  Rng rng(12);
  auto x = oracle::random_vec(rng, 512, -1.0, 1.0);
  auto spec = fft_real(x);
  auto back = ifft_real(spec);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(back[i] - x[i]) < 1e-12);
}

TEST_CASE("unitary transform preserves energy (Parseval), 1000 cases") {
  Rng rng(13);
  for (int cases = 0; cases < 1000; ++cases) {
    const std::size_t n = std::size_t{1} << (3 + rng.integer(6));  // 8..256
    auto x = oracle::random_vec(rng, n, -1.0, 1.0);
    double et = 0.0;
    for (double v : x) et += v * v;
    auto spec = fft_real(x);
    double ef = 0.0;
    for (auto& c : spec) ef += std::norm(c);
    CHECK(oracle::rel_err(ef, et) < 1e-12);
  }
}

TEST_CASE("frame segmentation covers the signal and zero-pads the tail") {
  Waveform w = sine(440.0, 0.5, 1000);
  FrameConfig cfg{256, 256, Window::Rectangular};
  FrameSet f = segment(w, cfg);
  REQUIRE(f.num_frames() == 4);  // ceil(1000/256)
  CHECK(f.origin_offsets[3] == 768);
  // last frame holds samples 768..999 then zeros
  CHECK(f.frames(3, 0) == w.samples[768]);
  CHECK(f.frames(3, 231) == w.samples[999]);
  for (std::size_t i = 232; i < 256; ++i) CHECK(f.frames(3, i) == 0.0);
}

TEST_CASE("segment rejects bad frame configs") {
  Waveform w = sine(440.0, 0.5, 512);
  CHECK_THROWS_AS(segment(w, FrameConfig{0, 1}), ArgumentError);
  CHECK_THROWS_AS(segment(w, FrameConfig{300, 300}), ArgumentError);  // not a power of two
  CHECK_THROWS_AS(segment(w, FrameConfig{256, 0}), ArgumentError);
  CHECK_THROWS_AS(segment(w, FrameConfig{256, 512}), ArgumentError);  // hop > frame
}

TEST_CASE("spectrum of a bin-centered sine concentrates in one bin") {
  // 62.5 Hz grid at fs=16000, frame 256: bin k = f / 62.5
  Waveform w = sine(1000.0, 0.5, 256);
  Spectrum s = spectrum(segment(w, FrameConfig{256, 256, Window::Rectangular}));
  REQUIRE(s.num_frames == 1);
  const std::size_t kbin = 16;
  CHECK(s.bin_freq_hz(kbin) == doctest::Approx(1000.0));
  double peak = std::abs(s.bin(0, kbin));
  for (std::size_t k = 0; k < s.num_bins; ++k) {
    if (k == kbin) continue;
    CHECK(std::abs(s.bin(0, k)) < 1e-9 * peak + 1e-12);
  }
  // psd_db at the peak matches 10*log10(|X|^2)
  CHECK(s.psd_db(0, kbin) ==
        doctest::Approx(10.0 * std::log10(peak * peak + kPsdFloor)));
}

TEST_CASE("hann window tapers frame ends") {
  auto curve = window_curve(Window::Hann, 256);
  CHECK(curve[0] == doctest::Approx(0.0));
  CHECK(curve[128] == doctest::Approx(1.0).epsilon(1e-3));
  Waveform w = sine(440.0, 0.9, 256);
  FrameSet f = segment(w, FrameConfig{256, 256, Window::Hann});
  CHECK(f.frames(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("wav round-trip is lossless at int16 resolution, 1000 cases") {
  Rng rng(14);
  const fs::path p = temp_path("pat_roundtrip.wav");
  for (int cases = 0; cases < 1000; ++cases) {
    Waveform w;
    w.sample_rate_hz = 16000;
    const std::size_t n = 1 + rng.integer(64);
    w.samples.resize(n);
    for (double& s : w.samples) {
      // exact int16 grid values round-trip bit-identically
      const double q = static_cast<double>(static_cast<int>(rng.integer(65536)) - 32768);
      s = q / 32768.0;
    }
    save_wav(w, p);
    Waveform r = load_wav(p);
    REQUIRE(r.samples.size() == n);
    REQUIRE(r.sample_rate_hz == 16000);
    for (std::size_t i = 0; i < n; ++i) CHECK(r.samples[i] == w.samples[i]);
  }
  fs::remove(p);
}

TEST_CASE("wav quantization error stays under one int16 step") {
  Rng rng(15);
  Waveform w;
  w.samples = oracle::random_vec(rng, 500, -0.999, 0.999);
  const fs::path p = temp_path("pat_quant.wav");
  save_wav(w, p);
  Waveform r = load_wav(p);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  fs::remove(p);
}

TEST_CASE("save_wav clamps out-of-range samples") {
  Waveform w;
  w.samples = {1.5, -1.5, 1.0, -1.0};
  const fs::path p = temp_path("pat_clamp.wav");
  save_wav(w, p);
  Waveform r = load_wav(p);
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.samples[1] == -1.0);
  CHECK(r.samples[2] == doctest::Approx(32767.0 / 32768.0));  // +1.0 saturates
  CHECK(r.samples[3] == -1.0);
  fs::remove(p);
}

TEST_CASE("load_wav rejects missing and malformed files") {
  CHECK_THROWS_AS(load_wav(temp_path("pat_no_such_file.wav")), IoError);

  const fs::path p = temp_path("pat_bad.wav");
  std::ofstream(p) << "this is not a wav file at all";
  CHECK_THROWS_AS(load_wav(p), FormatError);

  // valid header cut short
  Waveform w = sine(440.0, 0.5, 100);
  save_wav(w, p);
  {
    std::ifstream in(p, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    bytes.resize(bytes.size() - 60);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_wav(p), FormatError);
  fs::remove(p);
}

TEST_CASE("snr_db matches the energy-ratio definition") {
  Waveform x = sine(440.0, 0.5, 4096);
  Waveform d = sine(880.0, 0.05, 4096);
  double ex = 0.0, ed = 0.0;
  for (double v : x.samples) ex += v * v;
  for (double v : d.samples) ed += v * v;
  CHECK(snr_db(x, d) == doctest::Approx(10.0 * std::log10(ex / ed)));

  Waveform zero = x;
  for (double& v : zero.samples) v = 0.0;
  CHECK(std::isinf(snr_db(x, zero)));
  CHECK(snr_db(x, zero) > 0);
}

TEST_CASE("spectrogram export writes a parseable frames x bins table") {
  Waveform w = sine(1000.0, 0.5, 1024);
  const fs::path p = temp_path("pat_spec.csv");
  export_spectrogram_csv(w, FrameConfig{256, 256, Window::Rectangular}, p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("62.5") != std::string::npos);  // first non-DC bin center
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
  fs::remove(p);
}
