#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "oracle_helpers.hpp"
#include "pat/audio.hpp"
#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/psycho.hpp"
#include "pat/rng.hpp"

using namespace pat;
using namespace pat::psy;

namespace {

Waveform tone_mix(std::size_t n, std::initializer_list<std::pair<double, double>> tones,
                  int fs = 16000) {
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.assign(n, 0.0);
  for (auto [freq, amp] : tones)
    for (std::size_t i = 0; i < n; ++i)
      w.samples[i] += amp * std::sin(2.0 * oracle::kPi * freq * i / fs);
  return w;
}

}  // namespace

TEST_CASE("bark scale is monotone over the audible range") {
  double prev = bark(20.0);
  for (double f = 30.0; f <= 20000.0; f *= 1.1) {
    const double b = bark(f);
    CHECK(b > prev);
    prev = b;
  }
  CHECK(bark(1000.0) == doctest::Approx(8.511).epsilon(0.01));
}

TEST_CASE("threshold in quiet has the textbook shape") {
  CHECK(absolute_threshold_db(1000.0) == doctest::Approx(3.369).epsilon(1e-3));
  // sensitivity dip: quieter near 3.3 kHz than at 1 kHz
  CHECK(absolute_threshold_db(3300.0) < absolute_threshold_db(1000.0));
  // steep rise toward both ends
  CHECK(absolute_threshold_db(20.0) > 70.0);
  CHECK(absolute_threshold_db(18000.0) > absolute_threshold_db(10000.0));
  CHECK_THROWS_AS(absolute_threshold_db(10.0), ArgumentError);
  CHECK_THROWS_AS(absolute_threshold_db(21000.0), ArgumentError);
}

TEST_CASE("spl normalization pins the peak to the reference level") {
  Waveform w = tone_mix(512, {{1000.0, 0.5}, {3000.0, 0.05}});
  Spectrum s = spectrum(segment(w, FrameConfig{512, 512, Window::Rectangular}));
  SplFrame f = spl_normalize(s.psd_db.row(0));
  REQUIRE(!f.silent());
  double mx = f.levels_db_spl[0];
  for (double v : f.levels_db_spl) mx = std::max(mx, v);
  CHECK(mx == doctest::Approx(kSplReference));
  // relative structure is preserved
  const std::size_t k1 = 1000 / (16000 / 512), k3 = 3000 / (16000 / 512);
  CHECK(f.levels_db_spl[k1] - f.levels_db_spl[k3] ==
        doctest::Approx(s.psd_db(0, k1) - s.psd_db(0, k3)));
}

TEST_CASE("silent frames are flagged and never normalized") {
  Waveform w;
  w.samples.assign(512, 0.0);
  Spectrum s = spectrum(segment(w, FrameConfig{512, 512, Window::Rectangular}));
  SplFrame f = spl_normalize(s.psd_db.row(0));
  CHECK(f.silent());
}

TEST_CASE("a pure tone yields one tonal masker spanning three bins") {
  Waveform w = tone_mix(512, {{1000.0, 0.5}});
  Spectrum s = spectrum(segment(w, FrameConfig{512, 512, Window::Rectangular}));
  SplFrame f = spl_normalize(s.psd_db.row(0));
  MaskerSet m = find_maskers(f, 512, 16000);
  REQUIRE(m.tonal.size() == 1);
  CHECK(m.tonal[0].bin == 32);  // 1000 / 31.25
  CHECK(m.tonal[0].tonal);
  // level is the power sum of the peak and both neighbors; with a
  // bin-centered tone the neighbors are at the floor, so the sum sits at the
  // normalized peak level
  CHECK(m.tonal[0].level_db == doctest::Approx(kSplReference).epsilon(1e-6));
}

TEST_CASE("non-tonal maskers collect residual band energy") {
  Rng rng(21);
  Waveform w;
  w.sample_rate_hz = 16000;
  w.samples.resize(512);
  for (double& v : w.samples) v = 0.2 * rng.gaussian();
  Spectrum s = spectrum(segment(w, FrameConfig{512, 512, Window::Rectangular}));
  SplFrame f = spl_normalize(s.psd_db.row(0));
  MaskerSet m = find_maskers(f, 512, 16000);
  CHECK(m.nontonal.size() > 5);  // broadband noise fills many critical bands
  for (const auto& k : m.nontonal) CHECK(!k.tonal);
}

TEST_CASE("decimation drops sub-audible maskers and crowded neighbors") {
  MaskerSet m;
  m.tonal.push_back({32, 1000.0, 60.0, true});
  m.tonal.push_back({33, 1031.25, 50.0, true});  // within 0.5 bark of the first
  m.tonal.push_back({320, 10000.0, -20.0, true});  // below threshold in quiet
  MaskerSet d = decimate_maskers(m);
  REQUIRE(d.tonal.size() == 1);
  CHECK(d.tonal[0].bin == 32);
}

TEST_CASE("global threshold never dips below the threshold in quiet, 1000 cases") {
  Rng rng(22);
  for (int cases = 0; cases < 1000; ++cases) {
    MaskerSet m;
    const std::size_t nmask = rng.integer(6);
    for (std::size_t i = 0; i < nmask; ++i) {
      Masker k;
      k.bin = 2 + rng.integer(250);
      k.freq_hz = static_cast<double>(k.bin) * 16000.0 / 512.0;
      k.level_db = rng.uniform(0.0, 96.0);
      k.tonal = rng.integer(2) == 0;
      (k.tonal ? m.tonal : m.nontonal).push_back(k);
    }
    auto t = global_threshold(m, 512, 16000);
    REQUIRE(t.size() == 257);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double f = std::min(std::max(static_cast<double>(k) * 16000.0 / 512.0, 20.0),
                                20000.0 - 1e-9);
      CHECK(t[k] >= absolute_threshold_db(f) - 1e-9);
    }
  }
}

TEST_CASE("maskers raise the threshold near their own frequency") {
  MaskerSet none;
  auto base = global_threshold(none, 512, 16000);
  MaskerSet one;
  one.tonal.push_back({64, 2000.0, 80.0, true});
  auto raised = global_threshold(one, 512, 16000);
  CHECK(raised[64] > base[64] + 20.0);
  CHECK(raised[60] > base[60]);
  CHECK(raised[68] > base[68]);
  // asymmetric spreading: masking extends further above the masker than below
  CHECK(raised[96] - base[96] > raised[32] - base[32]);
}

TEST_CASE("weights compress the threshold and stay positive") {
  MaskingThreshold t;
  t.t_db = Mat(2, 5);
  for (std::size_t i = 0; i < t.t_db.data.size(); ++i)
    t.t_db.data[i] = -40.0 + 30.0 * static_cast<double>(i);
  PerceptualWeights w = weights(t, 0.06);
  REQUIRE(w.w.same_shape(t.t_db));
  for (std::size_t i = 0; i < w.w.data.size(); ++i) {
    CHECK(w.w.data[i] == doctest::Approx(std::pow(10.0, -0.06 * t.t_db.data[i])));
    CHECK(w.w.data[i] > 0.0);
  }
  CHECK_THROWS_AS(weights(t, 0.0), ArgumentError);
}

TEST_CASE("quadratic form equals the weighted spectral sum") {
  Rng rng(23);
  const std::size_t L = 64;
  for (int cases = 0; cases < 50; ++cases) {
    std::vector<double> hw(L / 2 + 1);
    for (double& v : hw) v = rng.uniform(0.01, 3.0);
    FrameQuadraticForm q(hw, L);
    auto d = oracle::random_vec(rng, L, -1.0, 1.0);

    auto spec = oracle::naive_dft(d);
    double want = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t half = k <= L / 2 ? k : L - k;
      want += hw[half] * std::norm(spec[k]);
    }
    CHECK(oracle::rel_err(q.quad(d), want) < 1e-10);
  }
}

TEST_CASE("dense matrix agrees with the transform-domain path") {
  Rng rng(24);
  const std::size_t L = 32;
  std::vector<double> hw(L / 2 + 1);
  for (double& v : hw) v = rng.uniform(0.1, 2.0);
  FrameQuadraticForm q(hw, L);
  Mat g = q.dense();
  REQUIRE(g.rows == L);
  REQUIRE(g.cols == L);
  // symmetry
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      CHECK(g(i, j) == doctest::Approx(g(j, i)).epsilon(1e-10));
  // G delta and delta^T G delta match apply()/quad()
  auto d = oracle::random_vec(rng, L, -1.0, 1.0);
  auto gd = q.apply(d);
  double quad_dense = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < L; ++j) row += g(i, j) * d[j];
    CHECK(row == doctest::Approx(gd[i]).epsilon(1e-8));
    quad_dense += d[i] * row;
  }
  CHECK(oracle::rel_err(q.quad(d), quad_dense) < 1e-8);
}

TEST_CASE("quadratic form is positive semidefinite, 1000 cases") {
  Rng rng(25);
  std::vector<double> hw(33);
  for (double& v : hw) v = rng.uniform(0.0, 4.0);
  FrameQuadraticForm q(hw, 64);
  for (int cases = 0; cases < 1000; ++cases) {
    auto d = oracle::random_vec(rng, 64, -2.0, 2.0);
    CHECK(q.quad(d) >= -1e-12);
  }
}

TEST_CASE("analysis covers every frame and reuses the loss-path layout") {
  Waveform w = tone_mix(2048, {{1000.0, 0.4}, {250.0, 0.2}});
  reset_threshold_frame_counter();
  MaskingAnalysis a = analyze(w, FrameConfig{512, 512, Window::Rectangular});
  CHECK(threshold_frames_computed() == 4);
  REQUIRE(a.num_frames == 4);
  REQUIRE(a.num_bins == 257);
  REQUIRE(a.threshold.t_db.rows == 4);
  REQUIRE(a.mirrored_weights.rows == 4);
  REQUIRE(a.mirrored_weights.cols == 512);
  // mirrored layout: entry k and entry L-k carry the same weight
  for (std::size_t k = 1; k < 256; ++k)
    CHECK(a.mirrored_weights(0, k) == a.mirrored_weights(0, 512 - k));
  // threshold respects the quiet floor
  for (std::size_t k = 1; k < a.num_bins; ++k) {
    const double f = static_cast<double>(k) * 16000.0 / 512.0;
    if (f < 20.0 || f > 20000.0) continue;
    CHECK(a.threshold.t_db(0, k) >= absolute_threshold_db(f) - 1e-9);
  }
}

TEST_CASE("analyze requires hop equal to frame length") {
  Waveform w = tone_mix(1024, {{1000.0, 0.4}});
  CHECK_THROWS_AS(analyze(w, FrameConfig{512, 256, Window::Rectangular}), ArgumentError);
}

TEST_CASE("perceptual loss is zero at the origin and quadratic along rays") {
  Waveform x = tone_mix(2048, {{1000.0, 0.4}});
  MaskingAnalysis a = analyze(x, FrameConfig{512, 512, Window::Rectangular});

  Waveform zero;
  zero.sample_rate_hz = 16000;
  zero.samples.assign(2048, 0.0);
  CHECK(perceptual_loss(zero, a).loss == 0.0);

  Rng rng(26);
  Waveform d;
  d.sample_rate_hz = 16000;
  d.samples = oracle::random_vec(rng, 2048, -1e-4, 1e-4);
  const double base = perceptual_loss(d, a).loss;
  CHECK(base > 0.0);
  for (double c : {2.0, 3.0, 5.0}) {
    Waveform dc = d;
    for (double& v : dc.samples) v *= c;
    CHECK(oracle::rel_err(perceptual_loss(dc, a).loss, c * c * base) < 1e-10);
  }
}

TEST_CASE("perceptual gradient matches finite differences") {
  Waveform x = tone_mix(1024, {{1000.0, 0.4}, {2500.0, 0.1}});
  MaskingAnalysis a = analyze(x, FrameConfig{512, 512, Window::Rectangular});
  Rng rng(27);
  Waveform d;
  d.sample_rate_hz = 16000;
  d.samples = oracle::random_vec(rng, 1024, -3e-4, 3e-4);
  PerceptualEval ev = perceptual_loss(d, a);
  REQUIRE(ev.grad.size() == 1024);

  auto loss_at = [&](std::span<const double> v) {
    Waveform tmp;
    tmp.sample_rate_hz = 16000;
    tmp.samples.assign(v.begin(), v.end());
    return perceptual_loss(tmp, a).loss;
  };
  for (int k = 0; k < 12; ++k) {
    const std::size_t i = rng.integer(1024);
    const double fd = oracle::central_diff(loss_at, d.samples, i, 1e-7);
    CHECK(oracle::mixed_err(ev.grad[i], fd, 1e-4) < 1e-4);
  }
}

TEST_CASE("perceptual loss rejects mismatched deltas") {
  Waveform x = tone_mix(1024, {{1000.0, 0.4}});
  MaskingAnalysis a = analyze(x, FrameConfig{512, 512, Window::Rectangular});
  Waveform bad;
  bad.sample_rate_hz = 16000;
  bad.samples.assign(999, 0.0);
  CHECK_THROWS_AS(perceptual_loss(bad, a), ArgumentError);
  bad.samples.assign(1024, 0.0);
  bad.sample_rate_hz = 8000;
  CHECK_THROWS_AS(perceptual_loss(bad, a), ArgumentError);
}

TEST_CASE("quiet deltas under loud carriers cost less than exposed ones") {
  // same delta energy, one masked by a loud tone, one in silence
  Waveform loud = tone_mix(512, {{1000.0, 0.45}});
  Waveform faint = tone_mix(512, {{1000.0, 0.002}});
  MaskingAnalysis am = analyze(loud, FrameConfig{512, 512, Window::Rectangular});
  MaskingAnalysis aq = analyze(faint, FrameConfig{512, 512, Window::Rectangular});
  Waveform d = tone_mix(512, {{1062.5, 0.001}});  // right next to the masker
  CHECK(perceptual_loss(d, am).loss < perceptual_loss(d, aq).loss);
}
