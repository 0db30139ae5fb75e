#include "pat/psycho.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>

#include "pat/errors.hpp"
#include "pat/fft.hpp"

namespace pat::psy {
namespace {

// A frame whose strongest bin is this quiet carries no usable level
// information (16-bit audio bottoms out well above it), so normalization is
// skipped and the frame is treated as silent.
constexpr double kSilencePeakDb = -110.0;

std::atomic<std::size_t> g_threshold_frames{0};

double power_sum_db(double acc_power) { return 10.0 * std::log10(acc_power); }

// Dominance neighborhood for tonal masker detection: wider at higher
// frequencies where critical bands span more bins.
std::size_t dominance_width(double f_hz) {
  if (f_hz < 2500.0) return 2;
  if (f_hz < 5500.0) return 3;
  return 6;
}

double ath_clamped(double f_hz) {
  return absolute_threshold_db(std::clamp(f_hz, 20.0, 20000.0));
}

// Spreading contribution of one masker at a probe Bark distance dz, in dB
// relative to the masker level. Rising slope below the masker is fixed;
// the falling slope flattens for louder and higher-frequency maskers.
double spread_db(double dz, double masker_level_db, double masker_freq_hz) {
  if (dz < 0.0) return 27.0 * dz;
  const double f_khz = std::max(masker_freq_hz, 20.0) / 1000.0;
  const double slope = 24.0 + 0.23 / f_khz - 0.2 * masker_level_db;
  return -slope * dz;
}

double masking_index_db(bool tonal, double masker_bark) {
  return tonal ? -6.025 - 0.275 * masker_bark : -2.025 - 0.175 * masker_bark;
}

}  // namespace

double bark(double f_hz) {
  const double r = f_hz / 7500.0;
  return 13.0 * std::atan(0.00076 * f_hz) + 3.5 * std::atan(r * r);
}

double absolute_threshold_db(double f_hz) {
  if (!(f_hz >= 20.0 && f_hz <= 20000.0))
    throw ArgumentError("absolute_threshold_db: frequency out of range: " +
                        std::to_string(f_hz));
  const double k = f_hz / 1000.0;
  return 3.64 * std::pow(k, -0.8) - 6.5 * std::exp(-0.6 * (k - 3.3) * (k - 3.3)) +
         1e-3 * k * k * k * k;
}

SplFrame spl_normalize(std::span<const double> psd_db) {
  if (psd_db.empty()) throw ArgumentError("spl_normalize: empty frame");
  SplFrame out;
  out.levels_db_spl.assign(psd_db.begin(), psd_db.end());
  const double peak = *std::max_element(psd_db.begin(), psd_db.end());
  if (peak <= kSilencePeakDb) return out;  // silent: keep floor levels, no offset
  const double offset = kSplReference - peak;
  for (double& v : out.levels_db_spl) v += offset;
  out.norm_offset_db = offset;
  return out;
}

MaskerSet find_maskers(const SplFrame& frame, std::size_t frame_len, int sample_rate_hz) {
  MaskerSet set;
  if (frame.silent()) return set;
  const auto& P = frame.levels_db_spl;
  const std::size_t nbins = P.size();
  if (nbins != frame_len / 2 + 1)
    throw ArgumentError("find_maskers: frame/bin count mismatch");
  const double step = static_cast<double>(sample_rate_hz) / static_cast<double>(frame_len);

  // Tonal maskers. consumed marks bins whose energy is attributed to a peak
  // so the non-tonal sums below do not double count it.
  std::vector<bool> consumed(nbins, false);
  for (std::size_t k = 1; k + 1 < nbins; ++k) {
    if (!(P[k] > P[k - 1] && P[k] > P[k + 1])) continue;
    const double f = step * static_cast<double>(k);
    const std::size_t width = dominance_width(f);
    bool dominant = true;
    for (std::size_t j = 2; j <= width && dominant; ++j) {
      if (k >= j && P[k] < P[k - j] + 7.0) dominant = false;
      if (k + j < nbins && P[k] < P[k + j] + 7.0) dominant = false;
    }
    if (!dominant) continue;
    const double level = power_sum_db(std::pow(10.0, P[k - 1] / 10.0) +
                                      std::pow(10.0, P[k] / 10.0) +
                                      std::pow(10.0, P[k + 1] / 10.0));
    set.tonal.push_back({k, f, level, true});
    consumed[k - 1] = consumed[k] = consumed[k + 1] = true;
  }

  // Non-tonal maskers: one per critical band from what is left.
  const std::size_t nband = static_cast<std::size_t>(bark(step * (nbins - 1))) + 1;
  std::vector<double> band_power(nband, 0.0);
  std::vector<double> band_logf(nband, 0.0);
  std::vector<std::size_t> band_count(nband, 0);
  for (std::size_t k = 0; k < nbins; ++k) {
    if (consumed[k]) continue;
    const double f = step * static_cast<double>(k);
    const auto b = static_cast<std::size_t>(bark(f));
    band_power[b] += std::pow(10.0, P[k] / 10.0);
    if (f > 0.0) {
      band_logf[b] += std::log(f);
      band_count[b] += 1;
    }
  }
  for (std::size_t b = 0; b < nband; ++b) {
    if (band_power[b] <= 0.0) continue;
    std::size_t bin = 0;
    double f = 0.0;
    if (band_count[b] > 0) {
      f = std::exp(band_logf[b] / static_cast<double>(band_count[b]));
      bin = std::min<std::size_t>(nbins - 1,
                                  static_cast<std::size_t>(std::lround(f / step)));
      f = step * static_cast<double>(bin);
    }
    set.nontonal.push_back({bin, f, power_sum_db(band_power[b]), false});
  }
  return set;
}

MaskerSet decimate_maskers(const MaskerSet& maskers) {
  std::vector<Masker> all;
  all.reserve(maskers.size());
  for (const auto& m : maskers.tonal)
    if (m.level_db >= ath_clamped(m.freq_hz)) all.push_back(m);
  for (const auto& m : maskers.nontonal)
    if (m.level_db >= ath_clamped(m.freq_hz)) all.push_back(m);

  // Keep-strongest sweep: accept in descending level order, reject anything
  // closer than 0.5 Bark to an already accepted masker.
  std::stable_sort(all.begin(), all.end(), [](const Masker& a, const Masker& b) {
    if (a.level_db != b.level_db) return a.level_db > b.level_db;
    return a.bin < b.bin;
  });
  std::vector<Masker> kept;
  for (const auto& m : all) {
    const double z = bark(m.freq_hz);
    bool crowded = false;
    for (const auto& k : kept) {
      if (std::abs(z - bark(k.freq_hz)) < 0.5) {
        crowded = true;
        break;
      }
    }
    if (!crowded) kept.push_back(m);
  }

  MaskerSet out;
  for (const auto& m : kept) (m.tonal ? out.tonal : out.nontonal).push_back(m);
  auto by_bin = [](const Masker& a, const Masker& b) { return a.bin < b.bin; };
  std::sort(out.tonal.begin(), out.tonal.end(), by_bin);
  std::sort(out.nontonal.begin(), out.nontonal.end(), by_bin);
  return out;
}

std::vector<double> global_threshold(const MaskerSet& maskers, std::size_t frame_len,
                                     int sample_rate_hz) {
  const std::size_t nbins = frame_len / 2 + 1;
  const double step = static_cast<double>(sample_rate_hz) / static_cast<double>(frame_len);
  std::vector<const Masker*> all;
  all.reserve(maskers.size());
  for (const auto& m : maskers.tonal) all.push_back(&m);
  for (const auto& m : maskers.nontonal) all.push_back(&m);

  std::vector<double> t(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double f = step * static_cast<double>(k);
    const double zb = bark(f);
    double acc = std::pow(10.0, ath_clamped(f) / 10.0);
    for (const Masker* m : all) {
      const double dz = zb - bark(m->freq_hz);
      if (dz < -3.0 || dz > 8.0) continue;
      const double contrib = m->level_db + masking_index_db(m->tonal, bark(m->freq_hz)) +
                             spread_db(dz, m->level_db, m->freq_hz);
      acc += std::pow(10.0, contrib / 10.0);
    }
    t[k] = power_sum_db(acc);
  }
  return t;
}

PerceptualWeights weights(const MaskingThreshold& t, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("weights: beta must be positive");
  PerceptualWeights out;
  out.beta = beta;
  out.w = Mat(t.t_db.rows, t.t_db.cols);
  for (std::size_t i = 0; i < t.t_db.data.size(); ++i)
    out.w.data[i] = std::pow(10.0, -beta * t.t_db.data[i]);
  return out;
}

FrameQuadraticForm::FrameQuadraticForm(std::span<const double> half_weights,
                                       std::size_t frame_len)
    : frame_len_(frame_len) {
  if (!is_pow2(frame_len)) throw ArgumentError("quadratic form: frame_len not a power of two");
  if (half_weights.size() != frame_len / 2 + 1)
    throw ArgumentError("quadratic form: expected frame_len/2+1 weights");
  for (double w : half_weights)
    if (!(w >= 0.0)) throw ArgumentError("quadratic form: weights must be non-negative");
  mirrored_.resize(frame_len);
  for (std::size_t k = 0; k <= frame_len / 2; ++k) mirrored_[k] = half_weights[k];
  for (std::size_t k = 1; k < frame_len / 2; ++k) mirrored_[frame_len - k] = half_weights[k];
}

double FrameQuadraticForm::quad(std::span<const double> frame) const {
  if (frame.size() != frame_len_) throw ArgumentError("quad: frame length mismatch");
  const auto X = fft_real(frame);
  double acc = 0.0;
  for (std::size_t k = 0; k < frame_len_; ++k) acc += mirrored_[k] * std::norm(X[k]);
  return acc;
}

std::vector<double> FrameQuadraticForm::apply(std::span<const double> frame) const {
  if (frame.size() != frame_len_) throw ArgumentError("apply: frame length mismatch");
  auto X = fft_real(frame);
  for (std::size_t k = 0; k < frame_len_; ++k) X[k] *= mirrored_[k];
  // Symmetric weights on a conjugate-symmetric spectrum: the inverse
  // transform is real up to rounding.
  return ifft_real(X);
}

Mat FrameQuadraticForm::dense() const {
  if (frame_len_ > 512)
    throw ArgumentError("dense: refusing to materialize G above frame_len 512");
  // G is circulant: row j is a rotation of the inverse transform of the
  // weight vector. Averaging c[d] with c[L-d] pins down the analytic
  // symmetry that rounding would otherwise miss.
  std::vector<std::complex<double>> w(frame_len_);
  for (std::size_t k = 0; k < frame_len_; ++k) w[k] = {mirrored_[k], 0.0};
  auto c = ifft_real(w);
  const double inv_sqrt_l = 1.0 / std::sqrt(static_cast<double>(frame_len_));
  for (auto& v : c) v *= inv_sqrt_l;
  std::vector<double> ce(frame_len_);
  for (std::size_t d = 0; d < frame_len_; ++d) {
    const std::size_t dr = (frame_len_ - d) % frame_len_;
    ce[d] = 0.5 * (c[d] + c[dr]);
  }
  Mat g(frame_len_, frame_len_);
  for (std::size_t j = 0; j < frame_len_; ++j)
    for (std::size_t k = 0; k < frame_len_; ++k)
      g(j, k) = ce[(j + frame_len_ - k) % frame_len_];
  return g;
}

FrameQuadraticForm quadratic_form(const PerceptualWeights& w, std::size_t frame_index,
                                  std::size_t frame_len) {
  if (frame_index >= w.w.rows) throw ArgumentError("quadratic_form: frame index out of range");
  return FrameQuadraticForm(w.w.row(frame_index), frame_len);
}

MaskingAnalysis analyze(const Waveform& x, const FrameConfig& cfg, double beta,
                        double sample_scale, int jobs) {
  cfg.validate();
  if (x.samples.empty()) throw ArgumentError("analyze: empty signal");
  if (x.sample_rate_hz <= 0) throw ArgumentError("analyze: bad sample rate");
  if (!(beta > 0.0)) throw ArgumentError("analyze: beta must be positive");
  if (!(sample_scale > 0.0)) throw ArgumentError("analyze: sample_scale must be positive");

  const Spectrum sp = spectrum(segment(x, cfg));
  MaskingAnalysis a;
  a.config = cfg;
  a.sample_rate_hz = x.sample_rate_hz;
  a.signal_len = x.samples.size();
  a.num_frames = sp.num_frames;
  a.num_bins = sp.num_bins;
  a.beta = beta;
  a.sample_scale = sample_scale;
  a.spl.resize(sp.num_frames);
  a.threshold.t_db = Mat(sp.num_frames, sp.num_bins);
  a.weighting.beta = beta;
  a.weighting.w = Mat(sp.num_frames, sp.num_bins);
  a.mirrored_weights = Mat(sp.num_frames, cfg.frame_len);

  parallel_for(sp.num_frames, jobs, [&](std::size_t f) {
    a.spl[f] = spl_normalize(sp.psd_db.row(f));
    const MaskerSet kept =
        decimate_maskers(find_maskers(a.spl[f], cfg.frame_len, x.sample_rate_hz));
    const auto t = global_threshold(kept, cfg.frame_len, x.sample_rate_hz);
    auto trow = a.threshold.t_db.row(f);
    auto wrow = a.weighting.w.row(f);
    for (std::size_t k = 0; k < sp.num_bins; ++k) {
      trow[k] = t[k];
      wrow[k] = std::pow(10.0, -beta * t[k]);
    }
    auto mrow = a.mirrored_weights.row(f);
    for (std::size_t k = 0; k < sp.num_bins; ++k) mrow[k] = wrow[k];
    for (std::size_t k = 1; k < cfg.frame_len / 2; ++k) mrow[cfg.frame_len - k] = wrow[k];
    g_threshold_frames.fetch_add(1, std::memory_order_relaxed);
  });
  return a;
}

PerceptualEval perceptual_loss(const Waveform& delta, const MaskingAnalysis& analysis) {
  if (analysis.config.hop != analysis.config.frame_len)
    throw ArgumentError("perceptual_loss: loss path requires hop == frame_len");
  if (delta.samples.size() != analysis.signal_len)
    throw ArgumentError("perceptual_loss: delta length does not match analyzed signal");
  if (delta.sample_rate_hz != analysis.sample_rate_hz)
    throw ArgumentError("perceptual_loss: sample rate mismatch");

  const FrameConfig& cfg = analysis.config;
  const std::size_t L = cfg.frame_len;
  const std::size_t n = delta.samples.size();
  const double nf = static_cast<double>(analysis.num_frames);
  const double s2 = analysis.sample_scale * analysis.sample_scale;
  const auto win = window_curve(cfg.window, L);

  PerceptualEval out;
  out.grad.assign(n, 0.0);
  std::vector<std::complex<double>> buf(L);
  for (std::size_t f = 0; f < analysis.num_frames; ++f) {
    const std::size_t start = f * cfg.hop;
    const std::size_t avail = start < n ? std::min(L, n - start) : 0;
    for (std::size_t k = 0; k < L; ++k) {
      const double v = k < avail ? delta.samples[start + k] * win[k] : 0.0;
      buf[k] = {v, 0.0};
    }
    fft(buf, /*inverse=*/false);
    const auto mrow = analysis.mirrored_weights.row(f);
    double frame_quad = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      frame_quad += mrow[k] * std::norm(buf[k]);
      buf[k] *= mrow[k];
    }
    out.loss += frame_quad;
    fft(buf, /*inverse=*/true);
    for (std::size_t k = 0; k < avail; ++k)
      out.grad[start + k] += (s2 / nf) * win[k] * buf[k].real();
  }
  out.loss *= s2 / (2.0 * nf);
  return out;
}

std::size_t threshold_frames_computed() {
  return g_threshold_frames.load(std::memory_order_relaxed);
}

void reset_threshold_frame_counter() { g_threshold_frames.store(0, std::memory_order_relaxed); }

}  // namespace pat::psy
