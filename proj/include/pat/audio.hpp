#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "pat/common.hpp"

namespace pat {

// Mono audio at full-scale normalization: integer sample s maps to s/32768,
// so every valid signal lives in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

enum class Window { Rectangular, Hann };

struct FrameConfig {
  std::size_t frame_len = 512;  // power of two (radix-2 transform)
  std::size_t hop = 512;        // 1 <= hop <= frame_len
  Window window = Window::Rectangular;

  void validate() const;  // throws ArgumentError on violation
  std::size_t num_bins() const { return frame_len / 2 + 1; }
  std::size_t num_frames(std::size_t n_samples) const;  // ceil(n / hop), >= 1 for n > 0

  bool operator==(const FrameConfig&) const = default;
};

// Symmetric window curve; Hann has zero endpoints, rectangular is all ones.
std::vector<double> window_curve(Window w, std::size_t len);

// Windowed frames. Frame n covers samples [n*hop, n*hop + frame_len); tail
// frames are zero-padded past the end of the signal.
struct FrameSet {
  Mat frames;  // num_frames x frame_len
  FrameConfig config;
  int sample_rate_hz = 0;
  std::vector<std::size_t> origin_offsets;  // start sample of each frame

  std::size_t num_frames() const { return frames.rows; }
};

// Added to |X|^2 before any decibel conversion; 0 maps to -120 dB.
inline constexpr double kPsdFloor = 1e-12;

// Non-redundant half spectrum per frame, with power levels in dB.
struct Spectrum {
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;                  // frame_len/2 + 1
  std::vector<std::complex<double>> bins;    // num_frames x num_bins, row-major
  Mat psd_db;                                // 10*log10(|X|^2 + kPsdFloor)
  FrameConfig config;
  int sample_rate_hz = 0;

  std::complex<double> bin(std::size_t frame, std::size_t k) const {
    return bins[frame * num_bins + k];
  }
  double bin_freq_hz(std::size_t k) const {
    return static_cast<double>(k) * sample_rate_hz / static_cast<double>(config.frame_len);
  }
};

// 16-bit PCM mono WAV only; anything else is a FormatError. Missing or
// unreadable files are IoErrors.
Waveform load_wav(const std::filesystem::path& path);

// Clamps to [-1, 1], scales by 32768 and rounds; +1.0 saturates to 32767.
void save_wav(const Waveform& w, const std::filesystem::path& path);

FrameSet segment(const Waveform& w, const FrameConfig& cfg);

// Unitary transform of each frame (so frame energy equals spectral energy
// summed over all frame_len bins).
Spectrum spectrum(const FrameSet& frames);

// 10*log10(sum x^2 / sum delta^2); +infinity when delta is identically zero.
double snr_db(const Waveform& x, const Waveform& delta);

// Frames x bins PSD matrix in dB, header row of bin center frequencies in Hz.
void export_spectrogram_csv(const Waveform& w, const FrameConfig& cfg,
                            const std::filesystem::path& path);

// Shared CSV writer: header of bin frequencies, then one row per frame.
void write_frame_matrix_csv(const Mat& m, double bin_hz_step, const std::filesystem::path& path);

}  // namespace pat
