#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pat/audio.hpp"
#include "pat/common.hpp"

namespace pat::psy {

// Per-frame reference level: the strongest bin is pinned here, which stands
// in for playback calibration we do not have.
inline constexpr double kSplReference = 96.0;

// Critical-band rate (Bark) of a frequency in Hz.
double bark(double f_hz);

// Threshold in quiet, dB SPL. Valid for 20 Hz .. 20 kHz; out of range throws
// ArgumentError. Rises steeply toward both ends of the audible range with a
// sensitivity dip near 3.3 kHz.
double absolute_threshold_db(double f_hz);

// One frame's PSD shifted so its peak sits at kSplReference. Frames with no
// signal content cannot be normalized meaningfully: they keep floor levels
// and carry no offset.
struct SplFrame {
  std::vector<double> levels_db_spl;        // frame_len/2 + 1 bins
  std::optional<double> norm_offset_db;     // empty for silent frames
  bool silent() const { return !norm_offset_db.has_value(); }
};

SplFrame spl_normalize(std::span<const double> psd_db);

struct Masker {
  std::size_t bin = 0;
  double freq_hz = 0.0;
  double level_db = 0.0;  // dB SPL after normalization
  bool tonal = false;
};

struct MaskerSet {
  std::vector<Masker> tonal;
  std::vector<Masker> nontonal;
  std::size_t size() const { return tonal.size() + nontonal.size(); }
};

// Tonal maskers: strict local PSD maxima that dominate their neighborhood by
// at least 7 dB (neighborhood width grows with frequency); the peak and its
// two neighbors are power-summed into the masker level. Non-tonal maskers:
// one per critical band, the power sum of the band's bins not consumed by a
// tonal masker, placed at the band's geometric-mean frequency. Silent frames
// yield an empty set.
MaskerSet find_maskers(const SplFrame& frame, std::size_t frame_len, int sample_rate_hz);

// Drops maskers below the threshold in quiet, then enforces a minimum
// spacing of 0.5 Bark by keeping the strongest masker of any crowded pair.
MaskerSet decimate_maskers(const MaskerSet& maskers);

// Global masking threshold for one frame: per bin, the power sum of every
// masker's spreading contribution plus the threshold in quiet. Always at
// least the threshold in quiet. Frequencies below 20 Hz use the 20 Hz value
// of the quiet threshold.
std::vector<double> global_threshold(const MaskerSet& maskers, std::size_t frame_len,
                                     int sample_rate_hz);

struct MaskingThreshold {
  Mat t_db;  // frames x bins, dB SPL
};

struct PerceptualWeights {
  Mat w;  // frames x bins, w = 10^(-beta * t), strictly positive
  double beta = 0.06;
};

// beta compresses the threshold's dynamic range into weights; must be > 0.
PerceptualWeights weights(const MaskingThreshold& t, double beta);

// Quadratic form delta^T G delta for one frame, where G applies the
// frame's per-bin weights in the transform domain. The weight layout over
// all frame_len bins mirrors bins 1..L/2-1 onto the conjugate half, which
// makes G real, symmetric and positive semidefinite. apply() stays in the
// transform domain (no L x L product); dense() materializes G for small
// frames only.
class FrameQuadraticForm {
 public:
  FrameQuadraticForm(std::span<const double> half_weights, std::size_t frame_len);

  std::size_t frame_len() const { return frame_len_; }
  std::span<const double> mirrored_weights() const { return mirrored_; }

  double quad(std::span<const double> frame) const;                // delta^T G delta
  std::vector<double> apply(std::span<const double> frame) const;  // G delta
  Mat dense() const;                                               // frame_len <= 512 only

 private:
  std::size_t frame_len_;
  std::vector<double> mirrored_;  // frame_len entries
};

FrameQuadraticForm quadratic_form(const PerceptualWeights& w, std::size_t frame_index,
                                  std::size_t frame_len);

// Everything the perceptual loss needs about a fixed carrier signal x; built
// once per attack and immutable afterwards. The loss path requires hop ==
// frame_len so each delta sample belongs to exactly one frame.
struct MaskingAnalysis {
  FrameConfig config;
  int sample_rate_hz = 0;
  std::size_t signal_len = 0;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::vector<SplFrame> spl;    // per frame
  MaskingThreshold threshold;   // frames x bins
  PerceptualWeights weighting;  // frames x bins
  Mat mirrored_weights;         // frames x frame_len, loss-path layout
  double beta = 0.06;
  // The loss is evaluated on sample_scale * delta. Full scale (32768) puts
  // the loss magnitude on the same footing as a recognizer consuming 16-bit
  // integer audio, which is what makes the alpha trade-off meaningful.
  double sample_scale = 32768.0;
};

MaskingAnalysis analyze(const Waveform& x, const FrameConfig& cfg, double beta = 0.06,
                        double sample_scale = 32768.0, int jobs = 1);

struct PerceptualEval {
  double loss = 0.0;
  std::vector<double> grad;  // same length as delta
};

// (scale^2 / 2N) * sum_n d_n^T G_n d_n over the frames of delta, plus its
// gradient. delta must match the analyzed signal's length and sample rate.
PerceptualEval perceptual_loss(const Waveform& delta, const MaskingAnalysis& analysis);

// Instrumentation: number of frames whose masking threshold has been
// computed since the last reset. Lets tests pin "analysis happens exactly
// once per attack".
std::size_t threshold_frames_computed();
void reset_threshold_frame_counter();

}  // namespace pat::psy
