#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pat/audio.hpp"
#include "pat/common.hpp"

namespace pat::ctc {

// Output symbols: index 0 is the blank, then space, apostrophe, a..z.
class Alphabet {
 public:
  static constexpr int kBlank = 0;
  static const Alphabet& standard();

  std::size_t size() const { return symbols_.size() + 1; }  // including blank
  char symbol(int index) const;                             // index >= 1
  int index(char c) const;                                  // throws on unknown char
  bool valid_text(std::string_view text) const;
  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> labels) const;

 private:
  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {}
  std::string symbols_;  // symbols_[i] has label index i+1
};

// Validated text over the standard alphabet.
struct Transcript {
  std::string text;
  bool operator==(const Transcript&) const = default;
};
Transcript make_transcript(std::string_view text);  // throws ArgumentError on bad chars

// Per-frame log-power features with affine squashing so typical values land
// in tanh's linear range, then +/-1 frame context stacking.
struct FeatureConfig {
  FrameConfig frames{256, 256, Window::Rectangular};
  double log_floor = 1e-10;  // added to bin power before the log
  // Chosen so the bundled corpus's dither floor (bin power ~1.3e-6, log
  // ~ -13.5) maps to ~0 rather than a large common-mode offset across all
  // stacked dims, which badly conditions the first layer and stalls training.
  double shift = 13.5;
  double scale = 12.0;

  std::size_t n_bins() const { return frames.num_bins(); }
  std::size_t stacked_dim() const { return 3 * n_bins(); }
  bool operator==(const FeatureConfig&) const = default;
};

// Two tanh hidden layers over stacked spectral features, linear output
// layer, one logits row per frame. Small enough to train in seconds and
// differentiable end to end back to the waveform.
struct MicroCtcModel {
  FeatureConfig features;
  int sample_rate_hz = 16000;
  std::size_t hidden = 128;
  std::uint64_t init_seed = 0;

  Mat w1;                  // hidden x stacked_dim
  std::vector<double> b1;  // hidden
  Mat w2;                  // hidden x hidden
  std::vector<double> b2;  // hidden
  Mat w3;                  // classes x hidden
  std::vector<double> b3;  // classes

  std::size_t n_classes() const { return b3.size(); }
};

// Fresh model with uniform(-0.1, 0.1) weights drawn from the seed.
MicroCtcModel make_model(std::uint64_t seed, const FeatureConfig& features = {},
                         std::size_t hidden = 128, int sample_rate_hz = 16000);

// Logits, frames x classes. T = ceil(len / hop) frames.
Mat forward(const MicroCtcModel& model, const Waveform& x);

struct CtcEval {
  double loss = 0.0;  // -log P(labels | logits)
  Mat grad_logits;
};

// Forward-backward in log space over the blank-extended label sequence.
// labels are indices over [1, n_classes); throws InfeasibleTargetError when
// no length-T path can emit them.
CtcEval ctc_loss(const Mat& logits, std::span<const int> labels);

// Smallest frame count that can emit the label sequence: one slot per label
// plus a mandatory blank between equal neighbors.
std::size_t min_frames_for(std::span<const int> labels);

struct InputGradient {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d x, same length as x
};

// CTC loss of the target and its gradient with respect to the waveform,
// backpropagated through the network, feature stack and frame transforms.
// logits_out, when given, receives the forward pass logits.
InputGradient input_gradient(const MicroCtcModel& model, const Waveform& x,
                             const Transcript& target, Mat* logits_out = nullptr);

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<int> greedy_labels(const Mat& logits);
Transcript greedy_decode(const Mat& logits);
Transcript greedy_decode(const MicroCtcModel& model, const Waveform& x);

struct TrainResult {
  MicroCtcModel model;
  std::vector<double> epoch_loss;  // mean per-utterance CTC loss seen in each epoch
  // Largest adjacent-epoch loss increase observed (0 for a strictly monotone
  // run). Early Adam steps can overshoot before the blank plateau breaks;
  // epoch_loss is non-increasing within this recorded slack.
  double loss_tolerance = 0.0;
  int skipped_utterances = 0;      // infeasible pairs dropped with a warning count
};

// Adam-driven gradient descent on the CTC loss, one step per utterance in
// fixed corpus order. Deterministic: same seed model, corpus and
// hyperparameters give the same result bit for bit.
TrainResult train_toy(const MicroCtcModel& start,
                      const std::vector<std::pair<Waveform, Transcript>>& corpus,
                      int epochs, double learning_rate);

void save_model(const MicroCtcModel& model, const std::filesystem::path& path);
MicroCtcModel load_model(const std::filesystem::path& path);

}  // namespace pat::ctc
