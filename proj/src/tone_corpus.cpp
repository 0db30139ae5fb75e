#include "pat/tone_corpus.hpp"

#include <cmath>

#include "pat/errors.hpp"
#include "pat/rng.hpp"

namespace pat::ctc {
namespace {

constexpr double kPi = 3.14159265358979323846;

// 7x4 tone grid: the low tone picks the row, the high tone the column, so the
// 28 symbols share 11 detector frequencies between them. Sharing matters: a
// column detector trained on one symbol transfers to the six others in that
// column, which is what lets a 79-character corpus train at all. Rows sit two
// FFT bins apart and columns three, so no pair of classes rests on a
// single-bin distinction.
constexpr double kGridHz = 62.5;
constexpr int kLowBase = 5;   // rows at bins 5,7,..,17 (312.5..1062.5 Hz)
constexpr int kHighBase = 40; // cols at bins 40,43,46,49 (2500..3062.5 Hz)

const std::vector<std::string> kWords = {
    "open", "the",  "door", "quick", "brown", "fox",  "jumps", "over",
    "lazy", "dog",  "vex",  "whisk", "jib",   "quiz", "my",    "don't",
    "pack", "box",  "with", "five",  "dozen", "jugs", "how",   "are",
    "you",  "call", "stop", "go"};

}  // namespace

std::pair<double, double> char_tones(char c, const ToneCoding&) {
  const int idx = Alphabet::standard().index(c) - 1;  // 0..27
  const double low = kGridHz * (kLowBase + 2 * (idx % 7));
  const double high = kGridHz * (kHighBase + 3 * (idx / 7));
  return {low, high};
}

Waveform synth_phrase(std::string_view text, const ToneCoding& tc) {
  if (text.empty()) throw ArgumentError("synth_phrase: empty text");
  if (tc.gap_samples >= tc.samples_per_char)
    throw ArgumentError("synth_phrase: gap must be shorter than the char cell");
  Waveform w;
  w.sample_rate_hz = tc.sample_rate_hz;
  w.samples.assign(text.size() * tc.samples_per_char, 0.0);
  const std::size_t voiced = tc.samples_per_char - tc.gap_samples;
  // Decaying envelope, constant within each 256-sample frame, stepping only
  // at tone zero crossings. Without it every voiced frame of a cell is
  // bit-identical and CTC training settles into a hedged all-blank optimum;
  // the onset-heavy shape gives the aligner a distinct frame to latch onto.
  constexpr std::size_t kEnvStep = 256;
  std::size_t pos = 0;
  for (char c : text) {
    const auto [lo, hi] = char_tones(c, tc);
    for (std::size_t k = 0; k < voiced; ++k) {
      const double env = 1.0 - 0.75 * static_cast<double>(k / kEnvStep) /
                                    static_cast<double>((voiced + kEnvStep - 1) / kEnvStep);
      const double t = static_cast<double>(k) / tc.sample_rate_hz;
      w.samples[pos + k] = env * (tc.amp * std::sin(2.0 * kPi * lo * t) +
                                  tc.amp * std::sin(2.0 * kPi * hi * t));
    }
    pos += tc.samples_per_char;
  }
  if (tc.noise_amp > 0.0) {
    // One fixed pattern, repeated every cell. Anything less regular leaks
    // information the recognizer happily memorizes: text-keyed noise
    // fingerprints each training phrase, and a flat position-keyed stream
    // encodes absolute position. A cell-periodic floor makes every cell
    // statistically identical, so it can only act as the spectral floor it
    // is meant to be.
    Rng noise(0x746f6e65u);
    std::vector<double> pattern(tc.samples_per_char);
    for (double& p : pattern) p = noise.uniform(-tc.noise_amp, tc.noise_amp);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
      w.samples[i] += pattern[i % tc.samples_per_char];
  }
  return w;
}

const std::vector<std::string>& builtin_phrases() {
  // Every alphabet symbol (apostrophe included) occurs at least twice across
  // the set, so none of the 28 classes is starved during training.
  static const std::vector<std::string> phrases = {
      "can't fix my jug", "quick gold boxes", "whisk jive plaza",
      "dozen farm quiz", "won't harp by tv"};
  return phrases;
}

std::vector<std::pair<Waveform, Transcript>> builtin_corpus(const ToneCoding& tc) {
  std::vector<std::pair<Waveform, Transcript>> out;
  for (const auto& p : builtin_phrases())
    out.emplace_back(synth_phrase(p, tc), make_transcript(p));
  return out;
}

std::vector<std::string> sample_phrases(std::size_t count, std::size_t min_chars,
                                        std::size_t max_chars, std::uint64_t seed) {
  if (min_chars == 0 || max_chars < min_chars)
    throw ArgumentError("sample_phrases: bad length bounds");
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string phrase;
    while (true) {
      const auto& word = kWords[rng.integer(kWords.size())];
      const std::size_t extra = word.size() + (phrase.empty() ? 0 : 1);
      if (phrase.size() + extra > max_chars) break;
      if (!phrase.empty()) phrase.push_back(' ');
      phrase += word;
    }
    if (phrase.size() >= min_chars) out.push_back(std::move(phrase));
  }
  return out;
}

}  // namespace pat::ctc
