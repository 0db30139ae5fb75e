#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pat/audio.hpp"
#include "pat/ctc.hpp"

namespace pat::ctc {

// Synthetic "speech": every alphabet character is a fixed two-tone chord.
// Both tone sets sit on the 62.5 Hz grid, so with 256/512-sample frames at
// 16 kHz every tone is bin-centered and char cells land exactly on frame
// boundaries. Each cell ends in a short silent gap, which is what lets CTC
// separate doubled letters.
struct ToneCoding {
  int sample_rate_hz = 16000;
  std::size_t samples_per_char = 2048;
  std::size_t gap_samples = 256;
  // Per-tone amplitude; chord peaks stay well inside [-1, 1]. Kept modest on
  // purpose: against bin-centered tones much louder than this, the usual
  // int16-scale L2 attack budgets cannot cross the model's decision
  // boundaries at all, which would make every targeted attack vacuous.
  double amp = 0.08;
  // Broadband dither, deterministic per phrase. Lifts every spectral bin off
  // the log-power floor; without it the feature gradient at empty bins is
  // ~1e10 times the gradient at tone bins and normalized descent directions
  // degenerate.
  double noise_amp = 0.002;
};

// The two tone frequencies coding a character.
std::pair<double, double> char_tones(char c, const ToneCoding& tc = {});

Waveform synth_phrase(std::string_view text, const ToneCoding& tc = {});

// Five short phrases covering the whole alphabet, used as the bundled
// training corpus.
const std::vector<std::string>& builtin_phrases();
std::vector<std::pair<Waveform, Transcript>> builtin_corpus(const ToneCoding& tc = {});

// Random word-salad phrases with lengths in [min_chars, max_chars].
std::vector<std::string> sample_phrases(std::size_t count, std::size_t min_chars,
                                        std::size_t max_chars, std::uint64_t seed);

}  // namespace pat::ctc
