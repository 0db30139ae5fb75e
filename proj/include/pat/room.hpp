#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pat/audio.hpp"

namespace pat::room {

// Shoebox room with per-surface reflection coefficients, ordered
// x-lo, x-hi, y-lo, y-hi, z-lo, z-hi.
struct RoomSpec {
  std::array<double, 3> dims{5.0, 4.0, 3.0};    // meters
  std::array<double, 3> source{1.0, 1.0, 1.5};  // speaker position
  std::array<double, 3> mic{3.0, 2.0, 1.5};
  std::array<double, 6> reflect{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};  // each in [0, 1)
  int max_order = 3;
  double speed_of_sound = 343.0;
  int sample_rate_hz = 16000;

  void validate() const;  // throws ArgumentError
};

// Impulse response as a dense tap array offset by the direct-path delay:
// h[first_tap + i] = taps[i].
struct Rir {
  std::size_t first_tap = 0;
  std::vector<double> taps;

  std::size_t length() const { return first_tap + taps.size(); }
  static Rir identity() { return Rir{0, {1.0}}; }
};

// Image-source impulse response. Each image contributes the product of the
// reflection coefficients it bounced off, spread over 1/(4*pi*distance).
// Delays round to the nearest sample; fractional_delay spreads each tap
// over a short windowed-sinc kernel instead.
Rir image_source_rir(const RoomSpec& spec, bool fractional_delay = false);

struct RoomBankRanges {
  double dim_min = 3.0, dim_max = 10.0;
  double reflect_min = 0.2, reflect_max = 0.8;
  int max_order = 3;
  double wall_clearance = 0.5;   // min distance of source/mic from any wall
  double min_src_mic_dist = 0.3;
};

struct RoomBank {
  std::uint64_t seed = 0;
  RoomBankRanges ranges;
  int sample_rate_hz = 16000;
  std::vector<RoomSpec> specs;
  std::vector<Rir> rirs;

  std::size_t size() const { return specs.size(); }
};

// Deterministic bank: same seed, count and ranges give identical rooms.
RoomBank sample_room_bank(std::size_t count, const RoomBankRanges& ranges,
                          std::uint64_t seed, int sample_rate_hz = 16000);

// Linear-phase windowed-sinc band-pass (100..7500 Hz, 513 taps, Hamming).
// Cached per sample rate.
const std::vector<double>& bandpass_taps(int sample_rate_hz);
inline constexpr double kBandLowHz = 100.0;
inline constexpr double kBandHighHz = 7500.0;
inline constexpr std::size_t kBandTaps = 513;

// Room convolution truncated to the input length; the band-pass stage is
// group-delay compensated. Linear in the input. renormalize scales the
// output so its peak matches the input's peak (a fixed playback gain), which
// keeps levels in [-1, 1] and makes the identity response an exact no-op.
Waveform apply_room(const Waveform& x, const Rir& rir, bool bandpass,
                    bool renormalize = true);

// The same linear operator without renormalization, and its exact adjoint:
// <forward(x), y> == <x, adjoint(y)> up to rounding.
std::vector<double> room_forward(std::span<const double> x, const Rir& rir, bool bandpass,
                                 int sample_rate_hz);
std::vector<double> adjoint_apply(std::span<const double> grad_out, const Rir& rir,
                                  bool bandpass, int sample_rate_hz);

void save_room_bank(const RoomBank& bank, const std::filesystem::path& path);
RoomBank load_room_bank(const std::filesystem::path& path);

// RIR taps scaled to peak 0.9 for audition.
void export_rir_wav(const Rir& rir, int sample_rate_hz, const std::filesystem::path& path);

}  // namespace pat::room
