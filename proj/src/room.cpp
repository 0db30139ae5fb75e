#include "pat/room.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/rng.hpp"

namespace pat::room {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Direct convolution is exact and cheap for short kernels; long kernels go
// through the transform. The cutover keeps single-tap responses (identity
// rooms) on the exact path.
constexpr std::size_t kDirectConvMaxTaps = 64;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> convolve_full(std::span<const double> x, std::span<const double> h) {
  const std::size_t n = x.size(), m = h.size();
  if (n == 0 || m == 0) return {};
  std::vector<double> full(n + m - 1, 0.0);
  if (m <= kDirectConvMaxTaps) {
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) full[i + j] += xi * h[j];
    }
    return full;
  }
  const std::size_t nfft = next_pow2(n + m - 1);
  std::vector<std::complex<double>> a(nfft), b(nfft);
  for (std::size_t i = 0; i < n; ++i) a[i] = {x[i], 0.0};
  for (std::size_t j = 0; j < m; ++j) b[j] = {h[j], 0.0};
  fft(a, false);
  fft(b, false);
  const double s = std::sqrt(static_cast<double>(nfft));  // unitary transform pair
  for (std::size_t k = 0; k < nfft; ++k) a[k] *= b[k] * s;
  fft(a, true);
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = a[i].real();
  return full;
}

// y[t] = (x conv h)[t + lead] truncated to out_len.
std::vector<double> fir_apply(std::span<const double> x, std::span<const double> h,
                              long lead, std::size_t out_len) {
  const auto full = convolve_full(x, h);
  std::vector<double> y(out_len, 0.0);
  for (std::size_t t = 0; t < out_len; ++t) {
    const long u = static_cast<long>(t) + lead;
    if (u >= 0 && static_cast<std::size_t>(u) < full.size()) y[t] = full[u];
  }
  return y;
}

// Exact adjoint of fir_apply for fixed h, lead and lengths.
std::vector<double> fir_adjoint(std::span<const double> g, std::span<const double> h,
                                long lead, std::size_t in_len) {
  std::vector<double> hrev(h.rbegin(), h.rend());
  const auto full = convolve_full(g, hrev);
  const long shift = static_cast<long>(h.size()) - 1 - lead;
  std::vector<double> out(in_len, 0.0);
  for (std::size_t j = 0; j < in_len; ++j) {
    const long u = static_cast<long>(j) + shift;
    if (u >= 0 && static_cast<std::size_t>(u) < full.size()) out[j] = full[u];
  }
  return out;
}

struct TapAccum {
  std::map<long, double> taps;  // ordered: deterministic dense layout
  void add(long idx, double amp) {
    if (amp != 0.0) taps[idx] += amp;
  }
};

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

void RoomSpec::validate() const {
  for (double d : dims)
    if (!(d > 0.0)) throw ArgumentError("room: dimensions must be positive");
  for (int i = 0; i < 3; ++i) {
    if (!(source[i] > 0.0 && source[i] < dims[i]))
      throw ArgumentError("room: source outside the room");
    if (!(mic[i] > 0.0 && mic[i] < dims[i]))
      throw ArgumentError("room: mic outside the room");
  }
  for (double r : reflect)
    if (!(r >= 0.0 && r < 1.0))
      throw ArgumentError("room: reflection coefficients must be in [0, 1)");
  if (max_order < 0) throw ArgumentError("room: negative reflection order");
  if (!(speed_of_sound > 0.0)) throw ArgumentError("room: bad speed of sound");
  if (sample_rate_hz <= 0) throw ArgumentError("room: bad sample rate");
  if (dist3(source, mic) < 1e-6)
    throw ArgumentError("room: source and mic must not coincide");
}

Rir image_source_rir(const RoomSpec& spec, bool fractional_delay) {
  spec.validate();
  TapAccum acc;
  const int mrange = spec.max_order + 1;
  constexpr int kSincHalf = 16;

  for (int px = 0; px <= 1; ++px)
    for (int py = 0; py <= 1; ++py)
      for (int pz = 0; pz <= 1; ++pz)
        for (int mx = -mrange; mx <= mrange; ++mx)
          for (int my = -mrange; my <= mrange; ++my)
            for (int mz = -mrange; mz <= mrange; ++mz) {
              const int p[3] = {px, py, pz};
              const int m[3] = {mx, my, mz};
              int hits = 0;
              for (int i = 0; i < 3; ++i) hits += std::abs(m[i] - p[i]) + std::abs(m[i]);
              if (hits > spec.max_order) continue;

              std::array<double, 3> img;
              double gain = 1.0;
              for (int i = 0; i < 3; ++i) {
                img[i] = (1.0 - 2.0 * p[i]) * spec.source[i] + 2.0 * m[i] * spec.dims[i];
                gain *= std::pow(spec.reflect[2 * i], std::abs(m[i] - p[i])) *
                        std::pow(spec.reflect[2 * i + 1], std::abs(m[i]));
              }
              if (gain == 0.0) continue;
              const double d = dist3(img, spec.mic);
              const double amp = gain / (4.0 * kPi * d);
              const double delay = d / spec.speed_of_sound * spec.sample_rate_hz;
              if (!fractional_delay) {
                acc.add(std::lround(delay), amp);
              } else {
                const long lo = static_cast<long>(std::ceil(delay)) - kSincHalf;
                const long hi = static_cast<long>(std::floor(delay)) + kSincHalf;
                for (long j = std::max(0L, lo); j <= hi; ++j) {
                  const double u = static_cast<double>(j) - delay;
                  const double sinc = u == 0.0 ? 1.0 : std::sin(kPi * u) / (kPi * u);
                  const double win = 0.5 * (1.0 + std::cos(kPi * u / kSincHalf));
                  acc.add(j, amp * sinc * win);
                }
              }
            }

  if (acc.taps.empty()) return Rir{0, {}};
  Rir rir;
  rir.first_tap = static_cast<std::size_t>(std::max(0L, acc.taps.begin()->first));
  const long last = acc.taps.rbegin()->first;
  rir.taps.assign(static_cast<std::size_t>(last) - rir.first_tap + 1, 0.0);
  for (const auto& [idx, amp] : acc.taps)
    if (idx >= 0) rir.taps[static_cast<std::size_t>(idx) - rir.first_tap] = amp;
  return rir;
}

RoomBank sample_room_bank(std::size_t count, const RoomBankRanges& ranges,
                          std::uint64_t seed, int sample_rate_hz) {
  if (!(ranges.dim_min > 2.0 * ranges.wall_clearance))
    throw ArgumentError("room bank: dim_min leaves no space inside the walls");
  if (!(ranges.dim_max >= ranges.dim_min))
    throw ArgumentError("room bank: dim_max < dim_min");
  if (!(ranges.reflect_min >= 0.0 && ranges.reflect_max < 1.0 &&
        ranges.reflect_max >= ranges.reflect_min))
    throw ArgumentError("room bank: bad reflection range");

  RoomBank bank;
  bank.seed = seed;
  bank.ranges = ranges;
  bank.sample_rate_hz = sample_rate_hz;
  Rng rng(seed);
  for (std::size_t r = 0; r < count; ++r) {
    RoomSpec spec;
    spec.max_order = ranges.max_order;
    spec.sample_rate_hz = sample_rate_hz;
    for (int i = 0; i < 3; ++i) spec.dims[i] = rng.uniform(ranges.dim_min, ranges.dim_max);
    for (int i = 0; i < 6; ++i)
      spec.reflect[i] = rng.uniform(ranges.reflect_min, ranges.reflect_max);
    for (int i = 0; i < 3; ++i)
      spec.source[i] = rng.uniform(ranges.wall_clearance, spec.dims[i] - ranges.wall_clearance);
    for (int attempt = 0;; ++attempt) {
      for (int i = 0; i < 3; ++i)
        spec.mic[i] = rng.uniform(ranges.wall_clearance, spec.dims[i] - ranges.wall_clearance);
      if (dist3(spec.source, spec.mic) >= ranges.min_src_mic_dist) break;
      if (attempt > 1000)
        throw ArgumentError("room bank: cannot separate source and mic; widen the ranges");
    }
    bank.specs.push_back(spec);
    bank.rirs.push_back(image_source_rir(spec));
  }
  return bank;
}

const std::vector<double>& bandpass_taps(int sample_rate_hz) {
  if (sample_rate_hz < 2 * static_cast<int>(kBandHighHz) + 1)
    throw ArgumentError("bandpass: sample rate too low for the 7.5 kHz band edge");
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(sample_rate_hz);
  if (it != cache.end()) return it->second;

  std::vector<double> h(kBandTaps);
  const auto M = static_cast<long>(kBandTaps / 2);
  const double fs = sample_rate_hz;
  for (std::size_t n = 0; n < kBandTaps; ++n) {
    const long t = static_cast<long>(n) - M;
    double v;
    if (t == 0) {
      v = 2.0 * (kBandHighHz - kBandLowHz) / fs;
    } else {
      v = (std::sin(2.0 * kPi * kBandHighHz * t / fs) -
           std::sin(2.0 * kPi * kBandLowHz * t / fs)) /
          (kPi * t);
    }
    const double w =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / (kBandTaps - 1));
    h[n] = v * w;
  }
  return cache.emplace(sample_rate_hz, std::move(h)).first->second;
}

std::vector<double> room_forward(std::span<const double> x, const Rir& rir, bool bandpass,
                                 int sample_rate_hz) {
  auto v = fir_apply(x, rir.taps, -static_cast<long>(rir.first_tap), x.size());
  if (bandpass) {
    const auto& bp = bandpass_taps(sample_rate_hz);
    v = fir_apply(v, bp, static_cast<long>(kBandTaps / 2), x.size());
  }
  return v;
}

std::vector<double> adjoint_apply(std::span<const double> grad_out, const Rir& rir,
                                  bool bandpass, int sample_rate_hz) {
  std::vector<double> g(grad_out.begin(), grad_out.end());
  if (bandpass) {
    const auto& bp = bandpass_taps(sample_rate_hz);
    g = fir_adjoint(g, bp, static_cast<long>(kBandTaps / 2), grad_out.size());
  }
  return fir_adjoint(g, rir.taps, -static_cast<long>(rir.first_tap), grad_out.size());
}

Waveform apply_room(const Waveform& x, const Rir& rir, bool bandpass, bool renormalize) {
  Waveform out;
  out.sample_rate_hz = x.sample_rate_hz;
  out.samples = room_forward(x.samples, rir, bandpass, x.sample_rate_hz);
  if (renormalize) {
    double peak_in = 0.0, peak_out = 0.0;
    for (double v : x.samples) peak_in = std::max(peak_in, std::abs(v));
    for (double v : out.samples) peak_out = std::max(peak_out, std::abs(v));
    if (peak_in > 0.0 && peak_out > 0.0) {
      const double scale = peak_in / peak_out;
      if (scale != 1.0)
        for (double& v : out.samples) v *= scale;
    }
  }
  return out;
}

// ---- bank file format ---------------------------------------------------

namespace {

constexpr char kBankMagic[4] = {'P', 'A', 'R', 'B'};
constexpr std::uint32_t kBankVersion = 1;

struct BankReader {
  const std::string& buf;
  std::size_t off = 0;
  void need(std::size_t n) const {
    if (off + n > buf.size()) throw CorruptFileError("room bank truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
  }
};

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

}  // namespace

void save_room_bank(const RoomBank& bank, const std::filesystem::path& path) {
  std::string out;
  out.append(kBankMagic, 4);
  put<std::uint32_t>(out, kBankVersion);
  put<std::uint64_t>(out, bank.seed);
  put<double>(out, bank.ranges.dim_min);
  put<double>(out, bank.ranges.dim_max);
  put<double>(out, bank.ranges.reflect_min);
  put<double>(out, bank.ranges.reflect_max);
  put<double>(out, bank.ranges.wall_clearance);
  put<double>(out, bank.ranges.min_src_mic_dist);
  put<std::int32_t>(out, bank.ranges.max_order);
  put<std::int32_t>(out, bank.sample_rate_hz);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bank.size()));
  for (std::size_t r = 0; r < bank.size(); ++r) {
    const RoomSpec& s = bank.specs[r];
    for (double d : s.dims) put<double>(out, d);
    for (double d : s.source) put<double>(out, d);
    for (double d : s.mic) put<double>(out, d);
    for (double d : s.reflect) put<double>(out, d);
    put<std::int32_t>(out, s.max_order);
    put<double>(out, s.speed_of_sound);
    put<std::int32_t>(out, s.sample_rate_hz);
    const Rir& h = bank.rirs[r];
    put<std::uint64_t>(out, h.first_tap);
    put<std::uint64_t>(out, h.taps.size());
    out.append(reinterpret_cast<const char*>(h.taps.data()), h.taps.size() * sizeof(double));
  }
  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) throw IoError("cannot open " + path.string() + " for writing");
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) throw IoError("write failure on " + path.string());
}

RoomBank load_room_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kBankMagic, 4) != 0)
    throw FormatError(path.string() + ": not a room bank file");
  BankReader r{buf, 4};
  const auto version = r.get<std::uint32_t>();
  if (version != kBankVersion)
    throw FormatError(path.string() + ": unsupported bank version");

  RoomBank bank;
  bank.seed = r.get<std::uint64_t>();
  bank.ranges.dim_min = r.get<double>();
  bank.ranges.dim_max = r.get<double>();
  bank.ranges.reflect_min = r.get<double>();
  bank.ranges.reflect_max = r.get<double>();
  bank.ranges.wall_clearance = r.get<double>();
  bank.ranges.min_src_mic_dist = r.get<double>();
  bank.ranges.max_order = r.get<std::int32_t>();
  bank.sample_rate_hz = r.get<std::int32_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    RoomSpec s;
    for (double& d : s.dims) d = r.get<double>();
    for (double& d : s.source) d = r.get<double>();
    for (double& d : s.mic) d = r.get<double>();
    for (double& d : s.reflect) d = r.get<double>();
    s.max_order = r.get<std::int32_t>();
    s.speed_of_sound = r.get<double>();
    s.sample_rate_hz = r.get<std::int32_t>();
    Rir h;
    h.first_tap = static_cast<std::size_t>(r.get<std::uint64_t>());
    const auto ntaps = static_cast<std::size_t>(r.get<std::uint64_t>());
    r.need(ntaps * sizeof(double));
    h.taps.resize(ntaps);
    std::memcpy(h.taps.data(), buf.data() + r.off, ntaps * sizeof(double));
    r.off += ntaps * sizeof(double);
    bank.specs.push_back(s);
    bank.rirs.push_back(std::move(h));
  }
  if (r.off != buf.size())
    throw CorruptFileError(path.string() + ": trailing bytes after bank payload");
  return bank;
}

void export_rir_wav(const Rir& rir, int sample_rate_hz, const std::filesystem::path& path) {
  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.assign(rir.length(), 0.0);
  double peak = 0.0;
  for (double t : rir.taps) peak = std::max(peak, std::abs(t));
  const double scale = peak > 0.0 ? 0.9 / peak : 1.0;
  for (std::size_t i = 0; i < rir.taps.size(); ++i)
    w.samples[rir.first_tap + i] = rir.taps[i] * scale;
  save_wav(w, path);
}

}  // namespace pat::room
