#include "pat/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "pat/errors.hpp"
#include "pat/fft.hpp"

namespace pat {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFullScale = 32768.0;

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;  // little-endian host assumed (checked nowhere cheaper than here)
}

template <typename T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

void FrameConfig::validate() const {
  if (!is_pow2(frame_len))
    throw ArgumentError("frame_len must be a power of two, got " + std::to_string(frame_len));
  if (hop < 1 || hop > frame_len)
    throw ArgumentError("hop must satisfy 1 <= hop <= frame_len");
}

std::size_t FrameConfig::num_frames(std::size_t n_samples) const {
  return n_samples == 0 ? 0 : (n_samples + hop - 1) / hop;
}

std::vector<double> window_curve(Window w, std::size_t len) {
  std::vector<double> c(len, 1.0);
  if (w == Window::Hann && len > 1) {
    for (std::size_t k = 0; k < len; ++k)
      c[k] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) /
                                   static_cast<double>(len - 1)));
  }
  return c;
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw IoError("read failure on " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t n = raw.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError(path.string() + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::vector<double> samples;
  bool have_data = false;

  std::size_t off = 12;
  while (off + 8 <= n) {
    char id[4];
    std::memcpy(id, p + off, 4);
    const std::uint32_t sz = read_le<std::uint32_t>(p + off + 4);
    off += 8;
    if (off + sz > n) throw CorruptFileError(path.string() + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) throw CorruptFileError(path.string() + ": short fmt chunk");
      audio_format = read_le<std::uint16_t>(p + off);
      channels = read_le<std::uint16_t>(p + off + 2);
      sample_rate = read_le<std::uint32_t>(p + off + 4);
      bits = read_le<std::uint16_t>(p + off + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw CorruptFileError(path.string() + ": data chunk before fmt");
      if (audio_format != 1) throw FormatError(path.string() + ": only PCM supported");
      if (channels != 1) throw FormatError(path.string() + ": only mono supported");
      if (bits != 16) throw FormatError(path.string() + ": only 16-bit samples supported");
      const std::size_t count = sz / 2;
      samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto s = read_le<std::int16_t>(p + off + 2 * i);
        samples[i] = static_cast<double>(s) / kFullScale;
      }
      have_data = true;
    }
    off += sz + (sz & 1);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw CorruptFileError(path.string() + ": missing fmt or data chunk");
  Waveform w;
  w.samples = std::move(samples);
  w.sample_rate_hz = static_cast<int>(sample_rate);
  return w;
}

void save_wav(const Waveform& w, const std::filesystem::path& path) {
  std::string out;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  append_le<std::uint32_t>(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, 1);  // PCM
  append_le<std::uint16_t>(out, 1);  // mono
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  append_le<std::uint16_t>(out, 2);   // block align
  append_le<std::uint16_t>(out, 16);  // bits
  out.append("data");
  append_le<std::uint32_t>(out, data_bytes);
  for (double s : w.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    auto q = static_cast<long long>(std::llround(c * kFullScale));
    q = std::clamp<long long>(q, -32768, 32767);
    append_le<std::int16_t>(out, static_cast<std::int16_t>(q));
  }
  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) throw IoError("cannot open " + path.string() + " for writing");
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) throw IoError("write failure on " + path.string());
}

FrameSet segment(const Waveform& w, const FrameConfig& cfg) {
  cfg.validate();
  const std::size_t n = w.samples.size();
  const std::size_t nf = cfg.num_frames(n);
  FrameSet fs;
  fs.config = cfg;
  fs.sample_rate_hz = w.sample_rate_hz;
  fs.frames = Mat(nf, cfg.frame_len);
  fs.origin_offsets.resize(nf);
  const auto win = window_curve(cfg.window, cfg.frame_len);
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t start = f * cfg.hop;
    fs.origin_offsets[f] = start;
    auto row = fs.frames.row(f);
    const std::size_t avail = start < n ? std::min(cfg.frame_len, n - start) : 0;
    for (std::size_t k = 0; k < avail; ++k) row[k] = w.samples[start + k] * win[k];
    // remainder stays zero-padded
  }
  return fs;
}

Spectrum spectrum(const FrameSet& frames) {
  const std::size_t L = frames.config.frame_len;
  const std::size_t nb = frames.config.num_bins();
  Spectrum sp;
  sp.num_frames = frames.num_frames();
  sp.num_bins = nb;
  sp.config = frames.config;
  sp.sample_rate_hz = frames.sample_rate_hz;
  sp.bins.resize(sp.num_frames * nb);
  sp.psd_db = Mat(sp.num_frames, nb);
  for (std::size_t f = 0; f < sp.num_frames; ++f) {
    auto full = fft_real(frames.frames.row(f));
    for (std::size_t k = 0; k < nb; ++k) {
      sp.bins[f * nb + k] = full[k];
      sp.psd_db(f, k) = 10.0 * std::log10(std::norm(full[k]) + kPsdFloor);
    }
    (void)L;
  }
  return sp;
}

double snr_db(const Waveform& x, const Waveform& delta) {
  if (x.samples.size() != delta.samples.size())
    throw ArgumentError("snr_db: length mismatch");
  double ex = 0.0, ed = 0.0;
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    ex += x.samples[i] * x.samples[i];
    ed += delta.samples[i] * delta.samples[i];
  }
  if (ed == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ex / ed);
}

void write_frame_matrix_csv(const Mat& m, double bin_hz_step,
                            const std::filesystem::path& path) {
  std::ofstream of(path, std::ios::trunc);
  if (!of) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  for (std::size_t k = 0; k < m.cols; ++k) {
    std::snprintf(buf, sizeof(buf), "%.6g", bin_hz_step * static_cast<double>(k));
    if (k) of << ',';
    of << buf;
  }
  of << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t k = 0; k < m.cols; ++k) {
      std::snprintf(buf, sizeof(buf), "%.6g", m(r, k));
      if (k) of << ',';
      of << buf;
    }
    of << '\n';
  }
  if (!of) throw IoError("write failure on " + path.string());
}

void export_spectrogram_csv(const Waveform& w, const FrameConfig& cfg,
                            const std::filesystem::path& path) {
  const Spectrum sp = spectrum(segment(w, cfg));
  const double step = static_cast<double>(w.sample_rate_hz) / static_cast<double>(cfg.frame_len);
  write_frame_matrix_csv(sp.psd_db, step, path);
}

}  // namespace pat
