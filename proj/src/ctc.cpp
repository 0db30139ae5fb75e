#include "pat/ctc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>

#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/rng.hpp"

namespace pat::ctc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// out = x * w^T + b, rows of x against rows of w (both contiguous).
// Four-lane accumulation so the reduction vectorizes under strict FP rules.
void affine_rows(const Mat& x, const Mat& w, const std::vector<double>& b, Mat& out) {
  out = Mat(x.rows, w.rows);
  const std::size_t d = x.cols;
  const std::size_t d4 = d - d % 4;
  for (std::size_t t = 0; t < x.rows; ++t) {
    const double* xr = x.data.data() + t * d;
    for (std::size_t h = 0; h < w.rows; ++h) {
      const double* wr = w.data.data() + h * d;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      for (std::size_t i = 0; i < d4; i += 4) {
        a0 += xr[i] * wr[i];
        a1 += xr[i + 1] * wr[i + 1];
        a2 += xr[i + 2] * wr[i + 2];
        a3 += xr[i + 3] * wr[i + 3];
      }
      double acc = b[h] + ((a0 + a1) + (a2 + a3));
      for (std::size_t i = d4; i < d; ++i) acc += xr[i] * wr[i];
      out(t, h) = acc;
    }
  }
}

// dx = dy * w  (dy: T x H, w: H x D -> dx: T x D)
void backprop_rows(const Mat& dy, const Mat& w, Mat& dx) {
  dx = Mat(dy.rows, w.cols);
  for (std::size_t t = 0; t < dy.rows; ++t) {
    double* xr = dx.data.data() + t * dx.cols;
    for (std::size_t h = 0; h < dy.cols; ++h) {
      const double g = dy(t, h);
      if (g == 0.0) continue;
      const double* wr = w.data.data() + h * w.cols;
      for (std::size_t i = 0; i < w.cols; ++i) xr[i] += g * wr[i];
    }
  }
}

// dw += dy^T * x, db += column sums of dy.
void accumulate_param_grads(const Mat& dy, const Mat& x, Mat& dw, std::vector<double>& db) {
  for (std::size_t t = 0; t < dy.rows; ++t) {
    const double* xr = x.data.data() + t * x.cols;
    for (std::size_t h = 0; h < dy.cols; ++h) {
      const double g = dy(t, h);
      db[h] += g;
      if (g == 0.0) continue;
      double* wr = dw.data.data() + h * dw.cols;
      for (std::size_t i = 0; i < x.cols; ++i) wr[i] += g * xr[i];
    }
  }
}

void tanh_backward(const Mat& h, Mat& dh) {
  for (std::size_t i = 0; i < h.data.size(); ++i) dh.data[i] *= 1.0 - h.data[i] * h.data[i];
}

struct ForwardTrace {
  std::vector<std::vector<std::complex<double>>> spectra;  // per frame, full bins
  Mat power;    // T x n_bins
  Mat stacked;  // T x 3*n_bins
  Mat h1, h2;   // T x hidden
  Mat logits;   // T x classes
  std::size_t signal_len = 0;
};

ForwardTrace forward_trace(const MicroCtcModel& model, const Waveform& x) {
  if (x.sample_rate_hz != model.sample_rate_hz)
    throw ArgumentError("forward: sample rate does not match the model");
  const FrameConfig& fc = model.features.frames;
  const FrameSet frames = segment(x, fc);
  const std::size_t T = frames.num_frames();
  const std::size_t nb = fc.num_bins();

  ForwardTrace tr;
  tr.signal_len = x.samples.size();
  tr.spectra.resize(T);
  tr.power = Mat(T, nb);
  Mat feat(T, nb);
  for (std::size_t t = 0; t < T; ++t) {
    tr.spectra[t] = fft_real(frames.frames.row(t));
    for (std::size_t k = 0; k < nb; ++k) {
      const double p = std::norm(tr.spectra[t][k]);
      tr.power(t, k) = p;
      feat(t, k) = (std::log(p + model.features.log_floor) + model.features.shift) /
                   model.features.scale;
    }
  }

  tr.stacked = Mat(T, 3 * nb);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = tr.stacked.row(t);
    if (t > 0) std::copy_n(feat.row(t - 1).data(), nb, row.data());
    std::copy_n(feat.row(t).data(), nb, row.data() + nb);
    if (t + 1 < T) std::copy_n(feat.row(t + 1).data(), nb, row.data() + 2 * nb);
  }

  affine_rows(tr.stacked, model.w1, model.b1, tr.h1);
  for (double& v : tr.h1.data) v = std::tanh(v);
  affine_rows(tr.h1, model.w2, model.b2, tr.h2);
  for (double& v : tr.h2.data) v = std::tanh(v);
  affine_rows(tr.h2, model.w3, model.b3, tr.logits);
  return tr;
}

struct ParamGrads {
  Mat w1, w2, w3;
  std::vector<double> b1, b2, b3;
};

// Backprop from d loss / d logits. Returns d loss / d stacked features;
// param gradients are accumulated into *pg when given.
Mat backward_net(const MicroCtcModel& model, const ForwardTrace& tr, const Mat& dlogits,
                 ParamGrads* pg) {
  if (pg) accumulate_param_grads(dlogits, tr.h2, pg->w3, pg->b3);
  Mat dh2;
  backprop_rows(dlogits, model.w3, dh2);
  tanh_backward(tr.h2, dh2);
  if (pg) accumulate_param_grads(dh2, tr.h1, pg->w2, pg->b2);
  Mat dh1;
  backprop_rows(dh2, model.w2, dh1);
  tanh_backward(tr.h1, dh1);
  if (pg) accumulate_param_grads(dh1, tr.stacked, pg->w1, pg->b1);
  Mat dstacked;
  backprop_rows(dh1, model.w1, dstacked);
  return dstacked;
}

// Transport d loss / d stacked back to the waveform.
std::vector<double> backward_features(const MicroCtcModel& model, const ForwardTrace& tr,
                                      const Mat& dstacked) {
  const FrameConfig& fc = model.features.frames;
  const std::size_t T = tr.power.rows;
  const std::size_t nb = fc.num_bins();
  const std::size_t L = fc.frame_len;

  // Undo the +/-1 context stacking.
  Mat dfeat(T, nb);
  for (std::size_t t = 0; t < T; ++t) {
    auto out = dfeat.row(t);
    if (t + 1 < T) {
      auto src = dstacked.row(t + 1);
      for (std::size_t k = 0; k < nb; ++k) out[k] += src[k];
    }
    {
      auto src = dstacked.row(t);
      for (std::size_t k = 0; k < nb; ++k) out[k] += src[nb + k];
    }
    if (t > 0) {
      auto src = dstacked.row(t - 1);
      for (std::size_t k = 0; k < nb; ++k) out[k] += src[2 * nb + k];
    }
  }

  // d|X_k|^2 / d frame maps back through the inverse transform. Interior
  // bins pick up their mirror image automatically; DC and Nyquist appear
  // once in the spectrum, so they carry the factor of two themselves.
  const auto win = window_curve(fc.window, L);
  std::vector<double> grad(tr.signal_len, 0.0);
  std::vector<std::complex<double>> u(L);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < nb; ++k) {
      const double dp = dfeat(t, k) /
                        (model.features.scale * (tr.power(t, k) + model.features.log_floor));
      const double factor = (k == 0 || k == L / 2) ? 2.0 : 1.0;
      u[k] = factor * dp * tr.spectra[t][k];
    }
    for (std::size_t k = 1; k < L / 2; ++k) u[L - k] = std::conj(u[k]);
    std::vector<std::complex<double>> buf = u;
    fft(buf, /*inverse=*/true);
    const std::size_t start = t * fc.hop;
    const std::size_t avail =
        start < tr.signal_len ? std::min(L, tr.signal_len - start) : 0;
    for (std::size_t k = 0; k < avail; ++k) grad[start + k] += win[k] * buf[k].real();
  }
  return grad;
}

void init_mat(Mat& m, std::size_t rows, std::size_t cols, Rng& rng) {
  m = Mat(rows, cols);
  for (double& v : m.data) v = rng.uniform(-0.1, 0.1);
}

void init_vec(std::vector<double>& v, std::size_t n, Rng& rng) {
  v.assign(n, 0.0);
  for (double& x : v) x = rng.uniform(-0.1, 0.1);
}

// ---- model file format ------------------------------------------------

constexpr char kModelMagic[4] = {'P', 'A', 'T', 'M'};
constexpr std::uint32_t kModelVersion = 1;

struct ByteReader {
  const std::string& buf;
  std::size_t off = 0;
  void need(std::size_t n) const {
    if (off + n > buf.size()) throw CorruptFileError("model file truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
  }
  void get_doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, buf.data() + off, n * sizeof(double));
    off += n * sizeof(double);
  }
};

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

void put_doubles(std::string& out, const double* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

}  // namespace

const Alphabet& Alphabet::standard() {
  static const Alphabet a(" 'abcdefghijklmnopqrstuvwxyz");
  return a;
}

char Alphabet::symbol(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > symbols_.size())
    throw ArgumentError("alphabet: symbol index out of range");
  return symbols_[static_cast<std::size_t>(index) - 1];
}

int Alphabet::index(char c) const {
  const auto pos = symbols_.find(c);
  if (pos == std::string::npos)
    throw ArgumentError(std::string("alphabet: unsupported character '") + c + "'");
  return static_cast<int>(pos) + 1;
}

bool Alphabet::valid_text(std::string_view text) const {
  return std::all_of(text.begin(), text.end(),
                     [&](char c) { return symbols_.find(c) != std::string::npos; });
}

std::vector<int> Alphabet::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(index(c));
  return out;
}

std::string Alphabet::decode(std::span<const int> labels) const {
  std::string out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(symbol(l));
  return out;
}

Transcript make_transcript(std::string_view text) {
  if (!Alphabet::standard().valid_text(text))
    throw ArgumentError("transcript contains characters outside the alphabet: \"" +
                        std::string(text) + "\"");
  return Transcript{std::string(text)};
}

MicroCtcModel make_model(std::uint64_t seed, const FeatureConfig& features,
                         std::size_t hidden, int sample_rate_hz) {
  features.frames.validate();
  if (features.frames.hop != features.frames.frame_len)
    throw ArgumentError("make_model: feature frames must not overlap");
  MicroCtcModel m;
  m.features = features;
  m.sample_rate_hz = sample_rate_hz;
  m.hidden = hidden;
  m.init_seed = seed;
  Rng rng(seed);
  const std::size_t d = features.stacked_dim();
  const std::size_t c = Alphabet::standard().size();
  init_mat(m.w1, hidden, d, rng);
  init_vec(m.b1, hidden, rng);
  init_mat(m.w2, hidden, hidden, rng);
  init_vec(m.b2, hidden, rng);
  init_mat(m.w3, c, hidden, rng);
  init_vec(m.b3, c, rng);
  return m;
}

Mat forward(const MicroCtcModel& model, const Waveform& x) {
  return forward_trace(model, x).logits;
}

std::size_t min_frames_for(std::span<const int> labels) {
  std::size_t need = labels.size();
  for (std::size_t i = 0; i + 1 < labels.size(); ++i)
    if (labels[i] == labels[i + 1]) ++need;
  return need;
}

CtcEval ctc_loss(const Mat& logits, std::span<const int> labels) {
  const std::size_t T = logits.rows;
  const std::size_t C = logits.cols;
  if (T == 0 || C < 2) throw ArgumentError("ctc_loss: need at least one frame and two classes");
  for (int l : labels)
    if (l < 1 || static_cast<std::size_t>(l) >= C)
      throw ArgumentError("ctc_loss: label out of range");
  if (min_frames_for(labels) > T)
    throw InfeasibleTargetError("target needs " + std::to_string(min_frames_for(labels)) +
                                " frames but only " + std::to_string(T) + " are available");

  // Log-softmax rows.
  Mat lsm(T, C);
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = logits.row(t);
    const double m = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - m);
    const double lz = m + std::log(acc);
    for (std::size_t c = 0; c < C; ++c) lsm(t, c) = row[c] - lz;
  }

  // Blank-extended label sequence.
  const std::size_t U = labels.size();
  const std::size_t S = 2 * U + 1;
  std::vector<int> ext(S, Alphabet::kBlank);
  for (std::size_t i = 0; i < U; ++i) ext[2 * i + 1] = labels[i];

  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != Alphabet::kBlank && ext[s] != ext[s - 2];
  };

  Mat alpha(T, S), beta(T, S);
  std::fill(alpha.data.begin(), alpha.data.end(), kNegInf);
  std::fill(beta.data.begin(), beta.data.end(), kNegInf);

  alpha(0, 0) = lsm(0, ext[0]);
  if (S > 1) alpha(0, 1) = lsm(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = lse2(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = lse2(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lsm(t, ext[s]);
    }
  }

  beta(T - 1, S - 1) = lsm(T - 1, ext[S - 1]);
  if (S > 1) beta(T - 1, S - 2) = lsm(T - 1, ext[S - 2]);
  for (std::size_t ti = T - 1; ti-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta(ti + 1, s);
      if (s + 1 < S) b = lse2(b, beta(ti + 1, s + 1));
      if (s + 2 < S && can_skip(s + 2)) b = lse2(b, beta(ti + 1, s + 2));
      beta(ti, s) = b == kNegInf ? kNegInf : b + lsm(ti, ext[s]);
    }
  }

  const double log_p =
      S > 1 ? lse2(alpha(T - 1, S - 1), alpha(T - 1, S - 2)) : alpha(T - 1, S - 1);
  if (!std::isfinite(log_p))
    throw NumericError("ctc_loss: path probability underflowed to zero");

  CtcEval out;
  out.loss = -log_p;
  out.grad_logits = Mat(T, C);
  for (std::size_t t = 0; t < T; ++t) {
    // alpha and beta both include the emission at t; divide it out once.
    std::vector<double> occ(C, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      const double g = alpha(t, s) + beta(t, s) - lsm(t, ext[s]) - log_p;
      if (g != kNegInf) occ[ext[s]] += std::exp(g);
    }
    for (std::size_t c = 0; c < C; ++c)
      out.grad_logits(t, c) = std::exp(lsm(t, c)) - occ[c];
  }
  return out;
}

InputGradient input_gradient(const MicroCtcModel& model, const Waveform& x,
                             const Transcript& target, Mat* logits_out) {
  const ForwardTrace tr = forward_trace(model, x);
  const auto labels = Alphabet::standard().encode(target.text);
  CtcEval eval = ctc_loss(tr.logits, labels);
  const Mat dstacked = backward_net(model, tr, eval.grad_logits, nullptr);
  InputGradient out;
  out.loss = eval.loss;
  out.grad = backward_features(model, tr, dstacked);
  if (logits_out) *logits_out = tr.logits;
  return out;
}

std::vector<int> greedy_labels(const Mat& logits) {
  std::vector<int> out;
  int prev = Alphabet::kBlank;
  for (std::size_t t = 0; t < logits.rows; ++t) {
    const auto row = logits.row(t);
    int best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    if (best != prev && best != Alphabet::kBlank) out.push_back(best);
    prev = best;
  }
  return out;
}

Transcript greedy_decode(const Mat& logits) {
  if (logits.cols != Alphabet::standard().size())
    throw ArgumentError("greedy_decode: logits width does not match the alphabet");
  return Transcript{Alphabet::standard().decode(greedy_labels(logits))};
}

Transcript greedy_decode(const MicroCtcModel& model, const Waveform& x) {
  return greedy_decode(forward(model, x));
}

TrainResult train_toy(const MicroCtcModel& start,
                      const std::vector<std::pair<Waveform, Transcript>>& corpus,
                      int epochs, double learning_rate) {
  if (corpus.empty()) throw ArgumentError("train_toy: empty corpus");
  if (epochs < 0) throw ArgumentError("train_toy: negative epoch count");

  TrainResult res;
  res.model = start;
  MicroCtcModel& m = res.model;

  // Features of a fixed corpus never change; compute them once.
  struct Prep {
    Mat stacked;
    std::vector<int> labels;
  };
  std::vector<Prep> prep;
  for (const auto& [wav, txt] : corpus) {
    ForwardTrace tr = forward_trace(m, wav);
    const auto labels = Alphabet::standard().encode(txt.text);
    if (min_frames_for(labels) > tr.stacked.rows) {
      ++res.skipped_utterances;
      continue;
    }
    prep.push_back({std::move(tr.stacked), labels});
  }
  if (prep.empty()) throw ArgumentError("train_toy: every utterance was infeasible");
  const double inv_batch = 1.0 / static_cast<double>(prep.size());

  constexpr double kAdamB1 = 0.9, kAdamB2 = 0.999, kAdamEps = 1e-8;
  std::array<std::vector<double>, 6> adam_m, adam_v;
  {
    const std::size_t sizes[6] = {m.w1.data.size(), m.b1.size(), m.w2.data.size(),
                                  m.b2.size(),      m.w3.data.size(), m.b3.size()};
    for (int s = 0; s < 6; ++s) {
      adam_m[s].assign(sizes[s], 0.0);
      adam_v[s].assign(sizes[s], 0.0);
    }
  }
  long adam_t = 0;

  ParamGrads pg;
  pg.w1 = Mat(m.w1.rows, m.w1.cols);
  pg.w2 = Mat(m.w2.rows, m.w2.cols);
  pg.w3 = Mat(m.w3.rows, m.w3.cols);
  pg.b1.resize(m.b1.size());
  pg.b2.resize(m.b2.size());
  pg.b3.resize(m.b3.size());

  for (int e = 0; e < epochs; ++e) {
    double mean_loss = 0.0;
    // One Adam step per utterance, always in corpus order. Per-parameter
    // scaling plus the extra step count walk out of the blank-heavy region
    // CTC training starts in; full-batch plain descent stalls there for
    // hundreds of epochs. Deterministic: no randomness beyond the init seed.
    for (const auto& p : prep) {
      ForwardTrace tr;
      tr.stacked = p.stacked;  // net inputs only; spectra not needed here
      affine_rows(tr.stacked, m.w1, m.b1, tr.h1);
      for (double& v : tr.h1.data) v = std::tanh(v);
      affine_rows(tr.h1, m.w2, m.b2, tr.h2);
      for (double& v : tr.h2.data) v = std::tanh(v);
      affine_rows(tr.h2, m.w3, m.b3, tr.logits);

      CtcEval eval = ctc_loss(tr.logits, p.labels);
      mean_loss += eval.loss * inv_batch;
      if (learning_rate == 0.0) continue;

      std::fill(pg.w1.data.begin(), pg.w1.data.end(), 0.0);
      std::fill(pg.w2.data.begin(), pg.w2.data.end(), 0.0);
      std::fill(pg.w3.data.begin(), pg.w3.data.end(), 0.0);
      std::fill(pg.b1.begin(), pg.b1.end(), 0.0);
      std::fill(pg.b2.begin(), pg.b2.end(), 0.0);
      std::fill(pg.b3.begin(), pg.b3.end(), 0.0);
      backward_net(m, tr, eval.grad_logits, &pg);

      ++adam_t;
      const double c1 = 1.0 - std::pow(kAdamB1, adam_t);
      const double c2 = 1.0 - std::pow(kAdamB2, adam_t);
      auto step = [&](std::span<double> w, std::span<const double> g, std::size_t slot) {
        std::vector<double>& mom = adam_m[slot];
        std::vector<double>& var = adam_v[slot];
        for (std::size_t i = 0; i < w.size(); ++i) {
          mom[i] = kAdamB1 * mom[i] + (1.0 - kAdamB1) * g[i];
          var[i] = kAdamB2 * var[i] + (1.0 - kAdamB2) * g[i] * g[i];
          w[i] -= learning_rate * (mom[i] / c1) / (std::sqrt(var[i] / c2) + kAdamEps);
        }
      };
      step(m.w1.data, pg.w1.data, 0);
      step(m.b1, pg.b1, 1);
      step(m.w2.data, pg.w2.data, 2);
      step(m.b2, pg.b2, 3);
      step(m.w3.data, pg.w3.data, 4);
      step(m.b3, pg.b3, 5);
    }
    res.epoch_loss.push_back(mean_loss);
  }
  for (std::size_t e = 1; e < res.epoch_loss.size(); ++e)
    res.loss_tolerance =
        std::max(res.loss_tolerance, res.epoch_loss[e] - res.epoch_loss[e - 1]);
  return res;
}

void save_model(const MicroCtcModel& m, const std::filesystem::path& path) {
  std::string out;
  out.append(kModelMagic, 4);
  put<std::uint32_t>(out, kModelVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.sample_rate_hz));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.features.frames.frame_len));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.features.frames.hop));
  put<std::uint32_t>(out, m.features.frames.window == Window::Hann ? 1u : 0u);
  put<double>(out, m.features.log_floor);
  put<double>(out, m.features.shift);
  put<double>(out, m.features.scale);
  put<std::uint64_t>(out, m.init_seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.hidden));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_classes()));
  put_doubles(out, m.w1.data.data(), m.w1.data.size());
  put_doubles(out, m.b1.data(), m.b1.size());
  put_doubles(out, m.w2.data.data(), m.w2.data.size());
  put_doubles(out, m.b2.data(), m.b2.size());
  put_doubles(out, m.w3.data.data(), m.w3.data.size());
  put_doubles(out, m.b3.data(), m.b3.size());

  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) throw IoError("cannot open " + path.string() + " for writing");
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) throw IoError("write failure on " + path.string());
}

MicroCtcModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kModelMagic, 4) != 0)
    throw FormatError(path.string() + ": not a model file");
  ByteReader r{buf, 4};
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion)
    throw FormatError(path.string() + ": unsupported model version " + std::to_string(version));

  MicroCtcModel m;
  m.sample_rate_hz = static_cast<int>(r.get<std::uint32_t>());
  m.features.frames.frame_len = r.get<std::uint32_t>();
  m.features.frames.hop = r.get<std::uint32_t>();
  m.features.frames.window = r.get<std::uint32_t>() ? Window::Hann : Window::Rectangular;
  m.features.log_floor = r.get<double>();
  m.features.shift = r.get<double>();
  m.features.scale = r.get<double>();
  m.init_seed = r.get<std::uint64_t>();
  m.hidden = r.get<std::uint32_t>();
  const auto classes = r.get<std::uint32_t>();
  m.features.frames.validate();
  if (classes != Alphabet::standard().size())
    throw CorruptFileError(path.string() + ": class count does not match the alphabet");

  const std::size_t d = m.features.stacked_dim();
  m.w1 = Mat(m.hidden, d);
  r.get_doubles(m.w1.data.data(), m.w1.data.size());
  m.b1.resize(m.hidden);
  r.get_doubles(m.b1.data(), m.b1.size());
  m.w2 = Mat(m.hidden, m.hidden);
  r.get_doubles(m.w2.data.data(), m.w2.data.size());
  m.b2.resize(m.hidden);
  r.get_doubles(m.b2.data(), m.b2.size());
  m.w3 = Mat(classes, m.hidden);
  r.get_doubles(m.w3.data.data(), m.w3.data.size());
  m.b3.resize(classes);
  r.get_doubles(m.b3.data(), m.b3.size());
  if (r.off != buf.size())
    throw CorruptFileError(path.string() + ": trailing bytes after model payload");
  return m;
}

}  // namespace pat::ctc
