#include "pat/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "pat/errors.hpp"
#include "pat/rng.hpp"

namespace pat::attack {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kZeroGradFloor = 1e-12;

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double peak_abs(std::span<const double> v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, std::abs(x));
  return p;
}

struct CtcOutcome {
  double loss = kNan;
  bool match = false;        // training-view decode equals the target
  std::vector<double> grad;  // empty unless requested
};

// The recognizer term as seen by the optimizer. Plain attacks feed the
// waveform straight in; the expectation-over-rooms variant averages over
// sampled room responses. confirm() is the authoritative success check and
// is only called on iterates whose training view already matches.
class CtcTerm {
 public:
  virtual ~CtcTerm() = default;
  virtual CtcOutcome eval(const Waveform& xadv, bool want_grad) = 0;
  virtual bool confirm(const Waveform& xadv) = 0;
  virtual ctc::Transcript decode(const Waveform& xadv) = 0;
};

class PlainTerm : public CtcTerm {
 public:
  PlainTerm(const ctc::MicroCtcModel& model, const ctc::Transcript& target)
      : model_(model), target_(target),
        labels_(ctc::Alphabet::standard().encode(target.text)) {}

  CtcOutcome eval(const Waveform& xadv, bool want_grad) override {
    CtcOutcome out;
    if (want_grad) {
      Mat logits;
      auto ig = ctc::input_gradient(model_, xadv, target_, &logits);
      out.loss = ig.loss;
      out.grad = std::move(ig.grad);
      out.match = ctc::greedy_decode(logits) == target_;
    } else {
      const Mat logits = ctc::forward(model_, xadv);
      out.loss = ctc::ctc_loss(logits, labels_).loss;
      out.match = ctc::greedy_decode(logits) == target_;
    }
    return out;
  }

  bool confirm(const Waveform&) override { return true; }

  ctc::Transcript decode(const Waveform& xadv) override {
    return ctc::greedy_decode(model_, xadv);
  }

 private:
  const ctc::MicroCtcModel& model_;
  const ctc::Transcript& target_;
  std::vector<int> labels_;
};

class EotTerm : public CtcTerm {
 public:
  EotTerm(const Waveform& x, const ctc::MicroCtcModel& model,
          const ctc::Transcript& target, const EotConfig& eot)
      : model_(model), target_(target),
        labels_(ctc::Alphabet::standard().encode(target.text)),
        bank_(*eot.bank), bandpass_(eot.bandpass), fs_(x.sample_rate_hz),
        holdout_(eot.holdout), k_(eot.rooms_per_iter), rng_(eot.room_seed) {
    // Playback gain per room, frozen against the clean carrier so the room
    // operator stays exactly linear along the whole trajectory.
    const double px = peak_abs(x.samples);
    rho_.resize(bank_.size(), 1.0);
    for (std::size_t r = 0; r < bank_.size(); ++r) {
      const auto raw = room::room_forward(x.samples, bank_.rirs[r], bandpass_, fs_);
      const double pr = peak_abs(raw);
      if (px > 0.0 && pr > 0.0) rho_[r] = px / pr;
    }
    if (holdout_) {
      const auto raw = room::room_forward(x.samples, *holdout_, bandpass_, fs_);
      const double pr = peak_abs(raw);
      if (px > 0.0 && pr > 0.0) rho_holdout_ = px / pr;
    }
  }

  CtcOutcome eval(const Waveform& xadv, bool want_grad) override {
    // Partial Fisher-Yates: k distinct rooms, order fixed by the seed.
    std::vector<std::size_t> idx(bank_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t j = 0; j < k_; ++j)
      std::swap(idx[j], idx[j + rng_.integer(idx.size() - j)]);

    CtcOutcome out;
    out.match = true;
    double loss_sum = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      const std::size_t r = idx[j];
      Waveform y = through_room(xadv, bank_.rirs[r], rho_[r]);
      if (want_grad) {
        Mat logits;
        auto ig = ctc::input_gradient(model_, y, target_, &logits);
        loss_sum += ig.loss;
        out.match = out.match && ctc::greedy_decode(logits) == target_;
        auto gy = room::adjoint_apply(ig.grad, bank_.rirs[r], bandpass_, fs_);
        if (rho_[r] != 1.0)
          for (double& g : gy) g *= rho_[r];
        if (out.grad.empty()) out.grad = std::move(gy);
        else
          for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += gy[i];
      } else {
        const Mat logits = ctc::forward(model_, y);
        loss_sum += ctc::ctc_loss(logits, labels_).loss;
        out.match = out.match && ctc::greedy_decode(logits) == target_;
      }
    }
    out.loss = loss_sum;
    if (k_ > 1) {
      const double inv = 1.0 / static_cast<double>(k_);
      out.loss *= inv;
      for (double& g : out.grad) g *= inv;
    }
    return out;
  }

  bool confirm(const Waveform& xadv) override {
    if (!holdout_) return true;
    return ctc::greedy_decode(model_, through_room(xadv, *holdout_, rho_holdout_)) == target_;
  }

  ctc::Transcript decode(const Waveform& xadv) override {
    if (holdout_)
      return ctc::greedy_decode(model_, through_room(xadv, *holdout_, rho_holdout_));
    return ctc::greedy_decode(model_, xadv);
  }

 private:
  Waveform through_room(const Waveform& xadv, const room::Rir& rir, double rho) const {
    Waveform y;
    y.sample_rate_hz = fs_;
    y.samples = room::room_forward(xadv.samples, rir, bandpass_, fs_);
    if (rho != 1.0)
      for (double& v : y.samples) v *= rho;
    return y;
  }

  const ctc::MicroCtcModel& model_;
  const ctc::Transcript& target_;
  std::vector<int> labels_;
  const room::RoomBank& bank_;
  bool bandpass_;
  int fs_;
  const room::Rir* holdout_;
  double rho_holdout_ = 1.0;
  std::size_t k_;
  Rng rng_;
  std::vector<double> rho_;
};

void pgd_step_inplace(std::span<double> delta, std::span<const double> g, double mu,
                      double epsilon, std::span<const double> x) {
  const double gnorm = l2_norm(g);
  if (gnorm >= kZeroGradFloor)
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= mu * (g[i] / gnorm);
  clip_box(delta, x);
  project_l2(delta, epsilon);
  // Scaling toward zero cannot leave the box, but the composition is cheap to
  // re-check and the ordering is part of the contract.
  clip_box(delta, x);
}

TotalLoss blend(double alpha, double ctc_loss, double perc_loss) {
  TotalLoss t;
  t.ctc = ctc_loss;
  t.perceptual = perc_loss;
  if (alpha == 1.0) t.total = ctc_loss;
  else if (alpha == 0.0) t.total = perc_loss;
  else t.total = alpha * ctc_loss + (1.0 - alpha) * perc_loss;
  return t;
}

AttackResult drive(const Waveform& x, const ctc::Transcript& target,
                   const ctc::MicroCtcModel& model, const AttackConfig& cfg,
                   CtcTerm& term) {
  cfg.validate();
  if (x.size() == 0) throw ArgumentError("attack: empty carrier");
  if (x.sample_rate_hz != model.sample_rate_hz)
    throw ArgumentError("attack: carrier sample rate does not match the model");
  const auto labels = ctc::Alphabet::standard().encode(target.text);
  const std::size_t frames = model.features.frames.num_frames(x.size());
  if (ctc::min_frames_for(labels) > frames)
    throw InfeasibleTargetError("attack: target needs more frames than the carrier has");

  const FrameConfig pcfg{cfg.frame_len, cfg.frame_len, Window::Rectangular};
  const psy::MaskingAnalysis analysis =
      psy::analyze(x, pcfg, cfg.beta, cfg.sample_scale, cfg.jobs);

  const double eps = cfg.epsilon_normalized();
  const double mu0 = cfg.effective_step();
  const std::size_t n = x.size();

  // Fixed normalized steps stall once delta reaches the l2 boundary: the
  // update keeps orbiting the constrained optimum at radius ~mu. Halving the
  // step whenever the loss has not improved for a while turns that orbit into
  // convergence. Deterministic, since the loss sequence is.
  constexpr std::size_t kPlateauPatience = 150;
  constexpr double kStepFloor = 1.0 / 64.0;
  double mu = mu0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t last_improvement = 0;

  // Heavy-ball direction. Normalized per-iteration gradients flip wildly near
  // CTC alignment boundaries; the running average keeps pushing through them.
  std::vector<double> dir(n, 0.0);

  Waveform delta;
  delta.sample_rate_hz = x.sample_rate_hz;
  delta.samples.assign(n, 0.0);
  Waveform xadv;
  xadv.sample_rate_hz = x.sample_rate_hz;
  xadv.samples.resize(n);

  AttackResult res;
  std::vector<double> success_delta;
  bool succeeded = false;
  std::size_t first_success = 0;
  std::string stop = "iterations";

  std::size_t it = 0;
  for (; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) xadv.samples[i] = x.samples[i] + delta.samples[i];

    const bool trace_now =
        (cfg.trace_every != 0 && it % cfg.trace_every == 0) || it + 1 == cfg.iterations;
    const bool want_ctc = cfg.alpha > 0.0 || trace_now;
    const bool want_perc = cfg.alpha < 1.0 || trace_now;

    CtcOutcome co;
    if (want_ctc) co = term.eval(xadv, cfg.alpha > 0.0);
    psy::PerceptualEval pe;
    pe.loss = kNan;
    if (want_perc) pe = psy::perceptual_loss(delta, analysis);

    std::vector<double> g;
    if (cfg.alpha == 1.0) {
      g = std::move(co.grad);
    } else if (cfg.alpha == 0.0) {
      g = std::move(pe.grad);
    } else {
      g.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        g[i] = cfg.alpha * co.grad[i] + (1.0 - cfg.alpha) * pe.grad[i];
    }
    const TotalLoss tl = blend(cfg.alpha, co.loss, pe.loss);
    if (!std::isfinite(tl.total)) throw NumericError("attack: loss is not finite");
    const double gnorm = l2_norm(g);
    if (!std::isfinite(gnorm)) throw NumericError("attack: gradient is not finite");

    const bool success_now = co.match && term.confirm(xadv);
    if (success_now) {
      if (!succeeded) {
        succeeded = true;
        first_success = it;
      }
      success_delta = delta.samples;
    }

    if (trace_now) {
      res.trace.push_back({it, tl.total, co.loss, pe.loss, gnorm,
                           l2_norm(delta.samples), success_now});
      if (cfg.on_trace) cfg.on_trace(res.trace.back());
    }

    if (success_now && cfg.stop_on_success) {
      stop = "success";
      ++it;
      break;
    }

    if (tl.total < best_loss) {
      best_loss = tl.total;
      last_improvement = it;
    } else if (it - last_improvement >= kPlateauPatience) {
      mu = std::max(mu * 0.5, mu0 * kStepFloor);
      last_improvement = it;
    }

    // A vanishing gradient contributes nothing; the accumulated direction
    // still decays and may keep stepping.
    if (cfg.momentum == 0.0) {
      if (gnorm >= kZeroGradFloor) {
        for (std::size_t i = 0; i < n; ++i) dir[i] = g[i];
      } else {
        std::fill(dir.begin(), dir.end(), 0.0);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) dir[i] *= cfg.momentum;
      if (gnorm >= kZeroGradFloor)
        for (std::size_t i = 0; i < n; ++i) dir[i] += g[i] / gnorm;
    }
    pgd_step_inplace(delta.samples, dir, mu, eps, x.samples);
  }

  res.iterations_run = it;
  res.succeeded = succeeded;
  res.first_success_iteration = first_success;
  res.stop_reason = stop;
  res.delta.sample_rate_hz = x.sample_rate_hz;
  res.delta.samples = succeeded ? std::move(success_delta) : std::move(delta.samples);

  for (std::size_t i = 0; i < n; ++i) xadv.samples[i] = x.samples[i] + res.delta.samples[i];
  const CtcOutcome fin = term.eval(xadv, false);
  const psy::PerceptualEval fpe = psy::perceptual_loss(res.delta, analysis);
  res.final_loss = blend(cfg.alpha, fin.loss, fpe.loss);
  res.decoded = term.decode(xadv).text;
  return res;
}

}  // namespace

void AttackConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("attack: alpha must be in [0, 1]");
  if (!(epsilon_int16 > 0.0)) throw ArgumentError("attack: epsilon must be positive");
  if (step_size < 0.0) throw ArgumentError("attack: negative step size");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ArgumentError("attack: momentum must be in [0, 1)");
  if (iterations == 0) throw ArgumentError("attack: need at least one iteration");
  if (!(beta > 0.0)) throw ArgumentError("attack: beta must be positive");
  if (!(sample_scale > 0.0)) throw ArgumentError("attack: sample scale must be positive");
  if (jobs < 1) throw ArgumentError("attack: jobs must be at least 1");
  FrameConfig{frame_len, frame_len, Window::Rectangular}.validate();
}

void project_l2(std::span<double> v, double epsilon) {
  if (epsilon < 0.0) throw ArgumentError("project_l2: negative radius");
  const double norm = l2_norm(v);
  if (norm > epsilon) {
    const double t = epsilon / norm;
    for (double& x : v) x *= t;
  }
}

void clip_box(std::span<double> delta, std::span<const double> x) {
  if (delta.size() != x.size()) throw ArgumentError("clip_box: length mismatch");
  for (std::size_t i = 0; i < delta.size(); ++i)
    delta[i] = std::clamp(delta[i], -1.0 - x[i], 1.0 - x[i]);
}

Waveform pgd_step(const Waveform& delta, const Waveform& grad, double mu,
                  double epsilon, const Waveform& x) {
  if (delta.size() != grad.size() || delta.size() != x.size())
    throw ArgumentError("pgd_step: shape mismatch");
  if (!(epsilon > 0.0)) throw ArgumentError("pgd_step: epsilon must be positive");
  Waveform out = delta;
  pgd_step_inplace(out.samples, grad.samples, mu, epsilon, x.samples);
  return out;
}

LossEval total_loss(const Waveform& x, const Waveform& delta,
                    const ctc::MicroCtcModel& model, const ctc::Transcript& target,
                    const psy::MaskingAnalysis& analysis, double alpha) {
  if (x.size() != delta.size() || x.sample_rate_hz != delta.sample_rate_hz)
    throw ArgumentError("total_loss: carrier and delta shapes differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("total_loss: alpha out of range");

  Waveform xadv;
  xadv.sample_rate_hz = x.sample_rate_hz;
  xadv.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    xadv.samples[i] = x.samples[i] + delta.samples[i];

  const auto ig = ctc::input_gradient(model, xadv, target);
  const auto pe = psy::perceptual_loss(delta, analysis);

  LossEval out;
  out.loss = blend(alpha, ig.loss, pe.loss);
  if (alpha == 1.0) {
    out.grad = ig.grad;
  } else if (alpha == 0.0) {
    out.grad = pe.grad;
  } else {
    out.grad.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out.grad[i] = alpha * ig.grad[i] + (1.0 - alpha) * pe.grad[i];
  }
  return out;
}

AttackResult run_attack(const Waveform& x, const ctc::Transcript& target,
                        const ctc::MicroCtcModel& model, const AttackConfig& cfg) {
  PlainTerm term(model, target);
  return drive(x, target, model, cfg, term);
}

AttackResult run_attack_eot(const Waveform& x, const ctc::Transcript& target,
                            const ctc::MicroCtcModel& model, const AttackConfig& cfg,
                            const EotConfig& eot) {
  if (!eot.bank || eot.bank->size() == 0)
    throw ArgumentError("attack: expectation over rooms needs a non-empty bank");
  if (eot.rooms_per_iter == 0 || eot.rooms_per_iter > eot.bank->size())
    throw ArgumentError("attack: rooms_per_iter must be in [1, bank size]");
  if (eot.bank->sample_rate_hz != x.sample_rate_hz)
    throw ArgumentError("attack: room bank sample rate does not match the carrier");
  EotTerm term(x, model, target, eot);
  return drive(x, target, model, cfg, term);
}

}  // namespace pat::attack
