#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pat/audio.hpp"
#include "pat/ctc.hpp"
#include "pat/psycho.hpp"
#include "pat/room.hpp"

namespace pat::attack {

// Projected gradient descent that pushes the recognizer toward a target
// transcript while a masking-threshold-weighted quadratic form keeps the
// perturbation under the carrier's audible floor. alpha = 1 optimizes the
// recognizer term alone; alpha = 0 the perceptual term alone.
struct AttackConfig {
  double alpha = 1.0;
  double epsilon_int16 = 1000.0;  // l2 budget in 16-bit sample units
  double step_size = 0.0;         // normalized units per step; 0 picks budget/20
  std::size_t iterations = 2000;
  double momentum = 0.9;          // decay of the accumulated descent direction, [0,1)
  double beta = 0.06;             // masking threshold compression for the weights
  std::size_t frame_len = 512;    // perceptual analysis frame (hop == frame_len)
  double sample_scale = 32768.0;
  std::size_t trace_every = 1;   // 0 records only the final row
  bool stop_on_success = true;   // stop as soon as the decode matches the target
  int jobs = 1;

  // Observer for recorded trace rows (progress reporting); not part of the
  // optimization itself.
  std::function<void(const struct TraceRow&)> on_trace;

  double epsilon_normalized() const { return epsilon_int16 / sample_scale; }
  double effective_step() const {
    return step_size > 0.0 ? step_size : epsilon_normalized() / 20.0;
  }
  void validate() const;
};

// Expectation-over-rooms variant: each iteration averages the recognizer
// gradient over rooms_per_iter responses drawn from the bank. Success is
// judged through *holdout* when set, otherwise through the sampled rooms.
struct EotConfig {
  const room::RoomBank* bank = nullptr;
  std::size_t rooms_per_iter = 4;
  bool bandpass = true;
  std::uint64_t room_seed = 2026;
  const room::Rir* holdout = nullptr;
};

struct TotalLoss {
  double total = 0.0;
  double ctc = 0.0;
  double perceptual = 0.0;
};

struct TraceRow {
  std::size_t iteration = 0;
  double total = 0.0;
  double ctc = 0.0;         // NaN when the term was not evaluated
  double perceptual = 0.0;  // NaN when the term was not evaluated
  double grad_norm = 0.0;
  double delta_norm = 0.0;
  bool success = false;
};

struct AttackResult {
  Waveform delta;  // normalized units, same length as the carrier
  bool succeeded = false;
  std::size_t first_success_iteration = 0;  // valid when succeeded
  std::size_t iterations_run = 0;
  TotalLoss final_loss;   // both terms, evaluated at the returned delta
  std::string decoded;    // greedy transcript at the returned delta
  std::vector<TraceRow> trace;
  std::string stop_reason;  // "iterations" | "success"
};

// Scale v into the l2 ball of radius epsilon. Inside the ball v is returned
// untouched, bit for bit.
void project_l2(std::span<double> v, double epsilon);

// Clamp delta so x + delta stays inside [-1, 1].
void clip_box(std::span<double> delta, std::span<const double> x);

// One descent update: delta - mu * grad/|grad|, clipped to the box, projected
// into the epsilon ball, box re-checked. A gradient below 1e-12 in norm leaves
// delta unstepped (only the constraints are applied).
Waveform pgd_step(const Waveform& delta, const Waveform& grad, double mu,
                  double epsilon, const Waveform& x);

// Both loss terms and the blended gradient at a fixed delta.
struct LossEval {
  TotalLoss loss;
  std::vector<double> grad;
};
LossEval total_loss(const Waveform& x, const Waveform& delta,
                    const ctc::MicroCtcModel& model, const ctc::Transcript& target,
                    const psy::MaskingAnalysis& analysis, double alpha);

AttackResult run_attack(const Waveform& x, const ctc::Transcript& target,
                        const ctc::MicroCtcModel& model, const AttackConfig& cfg);

AttackResult run_attack_eot(const Waveform& x, const ctc::Transcript& target,
                            const ctc::MicroCtcModel& model, const AttackConfig& cfg,
                            const EotConfig& eot);

}  // namespace pat::attack
