#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pat/attack.hpp"
#include "pat/audio.hpp"
#include "pat/ctc.hpp"
#include "pat/psycho.hpp"
#include "pat/room.hpp"

namespace pat::metrics {

// Levenshtein alignment counts. Ties in the dynamic program resolve
// substitution first, then insertion, then deletion, so counts are stable
// across platforms. An empty reference is rejected (the rates below divide
// by its length); an empty hypothesis is fine and counts as all deletions.
struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t hits = 0;
  std::size_t ref_len() const { return substitutions + deletions + hits; }
};

std::vector<std::string> words(std::string_view text);  // whitespace tokens

EditCounts edit_counts(std::span<const std::string> ref, std::span<const std::string> hyp);
EditCounts char_edit_counts(std::string_view ref, std::string_view hyp);

// (S + D + I) / ref_len. Hand-built counts with ref_len 0 score 0 when there
// are no insertions and +inf otherwise.
double error_rate(const EditCounts& c);

double wer(std::string_view ref, std::string_view hyp);
double cer(std::string_view ref, std::string_view hyp);

// Fraction of (frame, bin) cells where the perturbation's spectrum, placed
// on the carrier's playback level scale, pokes above the carrier's masking
// threshold. Frames whose carrier content was too quiet to normalize are
// excluded from the denominator.
double masking_exceedance(const Waveform& delta, const psy::MaskingAnalysis& analysis);

struct EvalReport {
  std::string label;  // caller-chosen row tag
  std::string target;
  std::string clean_decoded;
  std::string adv_decoded;
  bool success = false;  // adv_decoded == target
  double wer_target = 0.0;
  double cer_target = 0.0;
  double snr_db = 0.0;
  double exceedance = 0.0;
  double ctc_loss = 0.0;
  double perceptual_loss = 0.0;
};

// Decode clean and perturbed audio and collect every headline number. When
// `through` is set both decodes run on room playback (renormalized), which
// is how robustness is judged; SNR and exceedance always describe the
// source-side perturbation.
EvalReport evaluate(const Waveform& x, const Waveform& delta,
                    const ctc::MicroCtcModel& model, const ctc::Transcript& target,
                    const psy::MaskingAnalysis& analysis,
                    const room::Rir* through = nullptr, bool bandpass = true);

std::string to_jsonl(const EvalReport& r);  // one JSON object, no trailing newline
void write_eval_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
void write_trace_csv(std::span<const attack::TraceRow> rows, const std::filesystem::path& path);

}  // namespace pat::metrics
