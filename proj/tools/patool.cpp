// patool: command-line front end for the psychoacoustic adversarial audio
// toolkit. Subcommands cover masking-threshold analysis, attack runs, room
// simulation, evaluation and toy model training. Exit codes: 0 success,
// 2 usage/config error, 3 attack failure, 4 I/O error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pat/attack.hpp"
#include "pat/audio.hpp"
#include "pat/config.hpp"
#include "pat/ctc.hpp"
#include "pat/errors.hpp"
#include "pat/metrics.hpp"
#include "pat/psycho.hpp"
#include "pat/room.hpp"
#include "pat/tone_corpus.hpp"

namespace fs = std::filesystem;
using namespace pat;

namespace {

constexpr const char* kVersion = "1.0.0";

// Manifest: resolved settings (defaults materialized) plus input hashes.
// Re-running `patool <cmd> --config <manifest>` reproduces the run.
void write_manifest(CLI::App* sub, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& input_files,
                    const fs::path& path) {
  std::string out;
  out += "# patool " + std::string(kVersion) + " manifest\n";
  out += "# command: " + command + "\n";
  out += "# rerun: patool " + command + " --config " + path.string() + "\n";
  for (const auto& [tag, file] : input_files)
    out += "# fnv1a64 " + tag + "=" + cfg::hex64(cfg::hash_file(file)) + "\n";
  out += sub->config_to_str(true, false);
  std::ofstream of(path, std::ios::trunc);
  if (!of) throw IoError("cannot open " + path.string() + " for writing");
  of << out;
  if (!of) throw IoError("write failure on " + path.string());
}

Waveform add(const Waveform& x, const Waveform& d) {
  Waveform y;
  y.sample_rate_hz = x.sample_rate_hz;
  y.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y.samples[i] = x.samples[i] + d.samples[i];
  return y;
}

void print_report(const metrics::EvalReport& r) {
  std::printf("[%s] success=%s wer=%.6g cer=%.6g snr_db=%.6g exceedance=%.6g\n",
              r.label.c_str(), r.success ? "yes" : "no", r.wer_target, r.cer_target,
              r.snr_db, r.exceedance);
  std::printf("[%s] decoded: %s\n", r.label.c_str(), r.adv_decoded.c_str());
}

void write_jsonl(std::span<const metrics::EvalReport> reports, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : reports) out << metrics::to_jsonl(r) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

// ---- threshold ------------------------------------------------------------

struct ThresholdOpts {
  std::string input, output, psd_output, manifest;
  std::size_t frame_len = 512;
  double beta = 0.06;
  int jobs = 1;
};

int run_threshold(CLI::App* sub, const ThresholdOpts& o) {
  const Waveform x = load_wav(o.input);
  const FrameConfig fc{o.frame_len, o.frame_len, Window::Rectangular};
  const auto analysis = psy::analyze(x, fc, o.beta, 32768.0, o.jobs);

  const double bin_hz = static_cast<double>(x.sample_rate_hz) / static_cast<double>(fc.frame_len);
  write_frame_matrix_csv(analysis.threshold.t_db, bin_hz, o.output);
  if (!o.psd_output.empty()) export_spectrogram_csv(x, fc, o.psd_output);
  if (!o.manifest.empty()) write_manifest(sub, "threshold", {{"input", o.input}}, o.manifest);

  std::size_t silent = 0;
  for (const auto& f : analysis.spl)
    if (f.silent()) ++silent;
  std::printf("threshold: %zu frames x %zu bins (%zu silent) -> %s\n", analysis.num_frames,
              analysis.num_bins, silent, o.output.c_str());
  return 0;
}

// ---- attack ---------------------------------------------------------------

struct AttackOpts {
  std::string input, model, target, outdir;
  double alpha = 1.0, epsilon = 1000.0, step = 0.0, momentum = 0.9, beta = 0.06;
  std::string epsilon_unit = "int16";
  std::size_t iterations = 2000, frame_len = 512, trace_every = 50;
  bool stop_on_success = true;
  int jobs = 1;
  std::string eot_bank;
  std::size_t eot_rooms = 4;
  int eot_holdout = -1;
  std::uint64_t eot_seed = 2026;
  bool eot_bandpass = true;
};

int run_attack_cmd(CLI::App* sub, const AttackOpts& o) {
  const Waveform x = load_wav(o.input);
  const ctc::MicroCtcModel model = ctc::load_model(o.model);
  const ctc::Transcript target = ctc::make_transcript(o.target);

  attack::AttackConfig acfg;
  acfg.alpha = o.alpha;
  if (o.epsilon_unit == "int16") acfg.epsilon_int16 = o.epsilon;
  else if (o.epsilon_unit == "normalized") acfg.epsilon_int16 = o.epsilon * acfg.sample_scale;
  else throw ArgumentError("attack: --epsilon-unit must be int16 or normalized");
  acfg.step_size = o.step;
  acfg.momentum = o.momentum;
  acfg.iterations = o.iterations;
  acfg.beta = o.beta;
  acfg.frame_len = o.frame_len;
  acfg.trace_every = o.trace_every;
  acfg.stop_on_success = o.stop_on_success;
  acfg.jobs = o.jobs;
  acfg.on_trace = [](const attack::TraceRow& t) {
    std::fprintf(stderr, "iter %zu total %.6g ctc %.6g perc %.6g |grad| %.6g |delta| %.6g%s\n",
                 t.iteration, t.total, t.ctc, t.perceptual, t.grad_norm, t.delta_norm,
                 t.success ? " success" : "");
  };

  fs::create_directories(o.outdir);
  const fs::path outdir(o.outdir);

  attack::AttackResult res;
  room::RoomBank bank, train_bank;
  const room::Rir* holdout = nullptr;
  if (!o.eot_bank.empty()) {
    bank = room::load_room_bank(o.eot_bank);
    attack::EotConfig eot;
    eot.rooms_per_iter = o.eot_rooms;
    eot.bandpass = o.eot_bandpass;
    eot.room_seed = o.eot_seed;
    if (o.eot_holdout >= 0) {
      const auto idx = static_cast<std::size_t>(o.eot_holdout);
      if (idx >= bank.size()) throw ArgumentError("attack: --eot-holdout out of range");
      train_bank = bank;
      train_bank.specs.erase(train_bank.specs.begin() + static_cast<std::ptrdiff_t>(idx));
      train_bank.rirs.erase(train_bank.rirs.begin() + static_cast<std::ptrdiff_t>(idx));
      holdout = &bank.rirs[idx];
      eot.bank = &train_bank;
      eot.holdout = holdout;
    } else {
      eot.bank = &bank;
    }
    res = attack::run_attack_eot(x, target, model, acfg, eot);
  } else {
    res = attack::run_attack(x, target, model, acfg);
  }

  save_wav(add(x, res.delta), outdir / "adversarial.wav");
  save_wav(res.delta, outdir / "delta.wav");
  metrics::write_trace_csv(res.trace, outdir / "trace.csv");

  const auto analysis = psy::analyze(x, {acfg.frame_len, acfg.frame_len, Window::Rectangular},
                                     acfg.beta, acfg.sample_scale, acfg.jobs);
  std::vector<metrics::EvalReport> reports;
  reports.push_back(metrics::evaluate(x, res.delta, model, target, analysis));
  reports.back().label = "direct";
  if (holdout) {
    reports.push_back(
        metrics::evaluate(x, res.delta, model, target, analysis, holdout, o.eot_bandpass));
    reports.back().label = "holdout";
  }
  metrics::write_eval_csv(reports, outdir / "report.csv");
  write_jsonl(reports, outdir / "report.jsonl");

  std::vector<std::pair<std::string, std::string>> hashed = {{"input", o.input},
                                                             {"model", o.model}};
  if (!o.eot_bank.empty()) hashed.emplace_back("bank", o.eot_bank);
  write_manifest(sub, "attack", hashed, outdir / "manifest.txt");

  std::printf("attack: success=%s first_success=%zu iterations=%zu stop=%s\n",
              res.succeeded ? "yes" : "no", res.first_success_iteration, res.iterations_run,
              res.stop_reason.c_str());
  std::printf("decoded: %s\n", res.decoded.c_str());
  std::printf("loss: total=%.6g ctc=%.6g perceptual=%.6g\n", res.final_loss.total,
              res.final_loss.ctc, res.final_loss.perceptual);
  for (const auto& r : reports) print_report(r);
  std::printf("outputs: %s\n", outdir.string().c_str());

  if (!res.succeeded) {
    std::fprintf(stderr, "attack did not reach the target within %zu iterations\n",
                 o.iterations);
    return 3;
  }
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimulateOpts {
  std::string input, output, bank, export_rir, manifest;
  bool make_bank = false, identity = false, fractional = false;
  bool bandpass = false, renormalize = true;
  int room_index = -1;
  std::size_t rooms = 10;
  std::uint64_t seed = 1;
  int fs = 16000, max_order = 3;
  double dim_min = 3.0, dim_max = 10.0, reflect_min = 0.2, reflect_max = 0.8;
  std::vector<double> dims, source, mic, reflect;
};

int run_simulate(CLI::App* sub, const SimulateOpts& o) {
  if (o.make_bank) {
    if (o.output.empty()) throw ArgumentError("simulate: --make-bank needs --output");
    room::RoomBankRanges ranges;
    ranges.dim_min = o.dim_min;
    ranges.dim_max = o.dim_max;
    ranges.reflect_min = o.reflect_min;
    ranges.reflect_max = o.reflect_max;
    ranges.max_order = o.max_order;
    const auto bank = room::sample_room_bank(o.rooms, ranges, o.seed, o.fs);
    room::save_room_bank(bank, o.output);
    if (!o.manifest.empty()) write_manifest(sub, "simulate", {}, o.manifest);
    std::printf("bank: %zu rooms, seed %llu -> %s\n", bank.size(),
                static_cast<unsigned long long>(o.seed), o.output.c_str());
    return 0;
  }

  room::Rir rir;
  int fs = o.fs;
  if (o.identity) {
    rir = room::Rir::identity();
  } else if (!o.bank.empty()) {
    const auto bank = room::load_room_bank(o.bank);
    if (o.room_index < 0 || static_cast<std::size_t>(o.room_index) >= bank.size())
      throw ArgumentError("simulate: --room-index out of range for this bank");
    rir = bank.rirs[static_cast<std::size_t>(o.room_index)];
    fs = bank.sample_rate_hz;
  } else if (!o.dims.empty()) {
    room::RoomSpec spec;
    if (o.dims.size() != 3 || o.source.size() != 3 || o.mic.size() != 3)
      throw ArgumentError("simulate: --dims, --source and --mic each need 3 values");
    std::copy(o.dims.begin(), o.dims.end(), spec.dims.begin());
    std::copy(o.source.begin(), o.source.end(), spec.source.begin());
    std::copy(o.mic.begin(), o.mic.end(), spec.mic.begin());
    if (o.reflect.size() == 1) spec.reflect.fill(o.reflect[0]);
    else if (o.reflect.size() == 6) std::copy(o.reflect.begin(), o.reflect.end(), spec.reflect.begin());
    else if (!o.reflect.empty()) throw ArgumentError("simulate: --reflect needs 1 or 6 values");
    spec.max_order = o.max_order;
    spec.sample_rate_hz = o.fs;
    rir = room::image_source_rir(spec, o.fractional);
  } else {
    throw ArgumentError(
        "simulate: pick a room via --identity, --bank + --room-index, or --dims/--source/--mic");
  }

  if (!o.export_rir.empty()) {
    room::export_rir_wav(rir, fs, o.export_rir);
    std::printf("rir: first_tap=%zu taps=%zu -> %s\n", rir.first_tap, rir.taps.size(),
                o.export_rir.c_str());
  }
  if (!o.input.empty()) {
    if (o.output.empty()) throw ArgumentError("simulate: --input needs --output");
    const Waveform x = load_wav(o.input);
    const Waveform y = room::apply_room(x, rir, o.bandpass, o.renormalize);
    save_wav(y, o.output);
    std::printf("simulate: %s -> %s (%zu samples)\n", o.input.c_str(), o.output.c_str(),
                y.size());
  } else if (o.export_rir.empty()) {
    throw ArgumentError("simulate: nothing to do (need --input/--output or --export-rir)");
  }
  if (!o.manifest.empty()) {
    std::vector<std::pair<std::string, std::string>> hashed;
    if (!o.input.empty()) hashed.emplace_back("input", o.input);
    if (!o.bank.empty()) hashed.emplace_back("bank", o.bank);
    write_manifest(sub, "simulate", hashed, o.manifest);
  }
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOpts {
  std::string input, adv, model, target, bank, json_out, csv_out, label = "eval";
  int room_index = -1;
  bool bandpass = true;
  std::size_t frame_len = 512;
  double beta = 0.06;
  int jobs = 1;
  std::string manifest;
};

int run_evaluate(CLI::App* sub, const EvaluateOpts& o) {
  const Waveform x = load_wav(o.input);
  const Waveform adv = load_wav(o.adv);
  if (x.size() != adv.size() || x.sample_rate_hz != adv.sample_rate_hz)
    throw ArgumentError("evaluate: original and adversarial audio must match in length and rate");
  Waveform delta;
  delta.sample_rate_hz = x.sample_rate_hz;
  delta.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    delta.samples[i] = adv.samples[i] - x.samples[i];

  const ctc::MicroCtcModel model = ctc::load_model(o.model);
  const ctc::Transcript target = ctc::make_transcript(o.target);
  const auto analysis = psy::analyze(x, {o.frame_len, o.frame_len, Window::Rectangular},
                                     o.beta, 32768.0, o.jobs);

  std::vector<metrics::EvalReport> reports;
  reports.push_back(metrics::evaluate(x, delta, model, target, analysis));
  reports.back().label = o.label + ":direct";
  if (!o.bank.empty()) {
    const auto bank = room::load_room_bank(o.bank);
    const auto eval_room = [&](std::size_t r) {
      reports.push_back(
          metrics::evaluate(x, delta, model, target, analysis, &bank.rirs[r], o.bandpass));
      reports.back().label = o.label + ":room" + std::to_string(r);
    };
    if (o.room_index >= 0) {
      if (static_cast<std::size_t>(o.room_index) >= bank.size())
        throw ArgumentError("evaluate: --room-index out of range for this bank");
      eval_room(static_cast<std::size_t>(o.room_index));
    } else {
      for (std::size_t r = 0; r < bank.size(); ++r) eval_room(r);
    }
  }

  for (const auto& r : reports) print_report(r);
  if (!o.csv_out.empty()) metrics::write_eval_csv(reports, o.csv_out);
  if (!o.json_out.empty()) write_jsonl(reports, o.json_out);
  if (!o.manifest.empty()) {
    std::vector<std::pair<std::string, std::string>> hashed = {
        {"input", o.input}, {"adv", o.adv}, {"model", o.model}};
    if (!o.bank.empty()) hashed.emplace_back("bank", o.bank);
    write_manifest(sub, "evaluate", hashed, o.manifest);
  }
  return 0;
}

// ---- train-toy ------------------------------------------------------------

struct TrainOpts {
  std::string output, corpus, report, manifest;
  std::size_t synthetic = 0, min_chars = 8, max_chars = 22, hidden = 128;
  std::uint64_t seed = 4, corpus_seed = 99;
  int epochs = 200;
  double lr = 0.002;
};

// Corpus manifest: CSV with a "path,transcript" header; paths resolve
// relative to the manifest's directory.
std::vector<std::pair<Waveform, ctc::Transcript>> load_corpus_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus manifest " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty corpus manifest (header required)");
  if (line.find("path") == std::string::npos)
    throw FormatError(path.string() + ": first line must be a header naming 'path'");
  std::vector<std::pair<Waveform, ctc::Transcript>> corpus;
  const fs::path base = path.parent_path();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected path,transcript");
    fs::path wav = line.substr(0, comma);
    if (wav.is_relative()) wav = base / wav;
    corpus.emplace_back(load_wav(wav), ctc::make_transcript(line.substr(comma + 1)));
  }
  return corpus;
}

int run_train(CLI::App* sub, const TrainOpts& o) {
  std::vector<std::pair<Waveform, ctc::Transcript>> corpus;
  if (!o.corpus.empty()) {
    corpus = load_corpus_csv(o.corpus);
  } else {
    corpus = ctc::builtin_corpus();
    if (o.synthetic > 0) {
      for (const auto& phrase :
           ctc::sample_phrases(o.synthetic, o.min_chars, o.max_chars, o.corpus_seed))
        corpus.emplace_back(ctc::synth_phrase(phrase), ctc::make_transcript(phrase));
    }
  }
  if (corpus.empty()) throw ArgumentError("train-toy: corpus has no utterances");

  const auto start = ctc::make_model(o.seed, {}, o.hidden);
  const auto result = ctc::train_toy(start, corpus, o.epochs, o.lr);
  ctc::save_model(result.model, o.output);

  if (!o.report.empty()) {
    std::ofstream rep(o.report, std::ios::trunc);
    if (!rep) throw IoError("cannot open " + o.report + " for writing");
    rep << "epoch,mean_ctc_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%.6g\n", e, result.epoch_loss[e]);
      rep << buf;
    }
    if (!rep) throw IoError("write failure on " + o.report);
  }

  double cer_sum = 0.0;
  for (const auto& [wav, ref] : corpus)
    cer_sum += metrics::cer(ref.text, ctc::greedy_decode(result.model, wav).text);
  const double mean_cer = cer_sum / static_cast<double>(corpus.size());

  if (!o.manifest.empty()) {
    std::vector<std::pair<std::string, std::string>> hashed;
    if (!o.corpus.empty()) hashed.emplace_back("corpus", o.corpus);
    write_manifest(sub, "train-toy", hashed, o.manifest);
  }

  std::printf("train-toy: %zu utterances, %d epochs, final loss %.6g, corpus cer %.6g\n",
              corpus.size(), o.epochs,
              result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(), mean_cer);
  if (result.skipped_utterances > 0)
    std::fprintf(stderr, "train-toy: skipped %d infeasible utterances\n",
                 result.skipped_utterances);
  std::printf("model -> %s\n", o.output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psychoacoustic adversarial audio toolkit (toy CTC recognizer)"};
  app.set_version_flag("--version", std::string("patool ") + kVersion);
  app.require_subcommand(1);

  ThresholdOpts th;
  CLI::App* th_cmd = app.add_subcommand("threshold", "per-frame global masking threshold to CSV");
  th_cmd->set_config("--config", "", "settings file (key=value)");
  th_cmd->add_option("-i,--input", th.input, "input WAV (16-bit PCM mono)")
      ->required()->check(CLI::ExistingFile);
  th_cmd->add_option("-o,--output", th.output, "threshold CSV path")->required();
  th_cmd->add_option("--psd-output", th.psd_output, "also write the frame PSD matrix (CSV)");
  th_cmd->add_option("--frame-len", th.frame_len, "analysis frame length (power of two)")
      ->capture_default_str();
  th_cmd->add_option("--beta", th.beta, "threshold-to-weight compression")->capture_default_str();
  th_cmd->add_option("--jobs", th.jobs, "worker thread cap")->capture_default_str();
  th_cmd->add_option("--manifest", th.manifest, "write a rerunnable manifest here");

  AttackOpts at;
  CLI::App* at_cmd = app.add_subcommand("attack", "targeted perturbation search (PGD)");
  at_cmd->set_config("--config", "", "settings file (key=value)");
  at_cmd->add_option("-i,--input", at.input, "carrier WAV")->required()->check(CLI::ExistingFile);
  at_cmd->add_option("-m,--model", at.model, "recognizer model file")
      ->envname("PATOOL_MODEL")->required()->check(CLI::ExistingFile);
  at_cmd->add_option("-t,--target", at.target, "target transcript")->required();
  at_cmd->add_option("-d,--outdir", at.outdir, "output directory")->required();
  at_cmd->add_option("--alpha", at.alpha, "recognizer weight in the total loss [0,1]")
      ->capture_default_str();
  at_cmd->add_option("--epsilon", at.epsilon, "l2 budget")->capture_default_str();
  at_cmd->add_option("--epsilon-unit", at.epsilon_unit, "int16 | normalized")
      ->capture_default_str();
  at_cmd->add_option("--step", at.step, "step size in normalized units (0 = budget/20)")
      ->capture_default_str();
  at_cmd->add_option("--momentum", at.momentum, "descent direction decay [0,1)")
      ->capture_default_str();
  at_cmd->add_option("--iterations", at.iterations, "iteration budget")->capture_default_str();
  at_cmd->add_option("--beta", at.beta, "masking weight compression")->capture_default_str();
  at_cmd->add_option("--frame-len", at.frame_len, "perceptual analysis frame length")
      ->capture_default_str();
  at_cmd->add_option("--trace-every", at.trace_every, "trace cadence in iterations")
      ->capture_default_str();
  at_cmd->add_flag("--stop-on-success,!--run-full", at.stop_on_success,
                   "stop once the decode matches (default) or run the full budget")
      ->capture_default_str();
  at_cmd->add_option("--jobs", at.jobs, "worker thread cap")->capture_default_str();
  at_cmd->add_option("--eot-bank", at.eot_bank, "room bank file; enables expectation over rooms")
      ->check(CLI::ExistingFile);
  at_cmd->add_option("--eot-rooms", at.eot_rooms, "rooms averaged per iteration")
      ->capture_default_str();
  at_cmd->add_option("--eot-holdout", at.eot_holdout,
                     "bank index held out of training and used as the success check (-1 = none)")
      ->capture_default_str();
  at_cmd->add_option("--eot-seed", at.eot_seed, "room sampling seed")->capture_default_str();
  at_cmd->add_flag("--eot-bandpass,!--eot-no-bandpass", at.eot_bandpass,
                   "100-7500 Hz playback band in the room chain")
      ->capture_default_str();

  SimulateOpts sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "room impulse responses and playback");
  sim_cmd->set_config("--config", "", "settings file (key=value)");
  sim_cmd->add_option("-i,--input", sim.input, "input WAV")->check(CLI::ExistingFile);
  sim_cmd->add_option("-o,--output", sim.output, "output WAV (or bank file with --make-bank)");
  sim_cmd->add_option("--bank", sim.bank, "room bank file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--room-index,--index", sim.room_index, "room to use from the bank")
      ->capture_default_str();
  sim_cmd->add_flag("--identity", sim.identity, "unit impulse room (pass-through)");
  sim_cmd->add_option("--dims", sim.dims, "room size in meters, 3 values")->delimiter(',');
  sim_cmd->add_option("--source", sim.source, "source position, 3 values")->delimiter(',');
  sim_cmd->add_option("--mic", sim.mic, "microphone position, 3 values")->delimiter(',');
  sim_cmd->add_option("--reflect", sim.reflect, "wall reflection coefficients, 1 or 6 values")
      ->delimiter(',');
  sim_cmd->add_option("--max-order", sim.max_order, "image source reflection order")
      ->capture_default_str();
  sim_cmd->add_flag("--fractional", sim.fractional, "windowed-sinc fractional delays");
  sim_cmd->add_flag("--bandpass", sim.bandpass, "apply the 100-7500 Hz playback band");
  sim_cmd->add_flag("--renormalize,!--no-renormalize", sim.renormalize,
                    "match the output peak to the input peak")
      ->capture_default_str();
  sim_cmd->add_flag("--make-bank", sim.make_bank, "sample a deterministic room bank");
  sim_cmd->add_option("--rooms", sim.rooms, "bank size with --make-bank")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "bank sampling seed")->capture_default_str();
  sim_cmd->add_option("--fs", sim.fs, "sample rate for generated responses")
      ->capture_default_str();
  sim_cmd->add_option("--dim-min", sim.dim_min, "bank: smallest wall length")
      ->capture_default_str();
  sim_cmd->add_option("--dim-max", sim.dim_max, "bank: largest wall length")
      ->capture_default_str();
  sim_cmd->add_option("--reflect-min", sim.reflect_min, "bank: reflection lower bound")
      ->capture_default_str();
  sim_cmd->add_option("--reflect-max", sim.reflect_max, "bank: reflection upper bound")
      ->capture_default_str();
  sim_cmd->add_option("--export-rir", sim.export_rir, "write the selected response as WAV");
  sim_cmd->add_option("--manifest", sim.manifest, "write a rerunnable manifest here");

  EvaluateOpts ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "WER/CER/SNR/exceedance report");
  ev_cmd->set_config("--config", "", "settings file (key=value)");
  ev_cmd->add_option("-i,--input", ev.input, "original WAV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("-a,--adv", ev.adv, "adversarial WAV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("-m,--model", ev.model, "recognizer model file")
      ->envname("PATOOL_MODEL")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("-t,--target", ev.target, "target transcript")->required();
  ev_cmd->add_option("--bank,--room", ev.bank, "room bank: adds one report row per room")
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--room-index", ev.room_index, "evaluate only this bank entry")
      ->capture_default_str();
  ev_cmd->add_flag("--bandpass,!--no-bandpass", ev.bandpass, "playback band in the room chain")
      ->capture_default_str();
  ev_cmd->add_option("--frame-len", ev.frame_len, "perceptual analysis frame length")
      ->capture_default_str();
  ev_cmd->add_option("--beta", ev.beta, "masking weight compression")->capture_default_str();
  ev_cmd->add_option("--jobs", ev.jobs, "worker thread cap")->capture_default_str();
  ev_cmd->add_option("--label", ev.label, "row label prefix in reports")->capture_default_str();
  ev_cmd->add_option("--json", ev.json_out, "write JSON-lines report here");
  ev_cmd->add_option("--csv", ev.csv_out, "write CSV report here");
  ev_cmd->add_option("--manifest", ev.manifest, "write a rerunnable manifest here");

  TrainOpts tr;
  CLI::App* tr_cmd = app.add_subcommand("train-toy", "train the micro recognizer");
  tr_cmd->set_config("--config", "", "settings file (key=value)");
  tr_cmd->add_option("-o,--output", tr.output, "model file to write")->required();
  tr_cmd->add_option("--corpus", tr.corpus, "corpus manifest CSV (path,transcript)")
      ->check(CLI::ExistingFile);
  tr_cmd->add_option("--synthetic", tr.synthetic, "extra sampled tone phrases")
      ->capture_default_str();
  tr_cmd->add_option("--min-chars", tr.min_chars, "sampled phrase minimum length")
      ->capture_default_str();
  tr_cmd->add_option("--max-chars", tr.max_chars, "sampled phrase maximum length")
      ->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed, "model init seed")->capture_default_str();
  tr_cmd->add_option("--corpus-seed", tr.corpus_seed, "phrase sampling seed")
      ->capture_default_str();
  tr_cmd->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
  tr_cmd->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  tr_cmd->add_option("--hidden", tr.hidden, "hidden layer width")->capture_default_str();
  tr_cmd->add_option("--report", tr.report, "write per-epoch loss CSV here");
  tr_cmd->add_option("--manifest", tr.manifest, "write a rerunnable manifest here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (th_cmd->parsed()) return run_threshold(th_cmd, th);
    if (at_cmd->parsed()) return run_attack_cmd(at_cmd, at);
    if (sim_cmd->parsed()) return run_simulate(sim_cmd, sim);
    if (ev_cmd->parsed()) return run_evaluate(ev_cmd, ev);
    if (tr_cmd->parsed()) return run_train(tr_cmd, tr);
  } catch (const IoError& e) {
    std::fprintf(stderr, "patool: %s\n", e.what());
    return 4;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "patool: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "patool: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "patool: %s\n", e.what());
    return 1;
  }
  return 0;
}
