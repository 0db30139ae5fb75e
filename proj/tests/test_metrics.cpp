#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracle_helpers.hpp"
#include "pat/ctc.hpp"
#include "pat/errors.hpp"
#include "pat/metrics.hpp"
#include "pat/psycho.hpp"
#include "pat/rng.hpp"
#include "pat/tone_corpus.hpp"

using namespace pat;
namespace fs = std::filesystem;

namespace {

std::size_t sdi(const metrics::EditCounts& c) {
  return c.substitutions + c.deletions + c.insertions;
}

// All strings over {a, b, c} up to the given length, shortest first.
std::vector<std::string> all_strings(std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char ch : {'a', 'b', 'c'}) out.push_back(out[i] + ch);
    begin = end;
  }
  return out;
}

std::string random_string(Rng& rng, std::size_t max_len) {
  std::string s;
  const std::size_t len = rng.integer(max_len + 1);
  for (std::size_t i = 0; i < len; ++i)
    s += static_cast<char>('a' + rng.integer(3));
  return s;
}

}  // namespace

TEST_CASE("edit distance equals the enumeration oracle for every pair up to length 5") {
  const auto strs = all_strings(5);
  std::size_t cases = 0;
  for (const auto& ref : strs) {
    if (ref.empty()) continue;
    for (const auto& hyp : strs) {
      CHECK(sdi(metrics::char_edit_counts(ref, hyp)) == oracle::memo_edit_distance(ref, hyp));
      ++cases;
    }
  }
  CHECK(cases >= 1000);
}

TEST_CASE("edit distance matches the plain recursive oracle on random pairs") {
  Rng rng(31);
  for (int c = 0; c < 200; ++c) {
    const std::string ref = random_string(rng, 5);
    if (ref.empty()) continue;
    const std::string hyp = random_string(rng, 5);
    CHECK(sdi(metrics::char_edit_counts(ref, hyp)) == oracle::naive_edit_distance(ref, hyp));
  }
}

TEST_CASE("classic pairs") {
  CHECK(sdi(metrics::char_edit_counts("kitten", "sitting")) == 3);

  const std::vector<std::string> ref{"a", "b", "c"};
  const std::vector<std::string> hyp{"a", "c"};
  const auto c = metrics::edit_counts(ref, hyp);
  CHECK(c.deletions == 1);
  CHECK(c.substitutions == 0);
  CHECK(c.insertions == 0);
  CHECK(c.hits == 2);
  CHECK(metrics::error_rate(c) == doctest::Approx(1.0 / 3.0));

  const auto same = metrics::char_edit_counts("open the door", "open the door");
  CHECK(sdi(same) == 0);
  CHECK(same.hits == 13);
}

TEST_CASE("edit counts consistency properties") {
  Rng rng(33);
  for (int c = 0; c < 500; ++c) {
    const std::string a = random_string(rng, 5);
    const std::string b = random_string(rng, 5);
    const std::string d = random_string(rng, 5);
    if (a.empty() || b.empty() || d.empty()) continue;

    // Distance symmetry: swapping arguments exchanges insertions and deletions.
    const auto ab = metrics::char_edit_counts(a, b);
    const auto ba = metrics::char_edit_counts(b, a);
    CHECK(sdi(ab) == sdi(ba));
    CHECK(ab.insertions == ba.deletions);
    CHECK(ab.deletions == ba.insertions);
    CHECK(ab.substitutions == ba.substitutions);

    // Triangle inequality.
    CHECK(sdi(metrics::char_edit_counts(a, d)) <=
          sdi(metrics::char_edit_counts(a, b)) + sdi(metrics::char_edit_counts(b, d)));

    // Reference length bookkeeping.
    CHECK(ab.ref_len() == a.size());
  }
}

TEST_CASE("word and character error rates") {
  CHECK(metrics::wer("open the door", "open the door") == 0.0);
  CHECK(metrics::cer("open the door", "open the door") == 0.0);

  // An empty hypothesis deletes every reference word.
  CHECK(metrics::wer("open the door", "") == doctest::Approx(1.0));

  // Tokenization collapses runs of whitespace.
  CHECK(metrics::wer("open  the   door", "open the door") == 0.0);
  const auto toks = metrics::words("  open \t the\ndoor ");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == "open");
  CHECK(toks[2] == "door");

  // One substituted word out of three.
  CHECK(metrics::wer("open the door", "open the dog") == doctest::Approx(1.0 / 3.0));
  // CER counts spaces as characters: "abc d" vs "abc e" is 1 of 5.
  CHECK(metrics::cer("abc d", "abc e") == doctest::Approx(0.2));

  CHECK_THROWS_AS(metrics::wer("", "something"), ArgumentError);
  CHECK_THROWS_AS(metrics::cer("", ""), ArgumentError);
  CHECK(metrics::wer("word", "word") == 0.0);
}

TEST_CASE("masking exceedance basics") {
  const Waveform x = ctc::synth_phrase("red car");
  const FrameConfig pc{512, 512, Window::Rectangular};
  const auto analysis = psy::analyze(x, pc, 0.06, 32768.0);

  Waveform zero;
  zero.sample_rate_hz = x.sample_rate_hz;
  zero.samples.assign(x.size(), 0.0);
  CHECK(metrics::masking_exceedance(zero, analysis) == 0.0);

  // White noise at the carrier's own power sails over the threshold nearly
  // everywhere.
  double px = 0.0;
  for (double s : x.samples) px += s * s;
  const double rms = std::sqrt(px / static_cast<double>(x.size()));
  Rng rng(35);
  Waveform noise;
  noise.sample_rate_hz = x.sample_rate_hz;
  noise.samples.resize(x.size());
  for (double& s : noise.samples) s = rng.gaussian(0.0, rms);
  const double loud = metrics::masking_exceedance(noise, analysis);
  CHECK(loud > 0.5);

  // 60 dB quieter can only help.
  Waveform quiet = noise;
  for (double& s : quiet.samples) s *= 1e-3;
  CHECK(metrics::masking_exceedance(quiet, analysis) <= loud);

  // Monotone under amplification, bounded in [0, 1].
  double prev = 0.0;
  for (double gain : {1e-4, 1e-2, 1.0, 1e2}) {
    Waveform d = noise;
    for (double& s : d.samples) s *= gain;
    const double e = metrics::masking_exceedance(d, analysis);
    CHECK(e >= prev);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    prev = e;
  }

  Waveform wrong;
  wrong.sample_rate_hz = x.sample_rate_hz;
  wrong.samples.assign(x.size() - 1, 0.0);
  CHECK_THROWS_AS(metrics::masking_exceedance(wrong, analysis), ArgumentError);
}

TEST_CASE("null-attack evaluation") {
  std::vector<std::pair<Waveform, ctc::Transcript>> corpus;
  for (const auto& p : ctc::builtin_phrases())
    corpus.emplace_back(ctc::synth_phrase(p), ctc::make_transcript(p));
  const auto model = ctc::train_toy(ctc::make_model(2), corpus, 60, 0.002).model;

  const Waveform x = ctc::synth_phrase("go far");
  const FrameConfig pc{512, 512, Window::Rectangular};
  const auto analysis = psy::analyze(x, pc, 0.06, 32768.0);
  Waveform zero;
  zero.sample_rate_hz = x.sample_rate_hz;
  zero.samples.assign(x.size(), 0.0);

  const auto current = ctc::greedy_decode(model, x);
  const auto r = metrics::evaluate(x, zero, model, current, analysis);
  CHECK(r.success);
  CHECK(r.wer_target == 0.0);
  CHECK(r.cer_target == 0.0);
  CHECK(std::isinf(r.snr_db));
  CHECK(r.snr_db > 0.0);
  CHECK(r.exceedance == 0.0);
  CHECK(r.perceptual_loss == 0.0);
  CHECK(r.clean_decoded == current.text);
  CHECK(r.adv_decoded == current.text);

  // Serialization is deterministic.
  CHECK(metrics::to_jsonl(r) == metrics::to_jsonl(r));

  Waveform bad = zero;
  bad.samples.pop_back();
  CHECK_THROWS_AS(metrics::evaluate(x, bad, model, current, analysis), ArgumentError);
}

TEST_CASE("jsonl escaping and field order") {
  metrics::EvalReport r;
  r.label = "a\"b\\c\n";
  r.target = "go";
  r.clean_decoded = "go";
  r.adv_decoded = "go";
  r.success = true;
  r.wer_target = 0.0;
  r.cer_target = 0.0;
  r.snr_db = std::numeric_limits<double>::infinity();
  r.exceedance = 0.125;
  r.ctc_loss = 1.5;
  r.perceptual_loss = 0.0;
  const std::string s = metrics::to_jsonl(r);
  CHECK(s.find("\"label\":\"a\\\"b\\\\c\\n\"") != std::string::npos);
  CHECK(s.find("\"snr_db\":\"inf\"") != std::string::npos);  // no bare inf in JSON
  CHECK(s.find("\"exceedance\":0.125") != std::string::npos);
  CHECK(s.front() == '{');
  CHECK(s.back() == '}');
  CHECK(s.find('\n') == std::string::npos || s.find('\n') > s.find("label"));
}

TEST_CASE("csv writers") {
  const fs::path dir = fs::temp_directory_path();

  metrics::EvalReport r;
  r.label = "row \"one\"";
  r.target = "go";
  r.adv_decoded = "go";
  r.success = true;
  r.snr_db = 42.5;
  const std::vector<metrics::EvalReport> rows{r, r};
  const fs::path evp = dir / "pat_test_eval.csv";
  metrics::write_eval_csv(rows, evp);
  {
    std::ifstream in(evp);
    std::string header, l1, l2, extra;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "label,target,clean_decoded,adv_decoded,success,wer_target,cer_target,"
          "snr_db,exceedance,ctc_loss,perceptual_loss");
    REQUIRE(std::getline(in, l1));
    REQUIRE(std::getline(in, l2));
    CHECK(l1 == l2);
    CHECK(l1.find("\"row \"\"one\"\"\"") != std::string::npos);  // embedded quotes doubled
    CHECK(l1.find("42.5") != std::string::npos);
    CHECK_FALSE(std::getline(in, extra));
  }
  fs::remove(evp);

  attack::TraceRow t;
  t.iteration = 7;
  t.total = 1.25;
  t.ctc = std::numeric_limits<double>::quiet_NaN();
  t.perceptual = 0.5;
  t.grad_norm = 3.0;
  t.delta_norm = 0.01;
  t.success = false;
  const std::vector<attack::TraceRow> trace{t};
  const fs::path trp = dir / "pat_test_trace.csv";
  metrics::write_trace_csv(trace, trp);
  {
    std::ifstream in(trp);
    std::string header, line;
    REQUIRE(std::getline(in, header));
    CHECK(header == "iteration,total,ctc,perceptual,grad_norm,delta_norm,success");
    REQUIRE(std::getline(in, line));
    CHECK(line == "7,1.25,nan,0.5,3,0.01,false");
  }
  fs::remove(trp);

  CHECK_THROWS_AS(metrics::write_eval_csv(rows, fs::path("/no/such/dir/x.csv")), IoError);
}
