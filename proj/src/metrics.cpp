#include "pat/metrics.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "pat/errors.hpp"

namespace pat::metrics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Backtrace codes for the alignment grid.
enum : unsigned char { kHit, kSub, kIns, kDel };

template <typename Tok>
EditCounts align(std::span<const Tok> ref, std::span<const Tok> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  std::vector<unsigned char> op((n + 1) * (m + 1));
  auto idx = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };

  for (std::size_t j = 1; j <= m; ++j) {
    d[idx(0, j)] = j;
    op[idx(0, j)] = kIns;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    d[idx(i, 0)] = i;
    op[idx(i, 0)] = kDel;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (ref[i - 1] == hyp[j - 1]) {
        d[idx(i, j)] = d[idx(i - 1, j - 1)];
        op[idx(i, j)] = kHit;
        continue;
      }
      const std::size_t sub = d[idx(i - 1, j - 1)] + 1;
      const std::size_t ins = d[idx(i, j - 1)] + 1;
      const std::size_t del = d[idx(i - 1, j)] + 1;
      // Tie order fixes the backtrace, hence the reported counts.
      if (sub <= ins && sub <= del) {
        d[idx(i, j)] = sub;
        op[idx(i, j)] = kSub;
      } else if (ins <= del) {
        d[idx(i, j)] = ins;
        op[idx(i, j)] = kIns;
      } else {
        d[idx(i, j)] = del;
        op[idx(i, j)] = kDel;
      }
    }
  }

  EditCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (op[idx(i, j)]) {
      case kHit: ++c.hits; --i; --j; break;
      case kSub: ++c.substitutions; --i; --j; break;
      case kIns: ++c.insertions; --j; break;
      default: ++c.deletions; --i; break;
    }
  }
  return c;
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

// JSON has no inf/nan literals; those values are emitted as strings.
std::string json_num(double v) {
  const std::string s = fmt_num(v);
  if (std::isfinite(v)) return s;
  return "\"" + s + "\"";
}

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    out += ch;
    if (ch == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EditCounts edit_counts(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw ArgumentError("edit_counts: empty reference");
  return align(ref, hyp);
}

EditCounts char_edit_counts(std::string_view ref, std::string_view hyp) {
  if (ref.empty()) throw ArgumentError("char_edit_counts: empty reference");
  return align(std::span<const char>(ref.data(), ref.size()),
               std::span<const char>(hyp.data(), hyp.size()));
}

double error_rate(const EditCounts& c) {
  const std::size_t n = c.ref_len();
  if (n == 0) return c.insertions == 0 ? 0.0 : kInf;
  return static_cast<double>(c.substitutions + c.deletions + c.insertions) /
         static_cast<double>(n);
}

double wer(std::string_view ref, std::string_view hyp) {
  const auto r = words(ref), h = words(hyp);
  return error_rate(edit_counts(r, h));
}

double cer(std::string_view ref, std::string_view hyp) {
  return error_rate(char_edit_counts(ref, hyp));
}

double masking_exceedance(const Waveform& delta, const psy::MaskingAnalysis& analysis) {
  if (delta.size() != analysis.signal_len || delta.sample_rate_hz != analysis.sample_rate_hz)
    throw ArgumentError("masking_exceedance: delta does not match the analyzed carrier");
  const Spectrum spec = spectrum(segment(delta, analysis.config));
  std::size_t defined = 0, above = 0;
  for (std::size_t f = 0; f < analysis.num_frames; ++f) {
    if (analysis.spl[f].silent()) continue;  // no level reference in this frame
    const double off = *analysis.spl[f].norm_offset_db;
    for (std::size_t b = 0; b < analysis.num_bins; ++b) {
      ++defined;
      if (spec.psd_db(f, b) + off > analysis.threshold.t_db(f, b)) ++above;
    }
  }
  return defined ? static_cast<double>(above) / static_cast<double>(defined) : 0.0;
}

EvalReport evaluate(const Waveform& x, const Waveform& delta,
                    const ctc::MicroCtcModel& model, const ctc::Transcript& target,
                    const psy::MaskingAnalysis& analysis,
                    const room::Rir* through, bool bandpass) {
  if (x.size() != delta.size() || x.sample_rate_hz != delta.sample_rate_hz)
    throw ArgumentError("evaluate: carrier and delta shapes differ");

  Waveform xadv;
  xadv.sample_rate_hz = x.sample_rate_hz;
  xadv.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    xadv.samples[i] = x.samples[i] + delta.samples[i];

  Waveform clean_in = x, adv_in = xadv;
  if (through) {
    clean_in = room::apply_room(x, *through, bandpass, true);
    adv_in = room::apply_room(xadv, *through, bandpass, true);
  }

  EvalReport r;
  r.target = target.text;
  r.clean_decoded = ctc::greedy_decode(model, clean_in).text;
  const Mat logits = ctc::forward(model, adv_in);
  r.adv_decoded = ctc::greedy_decode(logits).text;
  r.success = r.adv_decoded == r.target;
  r.wer_target = wer(r.target, r.adv_decoded);
  r.cer_target = cer(r.target, r.adv_decoded);
  r.ctc_loss = ctc::ctc_loss(logits, ctc::Alphabet::standard().encode(target.text)).loss;
  r.snr_db = snr_db(x, delta);
  r.exceedance = masking_exceedance(delta, analysis);
  r.perceptual_loss = psy::perceptual_loss(delta, analysis).loss;
  return r;
}

std::string to_jsonl(const EvalReport& r) {
  std::string s = "{";
  s += "\"label\":\"" + json_escape(r.label) + "\",";
  s += "\"target\":\"" + json_escape(r.target) + "\",";
  s += "\"clean_decoded\":\"" + json_escape(r.clean_decoded) + "\",";
  s += "\"adv_decoded\":\"" + json_escape(r.adv_decoded) + "\",";
  s += std::string("\"success\":") + (r.success ? "true" : "false") + ",";
  s += "\"wer_target\":" + json_num(r.wer_target) + ",";
  s += "\"cer_target\":" + json_num(r.cer_target) + ",";
  s += "\"snr_db\":" + json_num(r.snr_db) + ",";
  s += "\"exceedance\":" + json_num(r.exceedance) + ",";
  s += "\"ctc_loss\":" + json_num(r.ctc_loss) + ",";
  s += "\"perceptual_loss\":" + json_num(r.perceptual_loss) + "}";
  return s;
}

void write_eval_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "label,target,clean_decoded,adv_decoded,success,wer_target,cer_target,"
         "snr_db,exceedance,ctc_loss,perceptual_loss\n";
  for (const EvalReport& r : reports) {
    out << csv_quote(r.label) << ',' << csv_quote(r.target) << ','
        << csv_quote(r.clean_decoded) << ',' << csv_quote(r.adv_decoded) << ','
        << (r.success ? "true" : "false") << ',' << fmt_num(r.wer_target) << ','
        << fmt_num(r.cer_target) << ',' << fmt_num(r.snr_db) << ','
        << fmt_num(r.exceedance) << ',' << fmt_num(r.ctc_loss) << ','
        << fmt_num(r.perceptual_loss) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

void write_trace_csv(std::span<const attack::TraceRow> rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iteration,total,ctc,perceptual,grad_norm,delta_norm,success\n";
  for (const attack::TraceRow& t : rows) {
    out << t.iteration << ',' << fmt_num(t.total) << ',' << fmt_num(t.ctc) << ','
        << fmt_num(t.perceptual) << ',' << fmt_num(t.grad_norm) << ','
        << fmt_num(t.delta_norm) << ',' << (t.success ? "true" : "false") << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace pat::metrics
