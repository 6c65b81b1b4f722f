#pragma once

// Per-subject expression-feature datasets: synthetic generation, CSV
// ingestion of pre-encoded features, and stratified train/test splitting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"
#include "rng.hpp"
#include "vector_ops.hpp"

namespace clifer {

struct LabeledSequence {
  std::string subject_id;
  std::string sample_id;
  Expression label = Expression::neutral;
  std::vector<Vector> frames;

  bool operator==(const LabeledSequence&) const = default;
};

struct SubjectDataset {
  std::string subject_id;
  std::vector<LabeledSequence> sequences;
  std::size_t dim = 0;

  std::size_t count(Expression cls) const {
    return static_cast<std::size_t>(std::count_if(sequences.begin(), sequences.end(),
                                                  [cls](const auto& s) { return s.label == cls; }));
  }
  bool covers_all_classes() const {
    return std::all_of(kAllExpressions.begin(), kAllExpressions.end(),
                       [this](Expression e) { return count(e) > 0; });
  }
  std::vector<LabeledSequence> of_class(Expression cls) const {
    std::vector<LabeledSequence> out;
    for (const auto& s : sequences)
      if (s.label == cls) out.push_back(s);
    return out;
  }

  bool operator==(const SubjectDataset&) const = default;
};

struct SynthConfig {
  std::size_t dim = 32;
  std::size_t subjects = 12;
  std::size_t sequences_per_class = 4;
  std::size_t frames_per_sequence = 5;
  double class_separation = 1.0;
  double within_class_sigma = 0.15;
  double ar_coefficient = 0.5;  // rho
  double subject_offset_sigma = 0.2;
  std::uint64_t seed = 1;

  void validate() const {
    if (dim < kNumClasses) throw ConfigError("synthetic dim must be >= 6 for the class simplex");
    if (subjects == 0 || sequences_per_class == 0 || frames_per_sequence == 0)
      throw ConfigError("synthetic counts must be positive");
    if (!(class_separation > 0.0)) throw ConfigError("class_separation must be positive");
    if (!(within_class_sigma >= 0.0) || !(subject_offset_sigma >= 0.0))
      throw ConfigError("sigmas must be non-negative");
    if (!(ar_coefficient >= 0.0 && ar_coefficient < 1.0)) throw ConfigError("ar_coefficient must lie in [0,1)");
  }

  bool operator==(const SynthConfig&) const = default;
};

// Regular simplex: scaled unit vectors e_i * sep / sqrt(2), pairwise distance sep.
inline std::vector<Vector> class_anchors(std::size_t dim, double separation) {
  if (dim < kNumClasses) throw ConfigError("synthetic dim must be >= 6 for the class simplex");
  std::vector<Vector> anchors(kNumClasses, Vector(dim, 0.0));
  for (std::size_t i = 0; i < kNumClasses; ++i) anchors[i][i] = separation / std::sqrt(2.0);
  return anchors;
}

inline std::string subject_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02zu", i + 1);
  return buf;
}

// Identity offset drawn for subject `i`; exposed so an oracle can recover true class means.
inline Vector subject_offset(const SynthConfig& cfg, std::size_t i) {
  Rng rng = make_rng(cfg.seed, {0x1d, i});
  Vector off(cfg.dim, 0.0);
  add_gaussian(off, cfg.subject_offset_sigma, rng);
  return off;
}

// True per-subject class means: anchor + identity offset.
inline std::vector<Vector> subject_class_means(const SynthConfig& cfg, std::size_t i) {
  auto means = class_anchors(cfg.dim, cfg.class_separation);
  const Vector off = subject_offset(cfg, i);
  for (auto& m : means)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += off[k];
  return means;
}

inline std::vector<SubjectDataset> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const double innovation = std::sqrt(1.0 - cfg.ar_coefficient * cfg.ar_coefficient);
  std::vector<SubjectDataset> out;
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    SubjectDataset ds;
    ds.subject_id = subject_name(s);
    ds.dim = cfg.dim;
    const auto means = subject_class_means(cfg, s);
    Rng rng = make_rng(cfg.seed, {0xf7, s});
    for (Expression cls : kAllExpressions) {
      for (std::size_t q = 0; q < cfg.sequences_per_class; ++q) {
        LabeledSequence seq;
        seq.subject_id = ds.subject_id;
        seq.sample_id = std::string(to_string(cls)) + "-" + std::to_string(q);
        seq.label = cls;
        // e_0 is drawn from the stationary law so every frame has variance sigma^2.
        Vector noise(cfg.dim, 0.0);
        add_gaussian(noise, cfg.within_class_sigma, rng);
        for (std::size_t t = 0; t < cfg.frames_per_sequence; ++t) {
          if (t > 0) {
            Vector fresh(cfg.dim, 0.0);
            add_gaussian(fresh, cfg.within_class_sigma, rng);
            for (std::size_t k = 0; k < cfg.dim; ++k)
              noise[k] = cfg.ar_coefficient * noise[k] + innovation * fresh[k];
          }
          Vector frame = means[index_of(cls)];
          for (std::size_t k = 0; k < cfg.dim; ++k) frame[k] += noise[k];
          seq.frames.push_back(std::move(frame));
        }
        ds.sequences.push_back(std::move(seq));
      }
    }
    out.push_back(std::move(ds));
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& v) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::vector<SubjectDataset> parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw SchemaError("empty CSV: header required");
  const auto header = detail::split_fields(detail::trim_cr(line));
  if (header.size() < 5 || header[0] != "subject_id" || header[1] != "sample_id" ||
      header[2] != "frame_index" || header[3] != "label")
    throw SchemaError("CSV header must start with subject_id,sample_id,frame_index,label,f0");
  const std::size_t dim = header.size() - 4;

  struct Pending {
    LabeledSequence seq;
    std::map<long long, Vector> frames;
  };
  std::vector<std::string> subject_order;
  std::map<std::string, std::vector<std::string>> sample_order;
  std::map<std::pair<std::string, std::string>, Pending> pending;

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim_cr(line);
    if (text.empty()) continue;
    const auto f = detail::split_fields(text);
    if (f.size() < 5) throw ParseError("malformed row", line_no);
    if (f.size() != dim + 4)
      throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                        " feature columns, found " + std::to_string(f.size() - 4));
    const std::string subject(f[0]), sample(f[1]);
    if (subject.empty() || sample.empty()) throw ParseError("empty subject_id or sample_id", line_no);
    long long frame_index = 0;
    {
      auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), frame_index);
      if (ec != std::errc{} || ptr != f[2].data() + f[2].size() || frame_index < 0)
        throw ParseError("bad frame_index '" + std::string(f[2]) + "'", line_no);
    }
    const auto label = try_parse_expression(f[3]);
    if (!label)
      throw LabelError("line " + std::to_string(line_no) + ": unknown label '" + std::string(f[3]) + "'");
    Vector frame(dim);
    for (std::size_t k = 0; k < dim; ++k)
      if (!detail::parse_double(f[4 + k], frame[k]))
        throw ParseError("bad feature value '" + std::string(f[4 + k]) + "'", line_no);

    auto key = std::make_pair(subject, sample);
    auto it = pending.find(key);
    if (it == pending.end()) {
      if (!sample_order.contains(subject)) subject_order.push_back(subject);
      sample_order[subject].push_back(sample);
      Pending p;
      p.seq.subject_id = subject;
      p.seq.sample_id = sample;
      p.seq.label = *label;
      it = pending.emplace(key, std::move(p)).first;
    } else if (it->second.seq.label != *label) {
      throw LabelError("line " + std::to_string(line_no) + ": label changes within sample '" + sample + "'");
    }
    if (!it->second.frames.emplace(frame_index, std::move(frame)).second)
      throw ParseError("duplicate frame_index " + std::to_string(frame_index), line_no);
  }

  std::vector<SubjectDataset> out;
  for (const auto& subject : subject_order) {
    SubjectDataset ds;
    ds.subject_id = subject;
    ds.dim = dim;
    for (const auto& sample : sample_order[subject]) {
      auto& p = pending.at({subject, sample});
      for (auto& [idx, frame] : p.frames) p.seq.frames.push_back(std::move(frame));
      ds.sequences.push_back(std::move(p.seq));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

inline std::vector<SubjectDataset> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_csv(in);
}

inline void write_csv(std::ostream& out, const std::vector<SubjectDataset>& data) {
  std::size_t dim = data.empty() ? 0 : data.front().dim;
  out << "subject_id,sample_id,frame_index,label";
  for (std::size_t k = 0; k < dim; ++k) out << ",f" << k;
  out << '\n';
  for (const auto& ds : data) {
    if (ds.dim != dim) throw SchemaError("subjects disagree on feature dimension");
    for (const auto& seq : ds.sequences)
      for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        out << seq.subject_id << ',' << seq.sample_id << ',' << t << ',' << to_string(seq.label);
        for (double v : seq.frames[t]) out << ',' << detail::format_double(v);
        out << '\n';
      }
  }
}

inline void save_csv(const std::string& path, const std::vector<SubjectDataset>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_csv(out, data);
  if (!out) throw DataError("write failed for " + path);
}

struct Split {
  SubjectDataset train;
  SubjectDataset test;
};

// Stratified per class: ceil(fraction * n) sequences go to test (at most n - 1).
inline Split split(const SubjectDataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("test_fraction must lie in (0,1)");
  Split out;
  out.train.subject_id = out.test.subject_id = ds.subject_id;
  out.train.dim = out.test.dim = ds.dim;
  std::vector<bool> to_test(ds.sequences.size(), false);
  for (Expression cls : kAllExpressions) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i)
      if (ds.sequences[i].label == cls) idx.push_back(i);
    if (idx.empty()) continue;
    if (idx.size() < 2)
      throw SplitError("class " + std::string(to_string(cls)) + " has fewer than 2 sequences for subject " +
                       ds.subject_id);
    Rng rng = make_rng(seed, {0x5b, index_of(cls)});
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(idx.size()) - 1e-9));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) to_test[idx[i]] = true;
  }
  for (std::size_t i = 0; i < ds.sequences.size(); ++i)
    (to_test[i] ? out.test : out.train).sequences.push_back(ds.sequences[i]);
  return out;
}

}  // namespace clifer
