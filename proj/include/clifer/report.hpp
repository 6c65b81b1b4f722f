#pragma once

// Report emission: records.csv, summary.json, plot_data.csv, run_meta.json.
// Output is a pure function of its inputs (sorted rows, fixed 9-digit floats).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "harness.hpp"
#include "snapshot.hpp"
#include "stats.hpp"

namespace clifer {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

inline constexpr std::string_view kRecordsHeader =
    "experiment,variant,subject_id,order_id,order,seed,episode,class_learned,episodic_f1,semantic_f1,f1,"
    "episodic_size,semantic_size,replayed_trajectories,imagined_samples";

inline std::string records_csv(std::vector<RunRecord> records) {
  std::stable_sort(records.begin(), records.end(), record_less);
  std::ostringstream out;
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << to_string(r.variant) << ',' << r.subject_id << ',' << r.order_id << ','
        << order_string(r.order) << ',' << r.seed << ',' << r.episode << ',' << to_string(r.class_learned) << ','
        << format_optional(r.episodic_f1) << ',' << format_optional(r.semantic_f1) << ',' << format_optional(r.f1)
        << ',' << r.episodic_size << ',' << r.semantic_size << ',' << r.replayed_trajectories << ','
        << r.imagined_samples << '\n';
  }
  return out.str();
}

// Wall-clock timings live apart from records.csv so that file stays reproducible.
inline std::string timings_csv(std::vector<RunRecord> records) {
  std::stable_sort(records.begin(), records.end(), record_less);
  std::ostringstream out;
  out << "experiment,variant,subject_id,order_id,seed,episode,wall_ms\n";
  for (const auto& r : records)
    out << r.experiment << ',' << to_string(r.variant) << ',' << r.subject_id << ',' << r.order_id << ',' << r.seed
        << ',' << r.episode << ',' << format_real(r.wall_ms) << '\n';
  return out.str();
}

inline std::vector<RunRecord> parse_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim_cr(line) != kRecordsHeader)
    throw SchemaError("records.csv header mismatch");
  auto opt = [&](std::string_view s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    if (!detail::parse_double(s, v)) throw ParseError("bad number '" + std::string(s) + "'", line_no);
    return v;
  };
  auto integer = [&](std::string_view s) -> std::uint64_t {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("bad integer '" + std::string(s) + "'", line_no);
    return v;
  };
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim_cr(line);
    if (text.empty()) continue;
    const auto f = detail::split_fields(text);
    if (f.size() != 15) throw ParseError("expected 15 columns", line_no);
    try {
      RunRecord r;
      r.experiment = std::string(f[0]);
      r.variant = parse_variant(f[1]);
      r.subject_id = std::string(f[2]);
      r.order_id = integer(f[3]);
      r.order = parse_order(f[4], '|');
      r.seed = integer(f[5]);
      r.episode = integer(f[6]);
      r.class_learned = parse_expression(f[7]);
      r.episodic_f1 = opt(f[8]);
      r.semantic_f1 = opt(f[9]);
      r.f1 = opt(f[10]);
      r.episodic_size = integer(f[11]);
      r.semantic_size = integer(f[12]);
      r.replayed_trajectories = integer(f[13]);
      r.imagined_samples = integer(f[14]);
      out.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ProtocolError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

struct SummaryRow {
  std::string experiment;
  Variant variant = Variant::gdm;
  std::size_t episode = 0;
  std::string head;  // episodic | semantic | baseline
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> half_width;  // absent when n < 2
};

inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, int, std::size_t, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    const int v = static_cast<int>(r.variant);
    if (r.episodic_f1) groups[{r.experiment, v, r.episode, "episodic"}].push_back(*r.episodic_f1);
    if (r.semantic_f1) groups[{r.experiment, v, r.episode, "semantic"}].push_back(*r.semantic_f1);
    if (r.f1) groups[{r.experiment, v, r.episode, "baseline"}].push_back(*r.f1);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.experiment = std::get<0>(key);
    row.variant = static_cast<Variant>(std::get<1>(key));
    row.episode = std::get<2>(key);
    row.head = std::get<3>(key);
    row.n = values.size();
    row.mean = mean_of(values);
    if (values.size() >= 2) row.half_width = mean_ci95(values).half_width;
    out.push_back(std::move(row));
  }
  return out;
}

// Rounds through the fixed 9-digit format so JSON numbers match the CSVs.
inline json fixed_number(double v) { return std::stod(format_real(v)); }

inline json summary_json(const std::vector<RunRecord>& records, const OrderSensitivityResult* orders) {
  json j;
  j["ci_method"] = "normal approximation: mean +/- 1.96 * s / sqrt(n)";
  json rows = json::array();
  for (const auto& r : summarize(records)) {
    json o;
    o["experiment"] = r.experiment;
    o["variant"] = to_string(r.variant);
    o["episode"] = r.episode;
    o["head"] = r.head;
    o["n"] = r.n;
    o["mean"] = fixed_number(r.mean);
    o["ci95_half_width"] = r.half_width ? fixed_number(*r.half_width) : json(nullptr);
    rows.push_back(std::move(o));
  }
  j["groups"] = std::move(rows);
  if (orders) {
    json os;
    json order_list = json::array();
    for (const auto& o : orders->orders) order_list.push_back(order_string(o));
    os["orders"] = std::move(order_list);
    json per_variant = json::object();
    for (const auto& [v, means] : orders->order_means) {
      json pv;
      json m = json::array();
      for (double x : means) m.push_back(fixed_number(x));
      pv["final_f1_mean_per_order"] = std::move(m);
      if (auto it = orders->kruskal_wallis.find(v); it != orders->kruskal_wallis.end()) {
        pv["kruskal_wallis"] = {{"H", fixed_number(it->second.h)},
                                {"df", it->second.degrees_of_freedom},
                                {"p_value", fixed_number(it->second.p_value)},
                                {"tie_corrected", it->second.tie_corrected}};
      } else if (auto e = orders->errors.find(v); e != orders->errors.end()) {
        pv["kruskal_wallis_error"] = e->second;
      }
      per_variant[std::string(to_string(v))] = std::move(pv);
    }
    os["per_variant"] = std::move(per_variant);
    j["order_sensitivity"] = std::move(os);
  }
  return j;
}

inline std::string plot_data_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "experiment,episode,variant,head,mean,ci_low,ci_high\n";
  for (const auto& r : summarize(records)) {
    out << r.experiment << ',' << r.episode << ',' << to_string(r.variant) << ',' << r.head << ','
        << format_real(r.mean) << ',';
    if (r.half_width)
      out << format_real(r.mean - *r.half_width) << ',' << format_real(r.mean + *r.half_width);
    else
      out << ',';
    out << '\n';
  }
  return out.str();
}

inline json synth_to_json(const SynthConfig& s) {
  return {{"dim", s.dim},
          {"subjects", s.subjects},
          {"sequences_per_class", s.sequences_per_class},
          {"frames_per_sequence", s.frames_per_sequence},
          {"class_separation", s.class_separation},
          {"within_class_sigma", s.within_class_sigma},
          {"ar_coefficient", s.ar_coefficient},
          {"subject_offset_sigma", s.subject_offset_sigma},
          {"seed", s.seed}};
}

inline SynthConfig synth_from_json(const json& j, SynthConfig s = {}) {
  return detail::guarded([&] {
    if (j.contains("dim")) s.dim = j.at("dim").get<std::size_t>();
    if (j.contains("subjects")) s.subjects = j.at("subjects").get<std::size_t>();
    if (j.contains("sequences_per_class")) s.sequences_per_class = j.at("sequences_per_class").get<std::size_t>();
    if (j.contains("frames_per_sequence")) s.frames_per_sequence = j.at("frames_per_sequence").get<std::size_t>();
    if (j.contains("class_separation")) s.class_separation = j.at("class_separation").get<double>();
    if (j.contains("within_class_sigma")) s.within_class_sigma = j.at("within_class_sigma").get<double>();
    if (j.contains("ar_coefficient")) s.ar_coefficient = j.at("ar_coefficient").get<double>();
    if (j.contains("subject_offset_sigma")) s.subject_offset_sigma = j.at("subject_offset_sigma").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
  });
}

// The --params config file: any subset of these keys overrides the defaults.
inline void apply_config_json(ExperimentConfig& cfg, const json& j) {
  detail::guarded([&] {
    if (j.contains("episodic")) cfg.episodic = params_from_json(j.at("episodic"), cfg.episodic);
    if (j.contains("semantic")) cfg.semantic = params_from_json(j.at("semantic"), cfg.semantic);
    if (j.contains("trajectory_length")) cfg.trajectory_length = j.at("trajectory_length").get<std::size_t>();
    if (j.contains("replay_period")) cfg.replay_period = j.at("replay_period").get<std::size_t>();
    if (j.contains("replay_order")) {
      const auto o = j.at("replay_order").get<std::string>();
      if (o == "replay_then_imagination") cfg.replay_order = ReplayOrder::replay_then_imagination;
      else if (o == "imagination_then_replay") cfg.replay_order = ReplayOrder::imagination_then_replay;
      else throw ConfigError("unknown replay_order '" + o + "'");
    }
    if (j.contains("test_fraction")) cfg.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("synthetic") && cfg.synthetic) cfg.synthetic = synth_from_json(j.at("synthetic"), *cfg.synthetic);
    if (j.contains("imagination")) {
      const auto& im = j.at("imagination");
      if (im.contains("generator")) {
        const auto g = im.at("generator").get<std::string>();
        if (g == "translation") cfg.imagination.generator = GeneratorKind::translation;
        else if (g == "oracle") cfg.imagination.generator = GeneratorKind::oracle;
        else throw ConfigError("unknown generator '" + g + "'");
      }
      if (im.contains("n_per_class")) cfg.imagination.n_per_class = im.at("n_per_class").get<std::size_t>();
      if (im.contains("jitter_sigma")) cfg.imagination.jitter_sigma = im.at("jitter_sigma").get<double>();
      if (im.contains("oracle_sigma")) cfg.imagination.oracle_sigma = im.at("oracle_sigma").get<double>();
      if (im.contains("order_bias_leak"))
        cfg.imagination.order_bias_leak = im.at("order_bias_leak").get<double>();
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      if (b.contains("hidden")) cfg.baseline.hidden = b.at("hidden").get<std::size_t>();
      if (b.contains("epochs")) cfg.baseline.epochs = b.at("epochs").get<std::size_t>();
      if (b.contains("lr")) cfg.baseline.lr = b.at("lr").get<double>();
    }
    return 0;
  });
}

inline json readable_params(const GwrParams& p) {
  return {{"insertion_threshold", p.insertion_threshold},
          {"habituation_threshold", p.habituation_threshold},
          {"eps_b", p.eps_b},
          {"eps_n", p.eps_n},
          {"tau_b", p.tau_b},
          {"tau_n", p.tau_n},
          {"kappa", p.kappa},
          {"max_edge_age", p.max_edge_age},
          {"context_depth", p.context_depth},
          {"beta", p.beta},
          {"alpha", p.alpha},
          {"prune_isolated", p.prune_isolated}};
}

inline json run_meta_json(const ExperimentConfig& cfg, const std::vector<std::string>& skipped) {
  json j;
  j["experiment"] = to_string(cfg.experiment);
  json variants = json::array();
  for (Variant v : cfg.variants) variants.push_back(to_string(v));
  j["variants"] = std::move(variants);
  j["class_order"] = order_string(cfg.class_order);
  j["orders_mode"] = cfg.orders_mode == OrdersMode::fixed ? "fixed" : "six_starts";
  if (cfg.synthetic) {
    j["data_source"] = "synthetic";
    j["synthetic"] = synth_to_json(*cfg.synthetic);
    j["feature_dim"] = cfg.synthetic->dim;
  } else {
    j["data_source"] = *cfg.csv_path;
  }
  j["seeds"] = cfg.seeds;
  j["test_fraction"] = cfg.test_fraction;
  j["episodic_params"] = readable_params(cfg.episodic);
  j["semantic_params"] = readable_params(cfg.semantic);
  j["trajectory_length"] = cfg.trajectory_length;
  j["replay_period"] = cfg.replay_period;
  j["replay_order"] = cfg.replay_order == ReplayOrder::replay_then_imagination ? "replay_then_imagination"
                                                                                : "imagination_then_replay";
  j["imagination"] = {{"generator", cfg.imagination.generator == GeneratorKind::translation ? "translation" : "oracle"},
                      {"n_per_class", cfg.imagination.n_per_class},
                      {"jitter_sigma", cfg.imagination.jitter_sigma},
                      {"oracle_sigma", cfg.imagination.oracle_sigma},
                      {"order_bias_leak", cfg.imagination.order_bias_leak}};
  j["baseline"] = {{"hidden", cfg.baseline.hidden}, {"epochs", cfg.baseline.epochs}, {"lr", cfg.baseline.lr}};
  j["skipped_subjects"] = skipped;
  j["interpretations"] = {
      {"exp1_metric", "after episode i, macro-F1 over test sequences of the classes seen so far"},
      {"exp2_metric", "after episode i, macro-F1 over test sequences of all six classes"},
      {"f1_averaging", "macro (unweighted) over classes present as truth or prediction"},
      {"ci_method", "normal approximation, 1.96 * standard error"},
      {"baseline_training", "sequential: each episode trains only on that episode's class"},
      {"clifer_variant", "pseudo-rehearsal replay plus imagination after every episode"},
      {"order_groups", "Kruskal-Wallis over final-episode F1 per (subject, seed), grouped by starting class"},
      {"synthetic_replicates", "synthetic data is regenerated for every seed"}};
  return j;
}

inline void write_report(const std::string& dir, const std::vector<RunRecord>& records,
                         const OrderSensitivityResult* orders, const json& meta) {
  if (records.empty()) throw InputError("cannot report an empty record set");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_text_file((base / "records.csv").string(), records_csv(records));
  write_text_file((base / "summary.json").string(), dump(summary_json(records, orders)));
  write_text_file((base / "plot_data.csv").string(), plot_data_csv(records));
  write_text_file((base / "run_meta.json").string(), dump(meta));
}

}  // namespace clifer
