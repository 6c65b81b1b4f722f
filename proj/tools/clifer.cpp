#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <clifer/clifer.hpp>

using namespace clifer;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

template <class T>
std::vector<T> split_list(const std::string& text, T (*parse)(std::string_view)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse(item));
  return out;
}

std::uint64_t parse_seed(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("bad seed '" + std::string(s) + "'");
  return v;
}

struct SynthFlags {
  SynthConfig cfg;
  void attach(CLI::App* app) {
    app->add_option("--dim", cfg.dim, "feature dimension")->capture_default_str();
    app->add_option("--subjects", cfg.subjects, "number of subjects")->capture_default_str();
    app->add_option("--sequences-per-class", cfg.sequences_per_class)->capture_default_str();
    app->add_option("--frames", cfg.frames_per_sequence, "frames per sequence")->capture_default_str();
    app->add_option("--separation", cfg.class_separation, "distance between class anchors")->capture_default_str();
    app->add_option("--sigma", cfg.within_class_sigma, "within-class noise")->capture_default_str();
    app->add_option("--ar", cfg.ar_coefficient, "AR(1) coefficient of the noise")->capture_default_str();
    app->add_option("--offset-sigma", cfg.subject_offset_sigma, "per-subject offset scale")->capture_default_str();
    app->add_option("--synth-seed", cfg.seed, "generator seed")->capture_default_str();
  }
};

// Options shared by `run` and `snapshot save`.
struct RunFlags {
  std::string experiment = "exp2";
  std::string variants;
  std::string data;
  bool synthetic = false;
  std::string seeds = "1";
  std::string order;
  std::string params;
  SynthFlags synth;

  void attach(CLI::App* app) {
    app->add_option("--data", data, "feature CSV");
    app->add_flag("--synthetic", synthetic, "use generated data (default when --data is absent)");
    app->add_option("--seeds", seeds, "comma-separated seeds")->capture_default_str();
    app->add_option("--order", order, "comma-separated class order");
    app->add_option("--params", params, "JSON config overriding defaults");
    synth.attach(app);
  }

  ExperimentConfig build() const {
    if (!data.empty() && synthetic) throw ConfigError("--data and --synthetic are mutually exclusive");
    ExperimentConfig cfg;
    cfg.experiment = parse_experiment(experiment == "orders" ? "order_sensitivity" : experiment);
    if (cfg.experiment == ExperimentKind::order_sensitivity) cfg.orders_mode = OrdersMode::six_starts;
    if (!variants.empty()) cfg.variants = split_list<Variant>(variants, parse_variant);
    if (data.empty()) {
      cfg.synthetic = synth.cfg;
    } else {
      cfg.synthetic.reset();
      cfg.csv_path = data;
    }
    cfg.seeds = split_list<std::uint64_t>(seeds, parse_seed);
    if (!order.empty()) cfg.class_order = parse_order(order);
    if (!params.empty()) apply_config_json(cfg, read_json_file(params));
    cfg.validate();
    return cfg;
  }
};

int cmd_synth(const SynthFlags& f, const std::string& out) {
  f.cfg.validate();
  const auto data = generate_synthetic(f.cfg);
  if (out == "-") write_csv(std::cout, data);
  else save_csv(out, data);
  return kOk;
}

int cmd_run(const RunFlags& f, const std::string& out) {
  const auto cfg = f.build();
  std::vector<RunRecord> records;
  std::vector<std::string> skipped;
  std::optional<OrderSensitivityResult> orders;
  if (cfg.experiment == ExperimentKind::order_sensitivity) {
    orders = run_order_sensitivity(cfg);
    records = orders->experiment.records;
    skipped = orders->experiment.skipped_subjects;
  } else {
    auto res = cfg.experiment == ExperimentKind::exp1 ? run_experiment1(cfg) : run_experiment2(cfg);
    records = std::move(res.records);
    skipped = std::move(res.skipped_subjects);
  }
  if (records.empty()) throw DataError("no usable subjects: every subject lacks some expression class");
  write_report(out, records, orders ? &*orders : nullptr, run_meta_json(cfg, skipped));
  write_text_file((std::filesystem::path(out) / "timings.csv").string(), timings_csv(records));
  std::cout << "wrote " << records.size() << " records to " << out << "\n";
  if (orders)
    for (const auto& [v, kw] : orders->kruskal_wallis)
      std::printf("%s: H=%.4f df=%zu p=%.4g\n", std::string(to_string(v)).c_str(), kw.h,
                  static_cast<std::size_t>(kw.degrees_of_freedom), kw.p_value);
  if (orders)
    for (const auto& [v, msg] : orders->errors)
      std::printf("%s: no test (%s)\n", std::string(to_string(v)).c_str(), msg.c_str());
  return kOk;
}

int cmd_report(const std::string& records_path, const std::string& out) {
  std::ifstream in(records_path);
  if (!in) throw DataError("cannot open " + records_path);
  const auto records = parse_records_csv(in);
  if (records.empty()) throw DataError(records_path + " holds no records");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out + ": " + ec.message());
  const std::filesystem::path base(out);
  write_text_file((base / "summary.json").string(), dump(summary_json(records, nullptr)));
  write_text_file((base / "plot_data.csv").string(), plot_data_csv(records));
  for (const auto& row : summarize(records)) {
    std::printf("%s %-10s ep%zu %-8s n=%zu mean=%.4f", row.experiment.c_str(),
                std::string(to_string(row.variant)).c_str(), row.episode, row.head.c_str(), row.n, row.mean);
    if (row.half_width) std::printf(" +/- %.4f", *row.half_width);
    std::printf("\n");
  }
  return kOk;
}

int cmd_snapshot_save(const RunFlags& f, const std::string& variant_name, const std::string& subject_id,
                      const std::string& out) {
  const auto variant = parse_variant(variant_name);
  if (variant == Variant::baseline) throw ConfigError("snapshots cover the dual-memory variants only");
  auto cfg = f.build();
  cfg.variants = {variant};
  const std::uint64_t seed = cfg.seeds.front();
  const auto subjects = prepare_subjects(cfg, seed);
  if (subjects.empty()) throw DataError("no usable subjects");
  const SubjectRun* subject = &subjects.front();
  if (!subject_id.empty()) {
    const auto it = std::find_if(subjects.begin(), subjects.end(),
                                 [&](const SubjectRun& s) { return s.subject_id == subject_id; });
    if (it == subjects.end()) throw DataError("unknown subject '" + subject_id + "'");
    subject = &*it;
  }
  const auto cell = run_cell(cfg, variant, *subject, cfg.class_order, 0, seed, EvalScope::all_classes);
  write_text_file(out, dump(to_json(*cell.memory)));
  std::cout << "saved " << to_string(variant) << " memory for " << subject->subject_id << " to " << out << "\n";
  return kOk;
}

void describe(const GwrNetwork& net, const char* name) {
  std::printf("%s: %zu neurons, %zu edges, dim %zu, labels", name, net.size(), net.edges().size(), net.dim());
  for (Expression e : net.label_set()) std::printf(" %s", std::string(to_string(e)).c_str());
  std::printf("\n");
}

int cmd_snapshot_load(const std::string& in, const std::string& eval_csv) {
  const auto j = read_json_file(in);
  const auto kind = j.value("kind", std::string{});
  if (kind == "gwr_network") {
    describe(network_from_json(j), "network");
    if (!eval_csv.empty()) throw ConfigError("--eval needs a dual_memory snapshot");
    return kOk;
  }
  if (kind == "translation_model") {
    const auto m = translation_from_json(j);
    std::printf("translation model: dim %zu, jitter %g\n", m.class_means()[0].size(), m.jitter_sigma());
    if (!eval_csv.empty()) throw ConfigError("--eval needs a dual_memory snapshot");
    return kOk;
  }
  if (kind != "dual_memory") throw DataError("unknown snapshot kind '" + kind + "'");
  const auto dm = dual_memory_from_json(j);
  std::printf("dual memory after %zu episodes\n", dm.episodes_learned());
  if (!dm.initialized()) return kOk;
  describe(dm.episodic(), "episodic");
  describe(dm.semantic(), "semantic");
  if (eval_csv.empty()) return kOk;
  ConfusionMatrix episodic, semantic;
  for (const auto& subject : load_csv(eval_csv))
    for (const auto& s : subject.sequences) {
      const auto [e, m] = dm.classify(s.frames);
      episodic.add(s.label, e);
      semantic.add(s.label, m);
    }
  std::printf("macro-F1 on %s: episodic %.4f semantic %.4f\n", eval_csv.c_str(), macro_f1(episodic),
              macro_f1(semantic));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual facial-expression learning with dual GWR memories"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic feature CSV");
  SynthFlags synth_flags;
  std::string synth_out;
  synth_flags.attach(synth);
  synth->add_option("-o,--out", synth_out, "output CSV, or - for stdout")->required();

  auto* run = app.add_subcommand("run", "run an experiment grid and write reports");
  RunFlags run_flags;
  std::string run_out = "out";
  run->add_option("--experiment", run_flags.experiment, "exp1 | exp2 | orders")
      ->check(CLI::IsMember({"exp1", "exp2", "orders"}))
      ->capture_default_str();
  run->add_option("--variants", run_flags.variants, "comma-separated: gdm,gdm_replay,clifer,baseline");
  run->add_option("-o,--out", run_out, "output directory")->capture_default_str();
  run_flags.attach(run);

  auto* report = app.add_subcommand("report", "summarise an existing records.csv");
  std::string report_in, report_out;
  report->add_option("records", report_in, "records.csv")->required();
  report->add_option("-o,--out", report_out, "output directory")->required();

  auto* snapshot = app.add_subcommand("snapshot", "save or inspect model envelopes");
  snapshot->require_subcommand(1);
  auto* save = snapshot->add_subcommand("save", "train one subject through all episodes and save its memory");
  RunFlags save_flags;
  std::string save_variant = "clifer", save_subject, save_out;
  save->add_option("--variant", save_variant, "gdm | gdm_replay | clifer")->capture_default_str();
  save->add_option("--subject", save_subject, "subject id (default: first usable)");
  save->add_option("-o,--out", save_out, "snapshot file")->required();
  save_flags.attach(save);
  auto* load = snapshot->add_subcommand("load", "validate and describe a snapshot");
  std::string load_in, load_eval;
  load->add_option("snapshot", load_in, "snapshot file")->required();
  load->add_option("--eval", load_eval, "feature CSV to classify with the loaded memory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_flags, synth_out);
    if (*run) return cmd_run(run_flags, run_out);
    if (*report) return cmd_report(report_in, report_out);
    if (*save) return cmd_snapshot_save(save_flags, save_variant, save_subject, save_out);
    if (*load) return cmd_snapshot_load(load_in, load_eval);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
