#pragma once

// Class-incremental experiment protocol: variant grid, class orders,
// Experiments 1 and 2, order sensitivity, and the sequential baseline.

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "baseline.hpp"
#include "datasets.hpp"
#include "dual_memory.hpp"
#include "errors.hpp"
#include "imagination.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace clifer {

enum class ExperimentKind { exp1, exp2, order_sensitivity };
enum class Variant { gdm, gdm_replay, clifer, baseline };
enum class OrdersMode { fixed, six_starts };
enum class GeneratorKind { translation, oracle };

inline constexpr std::array<Variant, 4> kAllVariants{Variant::gdm, Variant::gdm_replay, Variant::clifer,
                                                     Variant::baseline};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::gdm: return "gdm";
    case Variant::gdm_replay: return "gdm_replay";
    case Variant::clifer: return "clifer";
    case Variant::baseline: return "baseline";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : kAllVariants)
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

inline std::string_view to_string(ExperimentKind e) {
  switch (e) {
    case ExperimentKind::exp1: return "exp1";
    case ExperimentKind::exp2: return "exp2";
    case ExperimentKind::order_sensitivity: return "orders";
  }
  return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
  if (s == "exp1") return ExperimentKind::exp1;
  if (s == "exp2") return ExperimentKind::exp2;
  if (s == "orders" || s == "order_sensitivity") return ExperimentKind::order_sensitivity;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

using ClassOrder = std::array<Expression, kNumClasses>;

inline constexpr ClassOrder kNeutralFirstOrder = kAllExpressions;

inline std::string order_string(const ClassOrder& o) {
  std::string s;
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (i) s += '|';
    s += to_string(o[i]);
  }
  return s;
}

inline ClassOrder parse_order(std::string_view text, char sep = ',') {
  ClassOrder o{};
  std::size_t n = 0;
  std::array<bool, kNumClasses> used{};
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(sep, start);
    auto tok = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    const auto e = try_parse_expression(tok);
    if (!e) throw ConfigError("unknown class '" + std::string(tok) + "' in order");
    if (n >= kNumClasses || used[index_of(*e)]) throw ConfigError("class order must be a permutation of the 6 classes");
    used[index_of(*e)] = true;
    o[n++] = *e;
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (n != kNumClasses) throw ConfigError("class order must list all 6 classes");
  return o;
}

// One order per starting class; the remaining five are shuffled by `seed`.
inline std::vector<ClassOrder> six_start_orders(std::uint64_t seed) {
  std::vector<ClassOrder> out;
  for (Expression first : kAllExpressions) {
    std::vector<Expression> rest;
    for (Expression e : kAllExpressions)
      if (e != first) rest.push_back(e);
    Rng rng = make_rng(seed, {0x0d, index_of(first)});
    std::shuffle(rest.begin(), rest.end(), rng);
    ClassOrder o{};
    o[0] = first;
    std::copy(rest.begin(), rest.end(), o.begin() + 1);
    out.push_back(o);
  }
  return out;
}

struct ImaginationConfig {
  GeneratorKind generator = GeneratorKind::translation;
  std::size_t n_per_class = 5;
  double jitter_sigma = 0.05;
  double oracle_sigma = 0.0;
  // Positive-control knob: for orders that do not start with neutral, every
  // imagined batch is pulled this far towards its source prototypes.
  double order_bias_leak = 0.0;
};

struct BaselineConfig {
  std::size_t hidden = 32;
  std::size_t epochs = 5;
  double lr = 0.05;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::exp2;
  std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
  ClassOrder class_order = kNeutralFirstOrder;
  OrdersMode orders_mode = OrdersMode::fixed;
  std::optional<SynthConfig> synthetic = SynthConfig{};
  std::optional<std::string> csv_path;
  std::vector<std::uint64_t> seeds{1};
  double test_fraction = 0.2;
  GwrParams episodic = GwrParams::episodic_preset();
  GwrParams semantic = GwrParams::semantic_preset();
  std::size_t trajectory_length = 3;
  std::size_t replay_period = 1;
  ReplayOrder replay_order = ReplayOrder::replay_then_imagination;
  ImaginationConfig imagination;
  BaselineConfig baseline;
  std::string output_dir = "out";

  void validate() const {
    if (variants.empty()) throw ConfigError("at least one variant is required");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (synthetic.has_value() == csv_path.has_value())
      throw ConfigError("exactly one data source (synthetic or CSV) is required");
    if (synthetic) synthetic->validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0,1)");
    if (imagination.generator == GeneratorKind::oracle && !synthetic)
      throw ConfigError("the oracle generator needs synthetic data");
    parse_order(order_string(class_order), '|');  // permutation check
    DualMemoryConfig dm;
    dm.episodic = episodic;
    dm.semantic = semantic;
    dm.trajectory_length = trajectory_length;
    dm.replay_period = replay_period;
    dm.validate();
  }
};

struct RunRecord {
  std::string experiment;
  Variant variant = Variant::gdm;
  std::string subject_id;
  std::size_t order_id = 0;
  ClassOrder order = kNeutralFirstOrder;
  std::uint64_t seed = 0;
  std::size_t episode = 0;  // 1..6
  Expression class_learned = Expression::neutral;
  std::optional<double> episodic_f1;
  std::optional<double> semantic_f1;
  std::optional<double> f1;  // baseline only
  std::size_t episodic_size = 0;
  std::size_t semantic_size = 0;
  std::size_t replayed_trajectories = 0;
  std::size_t imagined_samples = 0;
  double wall_ms = 0.0;

  // The head compared across variants: semantic for the dual memory, f1 for the baseline.
  double headline_f1() const { return f1 ? *f1 : semantic_f1.value_or(0.0); }

  auto sort_key() const {
    return std::make_tuple(experiment, static_cast<int>(variant), order_id, subject_id, seed, episode);
  }
};

inline bool record_less(const RunRecord& a, const RunRecord& b) { return a.sort_key() < b.sort_key(); }

// Which test sequences are scored after episode i.
enum class EvalScope { seen_classes, all_classes };

// Everything one grid cell needs about a subject for one seed.
struct SubjectRun {
  std::string subject_id;
  Split split;
  std::optional<TranslationModel> translation;
  std::optional<ClassMeans> true_means;
};

struct CellOutcome {
  std::vector<RunRecord> records;
  std::optional<DualMemory> memory;  // final state, dual-memory variants only
  std::optional<BaselineModel> baseline;
  std::size_t test_leaks = 0;        // test sequences seen by a learning call
  std::size_t learned_sequences = 0;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a; stable across standard libraries, unlike std::hash.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double score(const std::vector<std::pair<Expression, Expression>>& pairs) {
  ConfusionMatrix cm;
  for (auto [t, p] : pairs) cm.add(t, p);
  return macro_f1(cm);
}

}  // namespace detail

inline DualMemoryConfig dual_memory_config(const ExperimentConfig& cfg, Variant v, std::uint64_t seed) {
  DualMemoryConfig dm;
  dm.episodic = cfg.episodic;
  dm.semantic = cfg.semantic;
  dm.trajectory_length = cfg.trajectory_length;
  dm.replay_period = cfg.replay_period;
  dm.imagined_per_class = cfg.imagination.n_per_class;
  dm.order = cfg.replay_order;
  dm.seed = seed;
  // CLIFER keeps pseudo-rehearsal and adds imagination on top.
  dm.replay_enabled = v == Variant::gdm_replay || v == Variant::clifer;
  dm.imagination_enabled = v == Variant::clifer;
  return dm;
}

// Train one model through the six episodes of `order`, scoring after each.
inline CellOutcome run_cell(const ExperimentConfig& cfg, Variant variant, const SubjectRun& subject,
                            const ClassOrder& order, std::size_t order_id, std::uint64_t seed, EvalScope scope) {
  CellOutcome out;
  const std::uint64_t cell_seed = detail::mix(seed, detail::hash_string(subject.subject_id));
  std::set<std::string> test_ids;
  for (const auto& s : subject.split.test.sequences) test_ids.insert(s.sample_id);

  std::unique_ptr<ImaginationGenerator> generator;
  std::unique_ptr<OracleGenerator> oracle;
  if (variant == Variant::clifer) {
    if (cfg.imagination.generator == GeneratorKind::oracle) {
      if (!subject.true_means) throw ConfigError("oracle imagination needs synthetic ground truth");
      oracle = std::make_unique<OracleGenerator>();
      oracle->add_subject(subject.subject_id, *subject.true_means);
      generator = std::make_unique<BoundOracle>(*oracle, subject.subject_id, cfg.imagination.oracle_sigma);
    } else {
      if (!subject.translation) throw ConfigError("translation imagination needs a fitted model");
      generator = std::make_unique<TranslationModel>(*subject.translation);
    }
  }
  std::unique_ptr<ImaginationGenerator> leaky;
  if (generator && cfg.imagination.order_bias_leak > 0.0 && order[0] != Expression::neutral)
    leaky = std::make_unique<SourceLeakGenerator>(*generator, cfg.imagination.order_bias_leak);

  std::optional<DualMemory> dm;
  std::optional<BaselineModel> mlp;
  if (variant == Variant::baseline)
    mlp.emplace(subject.split.train.dim, cfg.baseline.hidden, cell_seed);
  else
    dm.emplace(dual_memory_config(cfg, variant, cell_seed));

  for (std::size_t ep = 0; ep < kNumClasses; ++ep) {
    const Expression cls = order[ep];
    const auto batch = subject.split.train.of_class(cls);
    for (const auto& s : batch) {
      out.test_leaks += test_ids.count(s.sample_id);
      ++out.learned_sequences;
    }

    RunRecord rec;
    rec.variant = variant;
    rec.subject_id = subject.subject_id;
    rec.order_id = order_id;
    rec.order = order;
    rec.seed = seed;
    rec.episode = ep + 1;
    rec.class_learned = cls;

    const auto t0 = std::chrono::steady_clock::now();
    if (mlp) {
      *mlp = run_baseline_episode(std::move(*mlp), batch, cfg.baseline.epochs, cfg.baseline.lr);
    } else {
      const ImaginationGenerator* g = leaky ? leaky.get() : generator.get();
      const auto report = dm->learn_episode(batch, g);
      rec.episodic_size = report.episodic_size;
      rec.semantic_size = report.semantic_size;
      rec.replayed_trajectories = report.replayed_trajectories;
      rec.imagined_samples = report.imagined_samples;
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::pair<Expression, Expression>> epi, sem, base;
    for (const auto& s : subject.split.test.sequences) {
      if (scope == EvalScope::seen_classes &&
          std::find(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ep + 1), s.label) ==
              order.begin() + static_cast<std::ptrdiff_t>(ep + 1))
        continue;
      if (mlp) {
        base.emplace_back(s.label, mlp->predict(s.frames));
      } else {
        auto [e, m] = dm->classify(s.frames);
        epi.emplace_back(s.label, e);
        sem.emplace_back(s.label, m);
      }
    }
    if (mlp) {
      rec.f1 = detail::score(base);
    } else {
      rec.episodic_f1 = detail::score(epi);
      rec.semantic_f1 = detail::score(sem);
    }
    out.records.push_back(std::move(rec));
  }
  out.memory = std::move(dm);
  out.baseline = std::move(mlp);
  return out;
}

// Subjects (split, translation model, oracle means) for one seed.
inline std::vector<SubjectRun> prepare_subjects(const ExperimentConfig& cfg, std::uint64_t seed,
                                                std::vector<std::string>* skipped = nullptr) {
  std::vector<SubjectDataset> data;
  std::optional<SynthConfig> synth;
  if (cfg.synthetic) {
    synth = *cfg.synthetic;
    synth->seed = detail::mix(cfg.synthetic->seed, seed);  // fresh replicate per seed
    data = generate_synthetic(*synth);
  } else {
    data = load_csv(*cfg.csv_path);
  }

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].covers_all_classes()) {
      usable.push_back(i);
    } else {
      std::cerr << "warning: skipping subject " << data[i].subject_id << " (missing expression classes)\n";
      if (skipped) skipped->push_back(data[i].subject_id);
    }
  }

  std::vector<SubjectRun> out;
  for (std::size_t i : usable) {
    SubjectRun run;
    run.subject_id = data[i].subject_id;
    run.split = split(data[i], cfg.test_fraction, detail::mix(seed, i));
    if (std::find(cfg.variants.begin(), cfg.variants.end(), Variant::clifer) != cfg.variants.end()) {
      if (cfg.imagination.generator == GeneratorKind::translation) {
        // Support corpus: every other subject, never the one under test.
        std::vector<LabeledSequence> support;
        for (std::size_t j = 0; j < data.size(); ++j)
          if (j != i) support.insert(support.end(), data[j].sequences.begin(), data[j].sequences.end());
        run.translation = fit_translation(support, cfg.imagination.jitter_sigma);
      } else if (synth) {
        auto means = subject_class_means(*synth, i);
        ClassMeans cm;
        for (std::size_t c = 0; c < kNumClasses; ++c) cm[c] = std::move(means[c]);
        run.true_means = std::move(cm);
      }
    }
    out.push_back(std::move(run));
  }
  return out;
}

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<std::string> skipped_subjects;
  std::size_t test_leaks = 0;
  std::size_t learned_sequences = 0;
};

inline ExperimentResult run_grid(const ExperimentConfig& cfg, const std::vector<ClassOrder>& orders,
                                 EvalScope scope, std::string_view label) {
  cfg.validate();
  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    std::vector<std::string> skipped;
    const auto subjects = prepare_subjects(cfg, seed, &skipped);
    for (auto& s : skipped)
      if (std::find(result.skipped_subjects.begin(), result.skipped_subjects.end(), s) ==
          result.skipped_subjects.end())
        result.skipped_subjects.push_back(s);
    for (std::size_t o = 0; o < orders.size(); ++o)
      for (Variant v : cfg.variants)
        for (const auto& subject : subjects) {
          auto cell = run_cell(cfg, v, subject, orders[o], o, seed, scope);
          result.test_leaks += cell.test_leaks;
          result.learned_sequences += cell.learned_sequences;
          for (auto& r : cell.records) {
            r.experiment = std::string(label);
            result.records.push_back(std::move(r));
          }
        }
  }
  std::stable_sort(result.records.begin(), result.records.end(), record_less);
  return result;
}

inline ExperimentResult run_experiment1(const ExperimentConfig& cfg) {
  return run_grid(cfg, {cfg.class_order}, EvalScope::seen_classes, "exp1");
}

inline ExperimentResult run_experiment2(const ExperimentConfig& cfg) {
  return run_grid(cfg, {cfg.class_order}, EvalScope::all_classes, "exp2");
}

struct OrderSensitivityResult {
  ExperimentResult experiment;
  std::vector<ClassOrder> orders;
  // Per variant: Kruskal-Wallis over the six orders and the per-order mean
  // final-episode F1 (semantic head, or f1 for the baseline).
  std::map<Variant, KwResult> kruskal_wallis;
  std::map<Variant, std::array<double, kNumClasses>> order_means;
  std::map<Variant, std::string> errors;  // degenerate data and similar
};

// Final-episode F1 per (subject, seed), grouped by order id.
inline std::vector<std::vector<double>> final_f1_groups(const std::vector<RunRecord>& records, Variant v,
                                                        std::size_t n_orders) {
  std::vector<std::vector<double>> groups(n_orders);
  for (const auto& r : records)
    if (r.variant == v && r.episode == kNumClasses) groups.at(r.order_id).push_back(r.headline_f1());
  return groups;
}

inline OrderSensitivityResult run_order_sensitivity(const ExperimentConfig& cfg) {
  if (cfg.orders_mode != OrdersMode::six_starts) throw ConfigError("order sensitivity needs orders_mode = six_starts");
  OrderSensitivityResult out;
  out.orders = six_start_orders(cfg.seeds.front());
  out.experiment = run_grid(cfg, out.orders, EvalScope::all_classes, "orders");
  for (Variant v : cfg.variants) {
    const auto groups = final_f1_groups(out.experiment.records, v, out.orders.size());
    std::array<double, kNumClasses> means{};
    for (std::size_t o = 0; o < groups.size(); ++o) means[o] = mean_of(groups[o]);
    out.order_means[v] = means;
    try {
      out.kruskal_wallis[v] = kruskal_wallis(groups);
    } catch (const DegenerateDataError& e) {
      out.errors[v] = e.what();
    }
  }
  return out;
}

}  // namespace clifer
