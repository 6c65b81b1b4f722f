// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <clifer/clifer.hpp>

using namespace clifer;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Mean over subjects of the final-episode headline F1, per seed.
std::map<std::uint64_t, double> final_by_seed(const std::vector<RunRecord>& recs, Variant v) {
  std::map<std::uint64_t, std::vector<double>> acc;
  for (const auto& r : recs)
    if (r.variant == v && r.episode == kNumClasses) acc[r.seed].push_back(r.headline_f1());
  std::map<std::uint64_t, double> out;
  for (auto& [s, xs] : acc) out[s] = mean_of(xs);
  return out;
}

double class_f1(const ConfusionMatrix& cm, std::size_t i) {
  const double denom = static_cast<double>(cm.row_sum(i) + cm.col_sum(i));
  return denom > 0 ? 2.0 * static_cast<double>(cm.diagonal(i)) / denom : 0.0;
}

Outcome criterion_ordering() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.synthetic->subjects = 12;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto recs = run_experiment2(cfg).records;
  const std::array chain{Variant::clifer, Variant::gdm_replay, Variant::gdm, Variant::baseline};
  std::array<std::map<std::uint64_t, double>, 4> per;
  for (std::size_t i = 0; i < chain.size(); ++i) per[i] = final_by_seed(recs, chain[i]);
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    std::vector<double> gaps;
    double hi = 0.0, lo = 0.0;
    for (auto [seed, v] : per[i]) {
      gaps.push_back(v - per[i + 1].at(seed));
      hi += v;
      lo += per[i + 1].at(seed);
    }
    const auto st = sign_test(gaps);
    const std::string name = std::string(to_string(chain[i])) + ">" + std::string(to_string(chain[i + 1]));
    o.check(hi > lo && st.p_value < 0.05,
            name + " means " + fmt("%.3f", hi / gaps.size()) + "/" + fmt("%.3f", lo / gaps.size()) + " p=" +
                fmt("%.4g", st.p_value));
  }
  return o;
}

Outcome criterion_forgetting() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.synthetic->subjects = 12;
  cfg.variants = {Variant::gdm, Variant::gdm_replay};
  const Expression first = cfg.class_order[0];
  std::vector<double> gaps;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto subjects = prepare_subjects(cfg, seed);
    std::array<double, 2> f1{};
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> per_subject;
      for (const auto& s : subjects) {
        const auto cell = run_cell(cfg, cfg.variants[k], s, cfg.class_order, 0, seed, EvalScope::all_classes);
        ConfusionMatrix cm;
        for (const auto& q : s.split.test.sequences) cm.add(q.label, cell.memory->classify(q.frames).second);
        per_subject.push_back(class_f1(cm, index_of(first)));
      }
      f1[k] = mean_of(per_subject);
    }
    gaps.push_back(f1[1] - f1[0]);
  }
  const auto st = sign_test(gaps);
  o.check(st.positive >= 8, std::to_string(st.positive) + "/10 seeds positive");
  o.check(st.p_value < 0.05, "sign test p=" + fmt("%.4g", st.p_value));
  return o;
}

double episode1_mean(const ExperimentConfig& cfg, Variant v) {
  std::vector<double> xs;
  for (const auto& r : run_experiment2(cfg).records)
    if (r.variant == v && r.episode == 1) xs.push_back(*r.episodic_f1);
  return mean_of(xs);
}

Outcome criterion_imagination() {
  Outcome o;
  ExperimentConfig oracle;
  oracle.synthetic->subjects = 12;
  oracle.synthetic->within_class_sigma = 0.0;
  oracle.variants = {Variant::clifer};
  oracle.imagination.generator = GeneratorKind::oracle;
  oracle.imagination.oracle_sigma = 0.0;
  const double exact = episode1_mean(oracle, Variant::clifer);
  o.check(exact == 1.0, "oracle F1=" + fmt("%.17g", exact));

  ExperimentConfig noisy;
  noisy.synthetic->subjects = 12;
  noisy.variants = {Variant::clifer, Variant::gdm_replay};
  const double clifer_f1 = episode1_mean(noisy, Variant::clifer);
  const double replay_f1 = episode1_mean(noisy, Variant::gdm_replay);
  o.check(clifer_f1 >= 0.80, "translation F1=" + fmt("%.3f", clifer_f1));
  o.check(replay_f1 <= 0.25, "gdm_replay F1=" + fmt("%.3f", replay_f1));
  return o;
}

Outcome criterion_plasticity() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.synthetic->subjects = 1;
  cfg.variants = {Variant::gdm};
  cfg.episodic.insertion_threshold = 0.99;
  const auto subject = prepare_subjects(cfg, 1).at(0);
  const auto cell = run_cell(cfg, Variant::gdm, subject, cfg.class_order, 0, 1, EvalScope::all_classes);
  ConfusionMatrix cm;
  for (const auto& q : subject.split.train.sequences) cm.add(q.label, cell.memory->classify(q.frames).first);
  const double f1 = macro_f1(cm);
  o.check(f1 == 1.0, "training-set episodic F1=" + fmt("%.6f", f1) + " with " +
                         std::to_string(cell.memory->episodic().size()) + " neurons");
  return o;
}

Outcome criterion_stats() {
  Outcome o;
  const std::vector<std::vector<double>> textbook{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  const auto kw = kruskal_wallis(textbook);
  o.check(std::abs(kw.h - 7.2) <= 1e-9 && std::abs(kw.p_value - std::exp(-3.6)) <= 1e-9,
          "KW H=" + fmt("%.12g", kw.h) + " p=" + fmt("%.12g", kw.p_value));

  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = 0.05 * i;
    worst = std::max(worst, std::abs(chi_square_sf(x, 2) - std::exp(-x / 2)));
    worst = std::max(worst, std::abs(chi_square_sf(x, 4) - (1 + x / 2) * std::exp(-x / 2)));
  }
  o.check(worst <= 1e-10, "chi-square closed-form max error " + fmt("%.3g", worst));

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int sims = 4000;
  int rejected = 0;
  for (int s = 0; s < sims; ++s) {
    std::vector<std::vector<double>> g(6, std::vector<double>(10));
    for (auto& grp : g)
      for (auto& v : grp) v = u(rng);
    rejected += kruskal_wallis(g).p_value < 0.05;
  }
  const double rate = static_cast<double>(rejected) / sims;
  o.check(rate >= 0.03 && rate <= 0.07, "null rejection rate " + fmt("%.4f", rate) + " over 4000 sims");
  return o;
}

Outcome criterion_order_sensitivity() {
  Outcome o;
  auto base = [] {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::order_sensitivity;
    cfg.orders_mode = OrdersMode::six_starts;
    cfg.variants = {Variant::clifer};
    return cfg;
  };

  // Positive control: imagined samples collapse onto their sources unless neutral comes first.
  auto pos = base();
  pos.synthetic->subjects = 12;
  pos.seeds = {1, 2, 3};
  pos.imagination.order_bias_leak = 1.0;
  const auto pr = run_order_sensitivity(pos);
  const auto it = pr.kruskal_wallis.find(Variant::clifer);
  const bool pos_ok = it != pr.kruskal_wallis.end() && it->second.p_value < 0.05;
  o.check(pos_ok, "injected effect p=" + (it != pr.kruskal_wallis.end() ? fmt("%.3g", it->second.p_value)
                                                                         : std::string("degenerate")));

  // Null control: nothing order-dependent is injected.
  const int reps = 20;
  int keep = 0;
  for (int r = 0; r < reps; ++r) {
    auto cfg = base();
    cfg.synthetic->subjects = 6;
    cfg.synthetic->seed = 1000 + r;
    cfg.seeds = {static_cast<std::uint64_t>(100 * r + 1), static_cast<std::uint64_t>(100 * r + 2)};
    const auto res = run_order_sensitivity(cfg);
    const auto k = res.kruskal_wallis.find(Variant::clifer);
    // All-identical outcomes carry no evidence of an order effect.
    keep += k == res.kruskal_wallis.end() || k->second.p_value >= 0.05;
  }
  o.check(keep * 10 >= reps * 9, std::to_string(keep) + "/" + std::to_string(reps) + " null reps with p>=0.05");
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion_determinism() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.synthetic->subjects = 3;
  cfg.seeds = {5, 6};
  const auto dir = std::filesystem::temp_directory_path() / "clifer_acceptance";
  std::filesystem::remove_all(dir);
  for (const char* sub : {"a", "b"}) {
    const auto res = run_experiment2(cfg);
    write_report((dir / sub).string(), res.records, nullptr, run_meta_json(cfg, res.skipped_subjects));
  }
  const auto a = slurp(dir / "a" / "records.csv"), b = slurp(dir / "b" / "records.csv");
  o.check(!a.empty() && a == b, "records.csv byte-identical (" + std::to_string(a.size()) + " bytes)");
  std::filesystem::remove_all(dir);

  const auto subject = prepare_subjects(cfg, 5).at(0);
  const auto cell = run_cell(cfg, Variant::clifer, subject, cfg.class_order, 0, 5, EvalScope::all_classes);
  const auto& dm = *cell.memory;
  const auto dm_text = dump(to_json(dm));
  const auto dm_back = dual_memory_from_json(parse_json_text(dm_text));
  const auto net_text = dump(to_json(dm.semantic()));
  const auto net_back = network_from_json(parse_json_text(net_text));
  o.check(dm_back == dm && dump(to_json(dm_back)) == dm_text, "dual memory snapshot bit-exact");
  o.check(net_back == dm.semantic() && dump(to_json(net_back)) == net_text, "network snapshot bit-exact");

  // BMU search vs a linear scan, over 1000 evolving network states.
  GwrParams p;
  p.habituation_threshold = 0.9;
  p.max_edge_age = 20;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  auto rv = [&] {
    Vector v(5);
    for (auto& x : v) x = g(rng);
    return v;
  };
  auto net = GwrNetwork::init_network(p, rv(), rv(), std::pair{Expression::neutral, Expression::happy}, 3);
  std::size_t mismatches = 0;
  for (int state = 0; state < 1000; ++state) {
    net.adapt(rv(), kAllExpressions[state % 6], InsertionGate::plain);
    if (state % 50 == 49) net.reset_context();
    const auto x = rv();
    const auto found = net.find_bmu(x, net.global_context());
    NeuronId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& n : net.neurons()) {
      const double d = net.distance(n.id, x, net.global_context());
      if (d < best_d || (d == best_d && n.id < best)) {
        best_d = d;
        best = n.id;
      }
    }
    mismatches += found.bmu != best || found.distance != best_d;
  }
  o.check(mismatches == 0, "BMU mismatches " + std::to_string(mismatches) + "/1000 (final size " +
                               std::to_string(net.size()) + ")");
  return o;
}

Outcome criterion_gradient() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1), len(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    BaselineModel m(7, 9, 500 + trial);
    std::vector<Vector> frames(len(rng), Vector(7));
    std::vector<Expression> labels;
    for (auto& f : frames) {
      for (auto& v : f) v = g(rng);
      labels.push_back(kAllExpressions[cls(rng)]);
    }
    const auto analytic = m.gradient(frames, labels);
    auto params = m.parameters();
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i], h = 1e-5;
      params[i] = keep + h;
      const double up = m.loss(frames, labels);
      params[i] = keep - h;
      const double down = m.loss(frames, labels);
      params[i] = keep;
      const double num = (up - down) / (2 * h);
      diff += (num - analytic[i]) * (num - analytic[i]);
      norm += analytic[i] * analytic[i];
    }
    worst = std::max(worst, std::sqrt(diff / norm));
  }
  o.check(worst <= 1e-4, "max relative error " + fmt("%.3g", worst) + " over 20 batches");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 variant ordering", criterion_ordering},
      {"2 forgetting mitigation", criterion_forgetting},
      {"3 imagination generalisation", criterion_imagination},
      {"4 per-sample episodic plasticity", criterion_plasticity},
      {"5 statistics", criterion_stats},
      {"6 order-sensitivity harness", criterion_order_sensitivity},
      {"7 determinism and persistence", criterion_determinism},
      {"8 baseline gradient check", criterion_gradient},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
