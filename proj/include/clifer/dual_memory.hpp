#pragma once

// Growing Dual Memory: a fast episodic GWR feeding a slow semantic GWR,
// with trajectory replay and optional imagination after every episode.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "datasets.hpp"
#include "errors.hpp"
#include "gwr.hpp"
#include "imagination.hpp"
#include "snapshot.hpp"

namespace clifer {

enum class ReplayOrder { replay_then_imagination, imagination_then_replay };

struct DualMemoryConfig {
  GwrParams episodic = GwrParams::episodic_preset();
  GwrParams semantic = GwrParams::semantic_preset();
  bool replay_enabled = false;
  bool imagination_enabled = false;
  std::size_t trajectory_length = 3;  // lambda
  std::size_t replay_period = 1;      // episodes between replays
  std::size_t imagined_per_class = 5;
  ReplayOrder order = ReplayOrder::replay_then_imagination;
  std::uint64_t seed = 0;

  void validate() const {
    episodic.validate();
    semantic.validate();
    if (trajectory_length < 2) throw ConfigError("trajectory_length must be >= 2");
    if (replay_period == 0) throw ConfigError("replay_period must be positive");
  }

  bool operator==(const DualMemoryConfig&) const = default;
};

struct ReplayTrajectory {
  std::vector<Vector> frames;
  Expression label = Expression::neutral;

  bool operator==(const ReplayTrajectory&) const = default;
};

struct EpisodeReport {
  Expression class_learned = Expression::neutral;
  std::size_t episodic_size = 0;
  std::size_t semantic_size = 0;
  std::size_t episodic_insertions = 0;
  std::size_t semantic_insertions = 0;
  std::size_t replayed_trajectories = 0;
  std::size_t imagined_samples = 0;
};

// One trajectory per labeled neuron: follow the strongest outgoing temporal
// transition (ties to the smaller id), padding with the current frame when
// the walk dead-ends.
inline std::vector<ReplayTrajectory> build_trajectories(const GwrNetwork& episodic, std::size_t length) {
  if (episodic.size() < 2) throw StateError("trajectories need at least 2 neurons");
  const auto& counts = episodic.temporal_counts();
  std::vector<ReplayTrajectory> out;
  for (const Neuron& start : episodic.neurons()) {
    auto label = start.label();
    if (!label) continue;
    ReplayTrajectory t;
    t.label = *label;
    NeuronId current = start.id;
    t.frames.push_back(start.weight);
    while (t.frames.size() < length) {
      std::optional<NeuronId> next;
      std::uint64_t best = 0;
      for (auto it = counts.lower_bound({current, 0}); it != counts.end() && it->first.first == current; ++it)
        if (it->second > best) {
          best = it->second;
          next = it->first.second;
        }
      if (!next) break;
      current = *next;
      t.frames.push_back(episodic.neuron(current).weight);
    }
    while (t.frames.size() < length) t.frames.push_back(t.frames.back());
    out.push_back(std::move(t));
  }
  return out;
}

class DualMemory {
 public:
  explicit DualMemory(DualMemoryConfig config = {}) : config_(std::move(config)) { config_.validate(); }

  const DualMemoryConfig& config() const noexcept { return config_; }
  bool initialized() const noexcept { return episodic_.has_value(); }
  std::size_t episodes_learned() const noexcept { return episodes_; }

  const GwrNetwork& episodic() const {
    require_initialized();
    return *episodic_;
  }
  const GwrNetwork& semantic() const {
    require_initialized();
    return *semantic_;
  }

  // Both memories start from the same two labeled frames.
  void initialize(std::span<const double> first, std::span<const double> second, Expression label) {
    const std::pair<Expression, Expression> labels{label, label};
    episodic_ = GwrNetwork::init_network(config_.episodic, first, second, labels, config_.seed);
    semantic_ = GwrNetwork::init_network(config_.semantic, first, second, labels, config_.seed + 1);
  }

  // Learn one single-class mini-batch. Uninitialized memories bootstrap from
  // the batch's first two frames.
  EpisodeReport learn_episode(std::span<const LabeledSequence> batch,
                              const ImaginationGenerator* generator = nullptr) {
    if (batch.empty()) throw ProtocolError("episode batch is empty");
    const Expression cls = batch.front().label;
    for (const auto& seq : batch) {
      if (seq.label != cls) throw ProtocolError("episode batch mixes classes");
      if (seq.frames.empty()) throw InputError("sequence '" + seq.sample_id + "' has no frames");
    }
    if (!initialized()) bootstrap(batch, cls);

    ++episodes_;
    EpisodeReport report;
    report.class_learned = cls;

    std::vector<NeuronId> winners;
    std::unordered_set<NeuronId> seen;
    for (const auto& seq : batch) {
      episodic_->reset_context();
      for (const auto& frame : seq.frames) {
        auto step = episodic_->adapt(frame, cls, InsertionGate::plain);
        report.episodic_insertions += step.inserted;
        if (seen.insert(step.bmu_id).second) winners.push_back(step.bmu_id);
      }
    }
    report.semantic_insertions += feed_semantic(winners, cls);

    auto run_replay = [&] {
      if (!config_.replay_enabled || episodes_ % config_.replay_period != 0) return;
      const auto trajectories = build_trajectories(*episodic_, config_.trajectory_length);
      report.replayed_trajectories += replay(trajectories, &report);
    };
    auto run_imagination = [&] {
      if (!config_.imagination_enabled || generator == nullptr) return;
      std::vector<SourcePrototype> prototypes;
      for (auto& p : episodic_->prototypes_of(cls)) prototypes.push_back({std::move(p.weight), cls});
      if (prototypes.empty()) return;
      const auto samples =
          generator->imagine(prototypes, kAllExpressions, config_.imagined_per_class, imagination_seed());
      report.imagined_samples += integrate_imagined(samples, &report);
    };
    if (config_.order == ReplayOrder::replay_then_imagination) {
      run_replay();
      run_imagination();
    } else {
      run_imagination();
      run_replay();
    }

    report.episodic_size = episodic_->size();
    report.semantic_size = semantic_->size();
    return report;
  }

  // Stream each trajectory through the episodic memory, then its distinct
  // winners through the semantic memory. Returns the number replayed.
  std::size_t replay(std::span<const ReplayTrajectory> trajectories, EpisodeReport* report = nullptr) {
    if (trajectories.empty()) return 0;
    require_initialized();
    for (const auto& t : trajectories)
      for (const auto& f : t.frames)
        if (f.size() != episodic_->dim()) throw InputError("trajectory dimension mismatch");
    for (const auto& t : trajectories) learn_sequence(t.frames, t.label, report);
    return trajectories.size();
  }

  // Each imagined sample is a one-frame sequence with a fresh context.
  std::size_t integrate_imagined(std::span<const ImaginedSample> samples, EpisodeReport* report = nullptr) {
    if (samples.empty()) return 0;
    require_initialized();
    for (const auto& s : samples) {
      if (index_of(s.label) >= kNumClasses) throw ProtocolError("imagined sample has an unknown class");
      if (s.features.size() != episodic_->dim()) throw InputError("imagined sample dimension mismatch");
    }
    for (const auto& s : samples) learn_sequence(std::span<const Vector>(&s.features, 1), s.label, report);
    return samples.size();
  }

  // Labels from both heads; does not touch either network.
  std::pair<Expression, Expression> classify(std::span<const Vector> sequence) const {
    if (sequence.empty()) throw InputError("cannot classify an empty sequence");
    require_initialized();
    return {episodic_->predict(sequence), semantic_->predict(sequence)};
  }

  static DualMemory from_parts(DualMemoryConfig config, std::size_t episodes, std::optional<GwrNetwork> episodic,
                               std::optional<GwrNetwork> semantic) {
    DualMemory dm(std::move(config));
    if (episodic.has_value() != semantic.has_value()) throw DataError("dual memory needs both networks or neither");
    if (episodic && episodic->dim() != semantic->dim()) throw DataError("episodic and semantic dims differ");
    dm.episodes_ = episodes;
    dm.episodic_ = std::move(episodic);
    dm.semantic_ = std::move(semantic);
    return dm;
  }

  bool operator==(const DualMemory&) const = default;

 private:
  void require_initialized() const {
    if (!initialized()) throw StateError("dual memory is not initialized");
  }

  void bootstrap(std::span<const LabeledSequence> batch, Expression cls) {
    std::vector<const Vector*> frames;
    for (const auto& seq : batch)
      for (const auto& f : seq.frames) {
        frames.push_back(&f);
        if (frames.size() == 2) break;
      }
    if (frames.size() < 2) throw ProtocolError("first episode needs at least 2 frames to bootstrap");
    initialize(*frames[0], *frames[1], cls);
  }

  std::uint64_t imagination_seed() const noexcept {
    return config_.seed * 0x9E3779B97F4A7C15ULL + episodes_;
  }

  std::size_t feed_semantic(std::span<const NeuronId> winners, Expression cls) {
    std::size_t inserted = 0;
    semantic_->reset_context();
    for (NeuronId id : winners) {
      if (!episodic_->contains(id)) continue;  // pruned later in the same pass
      inserted += semantic_->adapt(episodic_->neuron(id).weight, cls, InsertionGate::misclassify).inserted;
    }
    return inserted;
  }

  void learn_sequence(std::span<const Vector> frames, Expression label, EpisodeReport* report) {
    std::vector<NeuronId> winners;
    std::unordered_set<NeuronId> seen;
    std::size_t inserted = 0;
    episodic_->reset_context();
    for (const auto& f : frames) {
      auto step = episodic_->adapt(f, label, InsertionGate::plain);
      inserted += step.inserted;
      if (seen.insert(step.bmu_id).second) winners.push_back(step.bmu_id);
    }
    const std::size_t sem = feed_semantic(winners, label);
    if (report) {
      report->episodic_insertions += inserted;
      report->semantic_insertions += sem;
    }
  }

  DualMemoryConfig config_;
  std::size_t episodes_ = 0;
  std::optional<GwrNetwork> episodic_;
  std::optional<GwrNetwork> semantic_;
};

inline json to_json(const DualMemory& dm) {
  const auto& c = dm.config();
  json j;
  j["version"] = kSnapshotVersion;
  j["kind"] = "dual_memory";
  json cfg;
  cfg["episodic_params"] = params_to_json(c.episodic);
  cfg["semantic_params"] = params_to_json(c.semantic);
  cfg["replay_enabled"] = c.replay_enabled;
  cfg["imagination_enabled"] = c.imagination_enabled;
  cfg["trajectory_length"] = c.trajectory_length;
  cfg["replay_period"] = c.replay_period;
  cfg["imagined_per_class"] = c.imagined_per_class;
  cfg["order"] = c.order == ReplayOrder::replay_then_imagination ? "replay_then_imagination"
                                                                   : "imagination_then_replay";
  cfg["seed"] = c.seed;
  j["config"] = std::move(cfg);
  j["episodes_learned"] = dm.episodes_learned();
  j["episodic"] = dm.initialized() ? to_json(dm.episodic()) : json(nullptr);
  j["semantic"] = dm.initialized() ? to_json(dm.semantic()) : json(nullptr);
  return j;
}

inline DualMemory dual_memory_from_json(const json& j) {
  return detail::guarded([&] {
    if (j.at("version").get<int>() != kSnapshotVersion) throw DataError("unsupported snapshot version");
    if (j.at("kind").get<std::string>() != "dual_memory") throw DataError("snapshot is not a dual_memory envelope");
    const auto& cfg = j.at("config");
    DualMemoryConfig c;
    c.episodic = params_from_json(cfg.at("episodic_params"));
    c.semantic = params_from_json(cfg.at("semantic_params"));
    c.replay_enabled = cfg.at("replay_enabled").get<bool>();
    c.imagination_enabled = cfg.at("imagination_enabled").get<bool>();
    c.trajectory_length = cfg.at("trajectory_length").get<std::size_t>();
    c.replay_period = cfg.at("replay_period").get<std::size_t>();
    c.imagined_per_class = cfg.at("imagined_per_class").get<std::size_t>();
    const auto order = cfg.at("order").get<std::string>();
    if (order == "replay_then_imagination") c.order = ReplayOrder::replay_then_imagination;
    else if (order == "imagination_then_replay") c.order = ReplayOrder::imagination_then_replay;
    else throw DataError("unknown replay order '" + order + "'");
    c.seed = cfg.at("seed").get<std::uint64_t>();
    std::optional<GwrNetwork> e, s;
    if (!j.at("episodic").is_null()) e = network_from_json(j.at("episodic"));
    if (!j.at("semantic").is_null()) s = network_from_json(j.at("semantic"));
    return DualMemory::from_parts(std::move(c), j.at("episodes_learned").get<std::size_t>(), std::move(e),
                                  std::move(s));
  });
}

}  // namespace clifer
