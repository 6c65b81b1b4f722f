#include <gtest/gtest.h>

#include <set>

#include <clifer/dual_memory.hpp>
#include <clifer/snapshot.hpp>

#include "test_util.hpp"

using namespace clifer;
using testutil::sequence;

namespace {

DualMemoryConfig quiet_config() {
  DualMemoryConfig c;
  c.replay_enabled = false;
  c.imagination_enabled = false;
  return c;
}

std::vector<LabeledSequence> class_batch(Expression c, std::uint64_t seed, std::size_t n = 3) {
  SynthConfig s;
  s.subjects = 1;
  s.sequences_per_class = n;
  s.seed = seed;
  return generate_synthetic(s)[0].of_class(c);
}

std::set<Expression> labels_of(const GwrNetwork& net) {
  auto v = net.label_set();
  return {v.begin(), v.end()};
}

// Generator that emits fixed per-class points.
class FixedGenerator final : public ImaginationGenerator {
 public:
  explicit FixedGenerator(std::size_t dim) : dim_(dim) {}
  std::vector<ImaginedSample> imagine(std::span<const SourcePrototype>, std::span<const Expression> targets,
                                      std::size_t n, std::uint64_t) const override {
    std::vector<ImaginedSample> out;
    for (Expression c : targets)
      for (std::size_t i = 0; i < n; ++i) {
        Vector v(dim_, 0.0);
        v[index_of(c)] = 3.0;
        out.push_back({v, c});
      }
    return out;
  }

 private:
  std::size_t dim_;
};

}  // namespace

TEST(Trajectories, ArgmaxWalk) {
  GwrParams p;
  p.with_context_depth(0);
  std::vector<Neuron> ns;
  EdgeMapBuilder e;
  for (NeuronId id = 0; id < 4; ++id) {
    Neuron n;
    n.id = id;
    n.weight = {static_cast<double>(id), 0.0};
    n.label_counts[index_of(Expression::happy)] = 1;
    ns.push_back(n);
  }
  e.add(0, 1);
  e.add(1, 2);
  e.add(2, 3);
  GwrNetwork::TransitionMap t{{{1, 2}, 5}, {{1, 3}, 2}, {{2, 3}, 4}};
  auto net = GwrNetwork::from_parts(p, 2, ns, e.map, t, std::nullopt, {}, 0, 4);
  const auto trajectories = build_trajectories(net, 3);
  ASSERT_EQ(trajectories.size(), 4u);
  const auto& from1 = trajectories[1];
  ASSERT_EQ(from1.frames.size(), 3u);
  EXPECT_EQ(from1.frames[0], ns[1].weight);
  EXPECT_EQ(from1.frames[1], ns[2].weight);
  EXPECT_EQ(from1.frames[2], ns[3].weight);
  // neuron 3 has no outgoing transitions: padded with itself
  for (const auto& f : trajectories[3].frames) EXPECT_EQ(f, ns[3].weight);
  EXPECT_EQ(from1.label, Expression::happy);
}

TEST(Trajectories, UnlabeledStartsSkipped) {
  auto net = GwrNetwork::init_network(GwrParams{}, Vector{0, 0}, Vector{1, 1});
  EXPECT_TRUE(build_trajectories(net, 3).empty());
}

TEST(DualMemoryConfig, LambdaAtLeastTwo) {
  DualMemoryConfig c;
  c.trajectory_length = 1;
  EXPECT_THROW(DualMemory{c}, ConfigError);
}

TEST(LearnEpisode, SemanticSeesDistinctWinners) {
  DualMemory dm(quiet_config());
  auto batch = class_batch(Expression::happy, 1, 1);
  dm.learn_episode(batch);

  // Recompute the expected winner stream on a copy of the episodic state.
  DualMemory replica(quiet_config());
  replica.initialize(batch[0].frames[0], batch[0].frames[1], Expression::happy);
  auto episodic = replica.episodic();
  std::vector<NeuronId> winners;
  episodic.reset_context();
  for (const auto& f : batch[0].frames) {
    const auto id = episodic.adapt(f, Expression::happy, InsertionGate::plain).bmu_id;
    if (std::find(winners.begin(), winners.end(), id) == winners.end()) winners.push_back(id);
  }
  auto semantic = replica.semantic();
  semantic.reset_context();
  for (auto id : winners) semantic.adapt(episodic.neuron(id).weight, Expression::happy, InsertionGate::misclassify);
  EXPECT_EQ(dump(to_json(dm.episodic())), dump(to_json(episodic)));
  EXPECT_EQ(dump(to_json(dm.semantic())), dump(to_json(semantic)));
}

TEST(LearnEpisode, BatchErrors) {
  DualMemory dm(quiet_config());
  EXPECT_THROW(dm.learn_episode({}), ProtocolError);
  auto mixed = class_batch(Expression::happy, 1, 2);
  mixed[1].label = Expression::fear;
  EXPECT_THROW(dm.learn_episode(mixed), ProtocolError);
}

TEST(LearnEpisode, ReplayCountEqualsLabeledEpisodicNeurons) {
  auto cfg = quiet_config();
  cfg.replay_enabled = true;
  DualMemory dm(cfg);
  const auto r1 = dm.learn_episode(class_batch(Expression::neutral, 2));
  std::size_t labeled_before_replay = 0;
  // Every neuron carries the episode label here, so trajectories = episodic size before replay.
  DualMemory probe(quiet_config());
  probe.learn_episode(class_batch(Expression::neutral, 2));
  for (const auto& n : probe.episodic().neurons()) labeled_before_replay += n.label().has_value();
  EXPECT_EQ(r1.replayed_trajectories, labeled_before_replay);
  EXPECT_EQ(r1.imagined_samples, 0u);
}

TEST(LearnEpisode, ReplayFourNeurons) {
  auto cfg = quiet_config();
  cfg.replay_enabled = true;
  cfg.episodic.with_context_depth(0);
  cfg.semantic.with_context_depth(0);
  std::vector<Neuron> ns;
  EdgeMapBuilder e;
  for (NeuronId id = 0; id < 4; ++id) {
    Neuron n;
    n.id = id;
    n.weight = {static_cast<double>(id) * 10.0, 0.0};
    n.label_counts[index_of(Expression::fear)] = 1;
    ns.push_back(n);
    if (id) e.add(id - 1, id);
  }
  auto episodic = GwrNetwork::from_parts(cfg.episodic, 2, ns, e.map, {}, std::nullopt, {}, 0, 4);
  auto semantic = GwrNetwork::init_network(cfg.semantic, ns[0].weight, ns[1].weight,
                                           std::pair{Expression::fear, Expression::fear});
  auto dm = DualMemory::from_parts(cfg, 0, episodic, semantic);
  // Frames sit exactly on stored prototypes: nothing is inserted.
  const auto r = dm.learn_episode(std::vector{sequence(Expression::fear, {ns[0].weight, ns[2].weight})});
  ASSERT_EQ(r.episodic_size, 4u);
  EXPECT_EQ(r.replayed_trajectories, 4u);
  EXPECT_EQ(build_trajectories(dm.episodic(), 3).size(), 4u);
}

TEST(LearnEpisode, ImaginationCount) {
  auto cfg = quiet_config();
  cfg.imagination_enabled = true;
  cfg.imagined_per_class = 2;
  DualMemory dm(cfg);
  const auto batch = class_batch(Expression::neutral, 3);
  FixedGenerator gen(batch[0].frames[0].size());
  const auto r = dm.learn_episode(batch, &gen);
  EXPECT_EQ(r.imagined_samples, 12u);
}

TEST(Replay, EmptyIsNoOp) {
  DualMemory dm(quiet_config());
  dm.learn_episode(class_batch(Expression::anger, 4));
  const auto before = dump(to_json(dm));
  EXPECT_EQ(dm.replay({}), 0u);
  EXPECT_EQ(dm.integrate_imagined({}), 0u);
  EXPECT_EQ(dump(to_json(dm)), before);
}

TEST(Replay, KnownPrototypeDoesNotGrowSemantic) {
  DualMemory dm(quiet_config());
  dm.initialize(Vector{0, 0}, Vector{1, 0}, Expression::sadness);
  const std::size_t before = dm.semantic().size();
  ReplayTrajectory t{{{0, 0}, {0, 0}, {0, 0}}, Expression::sadness};
  dm.replay(std::span<const ReplayTrajectory>(&t, 1));
  EXPECT_EQ(dm.semantic().size(), before);
}

TEST(Replay, CountsTrajectories) {
  DualMemory dm(quiet_config());
  dm.initialize(Vector{0, 0}, Vector{1, 0}, Expression::sadness);
  std::vector<ReplayTrajectory> t(2, ReplayTrajectory{{{0, 0}, {1, 0}, {1, 0}}, Expression::sadness});
  EXPECT_EQ(dm.replay(t), 2u);
  std::vector<ReplayTrajectory> bad{ReplayTrajectory{{{0, 0, 0}}, Expression::sadness}};
  EXPECT_THROW(dm.replay(bad), InputError);
}

TEST(Integrate, OnePerClassCoversAllLabels) {
  DualMemory dm(quiet_config());
  const auto batch = class_batch(Expression::neutral, 5);
  dm.learn_episode(batch);
  FixedGenerator gen(batch[0].frames[0].size());
  const auto samples = gen.imagine({}, kAllExpressions, 1, 0);
  EXPECT_EQ(dm.integrate_imagined(samples), 6u);
  EXPECT_EQ(labels_of(dm.episodic()).size(), 6u);
}

TEST(Integrate, UnknownLabel) {
  EXPECT_THROW(parse_expression("disgust"), ProtocolError);
  DualMemory dm(quiet_config());
  dm.initialize(Vector{0, 0}, Vector{1, 0}, Expression::sadness);
  std::vector<ImaginedSample> bad{{{0, 0}, static_cast<Expression>(6)}};
  EXPECT_THROW(dm.integrate_imagined(bad), ProtocolError);
}

TEST(Classify, SingleClassAndPurity) {
  DualMemory dm(quiet_config());
  dm.learn_episode(class_batch(Expression::surprise, 6));
  const auto before = dump(to_json(dm));
  const std::vector<Vector> any{Vector(32, 7.0)};
  EXPECT_EQ(dm.classify(any), std::pair(Expression::surprise, Expression::surprise));
  EXPECT_EQ(dump(to_json(dm)), before);
  EXPECT_THROW(dm.classify(std::vector<Vector>{}), InputError);
}

TEST(Classify, PerSampleEpisodicRecall) {
  auto cfg = quiet_config();
  cfg.episodic.insertion_threshold = 0.99;
  cfg.episodic.habituation_threshold = 0.99;
  DualMemory dm(cfg);
  std::vector<LabeledSequence> all;
  for (Expression c : kAllExpressions) {
    auto b = class_batch(c, 7, 2);
    dm.learn_episode(b);
    all.insert(all.end(), b.begin(), b.end());
  }
  // Replay one training sample verbatim, then ask for its label.
  for (const auto& s : all) {
    ImaginedSample verbatim{s.frames.back(), s.label};
    dm.integrate_imagined(std::span<const ImaginedSample>(&verbatim, 1));
    EXPECT_EQ(dm.classify(std::vector<Vector>{s.frames.back()}).first, s.label);
  }
}

TEST(LearnEpisode, LabelsNeverDisappearAndSemanticBounded) {
  DualMemory dm(quiet_config());
  std::set<Expression> seen_e, seen_s;
  std::size_t winners_bound = 2;
  std::size_t last_sem = 0;
  for (Expression c : kAllExpressions) {
    const auto batch = class_batch(c, 9);
    std::size_t frames = 0;
    for (const auto& s : batch) frames += s.frames.size();
    dm.learn_episode(batch);
    winners_bound += frames;  // distinct winners never exceed frames fed
    const auto le = labels_of(dm.episodic()), ls = labels_of(dm.semantic());
    for (auto l : seen_e) EXPECT_TRUE(le.contains(l));
    for (auto l : seen_s) EXPECT_TRUE(ls.contains(l));
    seen_e = le;
    seen_s = ls;
    EXPECT_GE(dm.semantic().size(), last_sem);
    EXPECT_LE(dm.semantic().size(), winners_bound);
    last_sem = dm.semantic().size();
  }
}

TEST(DualMemorySnapshot, RoundTrip) {
  DualMemoryConfig cfg;
  cfg.seed = 42;
  DualMemory dm(cfg);
  const auto batch = class_batch(Expression::fear, 10);
  FixedGenerator gen(batch[0].frames[0].size());
  dm.learn_episode(batch, &gen);
  const auto text = dump(to_json(dm));
  const auto back = dual_memory_from_json(parse_json_text(text));
  EXPECT_TRUE(back == dm);
  EXPECT_EQ(dump(to_json(back)), text);
}
