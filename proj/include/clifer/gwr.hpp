#pragma once

// Recurrent Growing-When-Required network with associative labelling.
//
// Each neuron holds a weight vector, K temporal-context vectors, a
// habituation counter and a label histogram. The network compares an input
// and the current global context against every neuron with
//
//   d_j = alpha_0 |x - w_j|^2 + sum_k alpha_k |C_k - c_{j,k}|^2
//
// and grows a neuron whenever the best match fires weakly (exp(-d_b) < a_T)
// while already being well trained (h_b < h_T).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"
#include "vector_ops.hpp"

namespace clifer {

using NeuronId = std::uint64_t;

struct GwrParams {
  double insertion_threshold = 0.95;   // a_T
  double habituation_threshold = 0.3;  // h_T
  double eps_b = 0.5;
  double eps_n = 0.005;
  double tau_b = 0.3;
  double tau_n = 0.1;
  double kappa = 1.05;
  std::uint32_t max_edge_age = 100;
  std::size_t context_depth = 2;  // K
  double beta = 0.7;
  std::vector<double> alpha = default_alpha(2);  // K + 1 weights
  bool prune_isolated = true;

  // alpha_0 = 0.5 and the rest split evenly; K = 0 puts all mass on the weight term.
  static std::vector<double> default_alpha(std::size_t depth) {
    if (depth == 0) return {1.0};
    std::vector<double> a(depth + 1, 0.5 / static_cast<double>(depth));
    a[0] = 0.5;
    return a;
  }

  static GwrParams episodic_preset() { return GwrParams{}; }

  static GwrParams semantic_preset() {
    GwrParams p;
    p.insertion_threshold = 0.80;
    p.eps_b = 0.1;
    p.eps_n = 0.001;
    return p;
  }

  // Resize alpha to the default split for a new context depth.
  GwrParams& with_context_depth(std::size_t depth) {
    context_depth = depth;
    alpha = default_alpha(depth);
    return *this;
  }

  void validate() const {
    auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
    auto half_open = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!open01(insertion_threshold)) throw ConfigError("insertion_threshold must lie in (0,1)");
    if (!open01(habituation_threshold)) throw ConfigError("habituation_threshold must lie in (0,1)");
    if (!half_open(eps_b)) throw ConfigError("eps_b must lie in (0,1]");
    if (!half_open(eps_n)) throw ConfigError("eps_n must lie in (0,1]");
    if (eps_n > eps_b) throw ConfigError("eps_n must not exceed eps_b");
    if (!half_open(tau_b) || !half_open(tau_n)) throw ConfigError("tau_b and tau_n must lie in (0,1]");
    if (!(kappa > 1.0)) throw ConfigError("kappa must exceed 1");
    if (max_edge_age == 0) throw ConfigError("max_edge_age must be positive");
    if (!open01(beta)) throw ConfigError("beta must lie in (0,1)");
    if (alpha.size() != context_depth + 1)
      throw ConfigError("alpha needs context_depth + 1 entries");
    double sum = 0.0;
    for (double a : alpha) {
      if (!(a >= 0.0)) throw ConfigError("alpha weights must be non-negative");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("alpha weights must sum to 1");
  }

  bool operator==(const GwrParams&) const = default;
};

// h' = clamp(h + tau (kappa (1 - h) - 1), 0, 1). Fixed point at 1 - 1/kappa.
inline double habituate(double h, double tau, double kappa) noexcept {
  return std::clamp(h + tau * (kappa * (1.0 - h) - 1.0), 0.0, 1.0);
}

struct Neuron {
  NeuronId id = 0;
  Vector weight;
  std::vector<Vector> contexts;
  double habituation = 1.0;
  LabelCounts label_counts{};

  std::optional<Expression> label() const noexcept { return argmax_label(label_counts); }

  bool operator==(const Neuron&) const = default;
};

enum class InsertionGate {
  plain,        // grow on weak activation alone
  misclassify,  // additionally require the BMU's label to disagree with the sample
};

struct BmuResult {
  NeuronId bmu = 0;
  NeuronId second = 0;
  double distance = 0.0;
};

struct StepOutcome {
  NeuronId bmu_id = 0;
  NeuronId second_id = 0;
  double distance = 0.0;
  double activation = 0.0;
  bool inserted = false;
  std::optional<NeuronId> new_neuron_id;
  std::optional<Expression> predicted_label;
};

struct Prototype {
  Vector weight;
  std::vector<Vector> contexts;
};

using NeuronPair = std::pair<NeuronId, NeuronId>;

class GwrNetwork {
 public:
  // Edge keys are stored with first < second.
  using EdgeMap = std::map<NeuronPair, std::uint32_t>;
  using TransitionMap = std::map<NeuronPair, std::uint64_t>;

  // Bootstrap a two-neuron network joined by one fresh edge.
  static GwrNetwork init_network(GwrParams params, std::span<const double> first,
                                 std::span<const double> second,
                                 std::optional<std::pair<Expression, Expression>> labels = std::nullopt,
                                 std::uint64_t rng_seed = 0) {
    params.validate();
    if (first.empty()) throw InputError("feature vectors must have dimension >= 1");
    if (first.size() != second.size())
      throw InputError("dimension mismatch: " + std::to_string(first.size()) + " vs " +
                       std::to_string(second.size()));
    GwrNetwork net;
    net.params_ = std::move(params);
    net.dim_ = first.size();
    net.rng_seed_ = rng_seed;
    net.global_context_.assign(net.params_.context_depth, Vector(net.dim_, 0.0));
    net.add_neuron(Vector(first.begin(), first.end()), net.global_context_);
    net.add_neuron(Vector(second.begin(), second.end()), net.global_context_);
    if (labels) {
      net.neurons_[0].label_counts[index_of(labels->first)] = 1;
      net.neurons_[1].label_counts[index_of(labels->second)] = 1;
    }
    net.edges_[{0, 1}] = 0;
    return net;
  }

  // Rebuild from serialized parts; checks structural consistency.
  static GwrNetwork from_parts(GwrParams params, std::size_t dim, std::vector<Neuron> neurons,
                               EdgeMap edges, TransitionMap transitions,
                               std::optional<NeuronId> prev_bmu, std::vector<Vector> global_context,
                               std::uint64_t rng_seed, NeuronId next_id) {
    params.validate();
    GwrNetwork net;
    net.params_ = std::move(params);
    net.dim_ = dim;
    std::sort(neurons.begin(), neurons.end(),
              [](const Neuron& a, const Neuron& b) { return a.id < b.id; });
    net.neurons_ = std::move(neurons);
    net.edges_ = std::move(edges);
    net.temporal_counts_ = std::move(transitions);
    net.prev_bmu_ = prev_bmu;
    net.global_context_ = std::move(global_context);
    net.rng_seed_ = rng_seed;
    net.next_id_ = next_id;
    net.check_structure();
    return net;
  }

  const GwrParams& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return neurons_.size(); }
  const std::vector<Neuron>& neurons() const noexcept { return neurons_; }
  const EdgeMap& edges() const noexcept { return edges_; }
  const TransitionMap& temporal_counts() const noexcept { return temporal_counts_; }
  std::optional<NeuronId> prev_bmu() const noexcept { return prev_bmu_; }
  const std::vector<Vector>& global_context() const noexcept { return global_context_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  NeuronId next_id() const noexcept { return next_id_; }

  bool contains(NeuronId id) const noexcept { return find_index(id).has_value(); }

  const Neuron& neuron(NeuronId id) const { return neurons_[index_or_throw(id)]; }

  // Test hook: lets callers pre-habituate a neuron to set up growth scenarios.
  void set_habituation(NeuronId id, double h) {
    if (!(h >= 0.0 && h <= 1.0)) throw InputError("habituation must lie in [0,1]");
    neurons_[index_or_throw(id)].habituation = h;
  }

  bool has_edge(NeuronId a, NeuronId b) const { return edges_.contains(edge_key(a, b)); }

  std::vector<NeuronId> neighbours(NeuronId id) const {
    std::vector<NeuronId> out;
    for (const auto& [key, age] : edges_) {
      if (key.first == id) out.push_back(key.second);
      else if (key.second == id) out.push_back(key.first);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Zero the global context and forget the previous BMU. Called at sequence boundaries.
  void reset_context() {
    for (auto& c : global_context_) std::fill(c.begin(), c.end(), 0.0);
    prev_bmu_.reset();
  }

  double distance(NeuronId id, std::span<const double> input, std::span<const Vector> context) const {
    check_input(input);
    check_context(context);
    return distance_at(neurons_[index_or_throw(id)], input, context);
  }

  BmuResult find_bmu(std::span<const double> input, std::span<const Vector> context) const {
    check_input(input);
    check_context(context);
    return find_bmu_unchecked(input, context);
  }

  StepOutcome adapt(std::span<const double> input, std::optional<Expression> label, InsertionGate gate) {
    check_input(input);
    const auto found = find_bmu_unchecked(input, global_context_);
    const NeuronId b = found.bmu;
    const NeuronId s = found.second;

    StepOutcome out;
    out.bmu_id = b;
    out.second_id = s;
    out.distance = found.distance;
    out.activation = std::exp(-found.distance);

    // Pre-step copies drive the insertion midpoint and the context recursion.
    const Neuron bmu_before = neurons_[index_of_live(b)];
    out.predicted_label = bmu_before.label();

    edges_[edge_key(b, s)] = 0;

    const bool weak = out.activation < params_.insertion_threshold &&
                      bmu_before.habituation < params_.habituation_threshold;
    const bool gate_open = gate == InsertionGate::plain || !label || out.predicted_label != label;

    if (weak && gate_open) {
      std::vector<Vector> ctx(params_.context_depth);
      for (std::size_t k = 0; k < params_.context_depth; ++k)
        ctx[k] = midpoint(bmu_before.contexts[k], global_context_[k]);
      const NeuronId r = add_neuron(midpoint(bmu_before.weight, input), std::move(ctx));
      if (label) neurons_.back().label_counts[index_of(*label)] = 1;
      edges_.erase(edge_key(b, s));
      edges_[edge_key(r, b)] = 0;
      edges_[edge_key(r, s)] = 0;
      out.inserted = true;
      out.new_neuron_id = r;
    } else {
      Neuron& nb = neurons_[index_of_live(b)];
      const double rate = params_.eps_b * nb.habituation;
      move_towards(nb.weight, input, rate);
      for (std::size_t k = 0; k < params_.context_depth; ++k)
        move_towards(nb.contexts[k], global_context_[k], rate);
      for (NeuronId n : neighbours(b)) {
        Neuron& nn = neurons_[index_of_live(n)];
        move_towards(nn.weight, input, params_.eps_n * nn.habituation);
      }
      if (label) ++nb.label_counts[index_of(*label)];
    }

    {
      Neuron& nb = neurons_[index_of_live(b)];
      nb.habituation = habituate(nb.habituation, params_.tau_b, params_.kappa);
      for (NeuronId n : neighbours(b)) {
        Neuron& nn = neurons_[index_of_live(n)];
        nn.habituation = habituate(nn.habituation, params_.tau_n, params_.kappa);
      }
    }

    age_edges_of(b);
    if (params_.prune_isolated) prune_isolated();

    if (prev_bmu_ && contains(*prev_bmu_)) ++temporal_counts_[{*prev_bmu_, b}];
    prev_bmu_ = b;

    advance_context(global_context_, bmu_before);
    return out;
  }

  // Side-effect-free classification of a sequence: fresh zero context, BMU
  // chain over the frames, argmax label of the final BMU. An unlabeled final
  // BMU defers to the nearest labeled neuron.
  Expression predict(std::span<const Vector> sequence) const {
    if (sequence.empty()) throw InputError("cannot classify an empty sequence");
    std::vector<Vector> ctx(params_.context_depth, Vector(dim_, 0.0));
    BmuResult last;
    std::vector<Vector> last_ctx;
    for (const Vector& frame : sequence) {
      check_input(frame);
      last = find_bmu_unchecked(frame, ctx);
      last_ctx = ctx;
      advance_context(ctx, neurons_[index_of_live(last.bmu)]);
    }
    if (auto l = neurons_[index_of_live(last.bmu)].label()) return *l;

    const Vector& frame = sequence.back();
    std::optional<Expression> best_label;
    double best = std::numeric_limits<double>::infinity();
    for (const Neuron& n : neurons_) {
      auto l = n.label();
      if (!l) continue;
      const double d = distance_at(n, frame, last_ctx);
      if (d < best) {
        best = d;
        best_label = l;
      }
    }
    if (!best_label) throw StateError("unlabeled network: no neuron carries a label");
    return *best_label;
  }

  std::vector<Prototype> prototypes_of(Expression cls) const {
    std::vector<Prototype> out;
    for (const Neuron& n : neurons_)
      if (n.label() == cls) out.push_back({n.weight, n.contexts});
    return out;
  }

  // Classes with a non-zero count on at least one neuron.
  std::vector<Expression> label_set() const {
    std::array<bool, kNumClasses> seen{};
    for (const Neuron& n : neurons_)
      for (std::size_t i = 0; i < kNumClasses; ++i) seen[i] = seen[i] || n.label_counts[i] > 0;
    std::vector<Expression> out;
    for (std::size_t i = 0; i < kNumClasses; ++i)
      if (seen[i]) out.push_back(kAllExpressions[i]);
    return out;
  }

  bool operator==(const GwrNetwork&) const = default;

  static NeuronPair edge_key(NeuronId a, NeuronId b) noexcept {
    return a < b ? NeuronPair{a, b} : NeuronPair{b, a};
  }

 private:
  GwrNetwork() = default;

  NeuronId add_neuron(Vector weight, std::vector<Vector> contexts) {
    Neuron n;
    n.id = next_id_++;
    n.weight = std::move(weight);
    n.contexts = std::move(contexts);
    neurons_.push_back(std::move(n));
    return neurons_.back().id;
  }

  std::optional<std::size_t> find_index(NeuronId id) const noexcept {
    auto it = std::lower_bound(neurons_.begin(), neurons_.end(), id,
                               [](const Neuron& n, NeuronId v) { return n.id < v; });
    if (it == neurons_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - neurons_.begin());
  }

  std::size_t index_or_throw(NeuronId id) const {
    if (auto i = find_index(id)) return *i;
    throw LookupError("unknown neuron id " + std::to_string(id));
  }

  std::size_t index_of_live(NeuronId id) const { return *find_index(id); }

  void check_input(std::span<const double> input) const {
    if (input.size() != dim_)
      throw InputError("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                       std::to_string(input.size()));
  }

  void check_context(std::span<const Vector> context) const {
    if (context.size() != params_.context_depth)
      throw InputError("context depth mismatch");
    for (const auto& c : context) check_input(c);
  }

  double distance_at(const Neuron& n, std::span<const double> input,
                     std::span<const Vector> context) const noexcept {
    double d = params_.alpha[0] * squared_distance(input, n.weight);
    for (std::size_t k = 0; k < params_.context_depth; ++k)
      d += params_.alpha[k + 1] * squared_distance(context[k], n.contexts[k]);
    return d;
  }

  BmuResult find_bmu_unchecked(std::span<const double> input, std::span<const Vector> context) const {
    if (neurons_.size() < 2) throw StateError("BMU search needs at least 2 neurons");
    // Strict comparisons over ascending ids give the lowest-id tie-break.
    constexpr double inf = std::numeric_limits<double>::infinity();
    double d1 = inf, d2 = inf;
    std::size_t i1 = 0, i2 = 0;
    for (std::size_t i = 0; i < neurons_.size(); ++i) {
      const double d = distance_at(neurons_[i], input, context);
      if (d < d1) {
        d2 = d1;
        i2 = i1;
        d1 = d;
        i1 = i;
      } else if (d < d2) {
        d2 = d;
        i2 = i;
      }
    }
    if (i1 == i2) i2 = i1 == 0 ? 1 : 0;  // only reachable with non-finite distances
    return {neurons_[i1].id, neurons_[i2].id, d1};
  }

  // C_1 <- beta w_b + (1-beta) c_{b,1};  C_k <- beta c_{b,k-1} + (1-beta) c_{b,k}
  void advance_context(std::vector<Vector>& ctx, const Neuron& b) const {
    const std::size_t depth = params_.context_depth;
    for (std::size_t k = 0; k < depth; ++k) {
      const Vector& prev = k == 0 ? b.weight : b.contexts[k - 1];
      ctx[k] = blend(prev, b.contexts[k], params_.beta);
    }
  }

  void age_edges_of(NeuronId b) {
    for (auto it = edges_.begin(); it != edges_.end();) {
      if (it->first.first == b || it->first.second == b) {
        if (++it->second > params_.max_edge_age) {
          it = edges_.erase(it);
          continue;
        }
      }
      ++it;
    }
  }

  void prune_isolated() {
    if (neurons_.size() <= 2) return;
    std::vector<bool> connected(neurons_.size(), false);
    for (const auto& [key, age] : edges_) {
      connected[index_of_live(key.first)] = true;
      connected[index_of_live(key.second)] = true;
    }
    std::vector<NeuronId> doomed;
    std::size_t remaining = neurons_.size();
    for (std::size_t i = 0; i < neurons_.size() && remaining > 2; ++i) {
      if (!connected[i]) {
        doomed.push_back(neurons_[i].id);
        --remaining;
      }
    }
    if (doomed.empty()) return;
    for (NeuronId id : doomed) {
      neurons_.erase(neurons_.begin() + static_cast<std::ptrdiff_t>(index_of_live(id)));
      if (prev_bmu_ == id) prev_bmu_.reset();
    }
    std::erase_if(temporal_counts_, [this](const auto& kv) {
      return !contains(kv.first.first) || !contains(kv.first.second);
    });
  }

  void check_structure() const {
    if (dim_ == 0) throw DataError("network dimension must be positive");
    if (neurons_.size() < 2) throw DataError("network needs at least 2 neurons");
    if (global_context_.size() != params_.context_depth) throw DataError("global context depth mismatch");
    for (const auto& c : global_context_)
      if (c.size() != dim_) throw DataError("global context dimension mismatch");
    for (std::size_t i = 0; i < neurons_.size(); ++i) {
      const Neuron& n = neurons_[i];
      if (i > 0 && neurons_[i - 1].id == n.id) throw DataError("duplicate neuron id");
      if (n.id >= next_id_) throw DataError("neuron id beyond next_id");
      if (n.weight.size() != dim_ || n.contexts.size() != params_.context_depth)
        throw DataError("neuron " + std::to_string(n.id) + " has wrong shape");
      for (const auto& c : n.contexts)
        if (c.size() != dim_) throw DataError("neuron context dimension mismatch");
      if (!(n.habituation >= 0.0 && n.habituation <= 1.0)) throw DataError("habituation out of [0,1]");
    }
    for (const auto& [key, age] : edges_) {
      if (key.first >= key.second) throw DataError("edge keys must be ordered and loop-free");
      if (!contains(key.first) || !contains(key.second)) throw DataError("edge references missing neuron");
    }
    for (const auto& [key, n] : temporal_counts_)
      if (!contains(key.first) || !contains(key.second))
        throw DataError("temporal count references missing neuron");
    if (prev_bmu_ && !contains(*prev_bmu_)) throw DataError("prev_bmu references missing neuron");
  }

  GwrParams params_;
  std::size_t dim_ = 0;
  std::vector<Neuron> neurons_;  // sorted by id
  EdgeMap edges_;
  TransitionMap temporal_counts_;
  std::optional<NeuronId> prev_bmu_;
  std::vector<Vector> global_context_;
  std::uint64_t rng_seed_ = 0;
  NeuronId next_id_ = 0;
};

}  // namespace clifer
