#pragma once

// Imagination: turn a subject's prototypes of seen classes into samples of
// every class while keeping the subject-specific residual.

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "datasets.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "rng.hpp"
#include "snapshot.hpp"
#include "vector_ops.hpp"

namespace clifer {

struct SourcePrototype {
  Vector features;
  Expression source = Expression::neutral;
};

struct ImaginedSample {
  Vector features;
  Expression label = Expression::neutral;

  bool operator==(const ImaginedSample&) const = default;
};

// Contract: output labels are drawn from `targets`, exactly n_per_class per
// target, dimension preserved, deterministic in `seed`.
class ImaginationGenerator {
 public:
  virtual ~ImaginationGenerator() = default;
  virtual std::vector<ImaginedSample> imagine(std::span<const SourcePrototype> prototypes,
                                              std::span<const Expression> targets, std::size_t n_per_class,
                                              std::uint64_t seed) const = 0;
};

using ClassMeans = std::array<Vector, kNumClasses>;

// Feature-space translation: p - mean[src] + mean[target] + jitter.
class TranslationModel final : public ImaginationGenerator {
 public:
  TranslationModel(ClassMeans means, double jitter_sigma) : means_(std::move(means)), jitter_(jitter_sigma) {
    if (!(jitter_ >= 0.0)) throw ConfigError("jitter_sigma must be non-negative");
    dim_ = means_[0].size();
    for (std::size_t i = 0; i < kNumClasses; ++i)
      if (means_[i].empty() || means_[i].size() != dim_)
        throw ConfigError("class mean for " + std::string(kExpressionNames[i]) + " missing or mis-sized");
  }

  const ClassMeans& class_means() const noexcept { return means_; }
  double jitter_sigma() const noexcept { return jitter_; }
  std::size_t dim() const noexcept { return dim_; }

  std::vector<ImaginedSample> imagine(std::span<const SourcePrototype> prototypes,
                                      std::span<const Expression> targets, std::size_t n_per_class,
                                      std::uint64_t seed) const override {
    if (prototypes.empty()) throw InputError("imagination needs at least one prototype");
    for (const auto& p : prototypes)
      if (p.features.size() != dim_) throw InputError("prototype dimension mismatch");
    std::vector<ImaginedSample> out;
    out.reserve(targets.size() * n_per_class);
    for (Expression c : targets) {
      for (std::size_t i = 0; i < n_per_class; ++i) {
        const SourcePrototype& p = prototypes[i % prototypes.size()];  // round-robin
        const Vector& from = means_[index_of(p.source)];
        const Vector& to = means_[index_of(c)];
        ImaginedSample s{Vector(dim_), c};
        for (std::size_t k = 0; k < dim_; ++k) s.features[k] = p.features[k] + (to[k] - from[k]);
        Rng rng = make_rng(seed, {index_of(c), i});
        add_gaussian(s.features, jitter_, rng);
        out.push_back(std::move(s));
      }
    }
    return out;
  }

 private:
  ClassMeans means_;
  double jitter_;
  std::size_t dim_ = 0;
};

inline TranslationModel fit_translation(std::span<const LabeledSequence> support, double jitter_sigma) {
  std::array<std::size_t, kNumClasses> n{};
  ClassMeans sums;
  for (const auto& seq : support) {
    auto& sum = sums[index_of(seq.label)];
    for (const auto& f : seq.frames) {
      if (sum.empty()) sum.assign(f.size(), 0.0);
      if (f.size() != sum.size()) throw InputError("support frames disagree on dimension");
      for (std::size_t k = 0; k < f.size(); ++k) sum[k] += f[k];
      ++n[index_of(seq.label)];
    }
  }
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (n[i] == 0) throw FitError("support corpus has no frames for class " + std::string(kExpressionNames[i]));
    for (auto& v : sums[i]) v /= static_cast<double>(n[i]);
  }
  return TranslationModel(std::move(sums), jitter_sigma);
}

inline json to_json(const TranslationModel& m) {
  json j;
  j["version"] = kSnapshotVersion;
  j["kind"] = "translation_model";
  json means = json::object();
  for (std::size_t i = 0; i < kNumClasses; ++i)
    means[std::string(kExpressionNames[i])] = detail::hex_array(m.class_means()[i]);
  j["class_means"] = std::move(means);
  j["jitter_sigma"] = to_hexfloat(m.jitter_sigma());
  return j;
}

inline TranslationModel translation_from_json(const json& j) {
  return detail::guarded([&] {
    ClassMeans means;
    for (const auto& [name, v] : j.at("class_means").items()) {
      auto e = try_parse_expression(name);
      if (!e) throw LabelError("unknown class '" + name + "' in translation model");
      means[index_of(*e)] = detail::read_hex_array(v);
    }
    return TranslationModel(std::move(means), from_hexfloat(j.at("jitter_sigma").get<std::string>()));
  });
}

// Upper-bound generator for tests: samples around each subject's true class means.
class OracleGenerator {
 public:
  void add_subject(std::string subject_id, ClassMeans means) { subjects_[std::move(subject_id)] = std::move(means); }

  bool knows(const std::string& subject_id) const { return subjects_.contains(subject_id); }

  std::vector<ImaginedSample> oracle_imagine(const std::string& subject_id, std::span<const Expression> targets,
                                             std::size_t n_per_class, double sigma, std::uint64_t seed) const {
    auto it = subjects_.find(subject_id);
    if (it == subjects_.end()) throw LookupError("oracle has no subject '" + subject_id + "'");
    std::vector<ImaginedSample> out;
    for (Expression c : targets)
      for (std::size_t i = 0; i < n_per_class; ++i) {
        ImaginedSample s{it->second[index_of(c)], c};
        Rng rng = make_rng(seed, {index_of(c), i});
        add_gaussian(s.features, sigma, rng);
        out.push_back(std::move(s));
      }
    return out;
  }

 private:
  std::map<std::string, ClassMeans> subjects_;
};

// Adapts the oracle to the generator interface for one subject; prototypes are ignored.
class BoundOracle final : public ImaginationGenerator {
 public:
  BoundOracle(const OracleGenerator& oracle, std::string subject_id, double sigma)
      : oracle_(&oracle), subject_(std::move(subject_id)), sigma_(sigma) {}

  std::vector<ImaginedSample> imagine(std::span<const SourcePrototype>, std::span<const Expression> targets,
                                      std::size_t n_per_class, std::uint64_t seed) const override {
    return oracle_->oracle_imagine(subject_, targets, n_per_class, sigma_, seed);
  }

 private:
  const OracleGenerator* oracle_;
  std::string subject_;
  double sigma_;
};

// Pulls every generated sample towards the mean source prototype by `leak`,
// modelling a generator that carries features of its input into the output.
class SourceLeakGenerator final : public ImaginationGenerator {
 public:
  SourceLeakGenerator(const ImaginationGenerator& inner, double leak) : inner_(&inner), leak_(leak) {
    if (!(leak >= 0.0 && leak <= 1.0)) throw ConfigError("leak must lie in [0,1]");
  }

  std::vector<ImaginedSample> imagine(std::span<const SourcePrototype> prototypes,
                                      std::span<const Expression> targets, std::size_t n_per_class,
                                      std::uint64_t seed) const override {
    auto out = inner_->imagine(prototypes, targets, n_per_class, seed);
    if (prototypes.empty() || leak_ == 0.0) return out;
    Vector centre(prototypes.front().features.size(), 0.0);
    for (const auto& p : prototypes)
      for (std::size_t k = 0; k < centre.size(); ++k) centre[k] += p.features[k];
    for (auto& v : centre) v /= static_cast<double>(prototypes.size());
    for (auto& s : out) s.features = blend(centre, s.features, leak_);
    return out;
  }

 private:
  const ImaginationGenerator* inner_;
  double leak_;
};

}  // namespace clifer
