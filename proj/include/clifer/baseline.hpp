#pragma once

// One-hidden-layer perceptron trained by plain SGD on softmax cross-entropy.
// Used as the non-continual reference: it only ever sees the current
// episode's class.

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "datasets.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "rng.hpp"

namespace clifer {

class BaselineModel {
 public:
  BaselineModel(std::size_t dim, std::size_t hidden, std::uint64_t seed) : dim_(dim), hidden_(hidden) {
    if (dim == 0 || hidden == 0) throw ConfigError("baseline needs positive dim and hidden width");
    params_.assign(parameter_count(), 0.0);
    Rng rng = make_rng(seed, {0xb1});
    std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::normal_distribution<double> w2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    for (std::size_t i = 0; i < hidden_ * dim_; ++i) params_[i] = w1(rng);
    for (std::size_t i = 0; i < kNumClasses * hidden_; ++i) params_[w2_offset() + i] = w2(rng);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t parameter_count() const noexcept { return hidden_ * dim_ + hidden_ + kNumClasses * hidden_ + kNumClasses; }

  // Flat layout: W1 (hidden x dim, row-major), b1, W2 (6 x hidden), b2.
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::array<double, kNumClasses> probabilities(std::span<const double> x) const {
    check(x);
    std::vector<double> h(hidden_);
    return forward(x, h);
  }

  // Mean cross-entropy over the frames.
  double loss(std::span<const Vector> frames, std::span<const Expression> labels) const {
    check_batch(frames, labels);
    double total = 0.0;
    std::vector<double> h(hidden_);
    for (std::size_t n = 0; n < frames.size(); ++n) {
      const auto p = forward(frames[n], h);
      total -= std::log(std::max(p[index_of(labels[n])], std::numeric_limits<double>::min()));
    }
    return total / static_cast<double>(frames.size());
  }

  // Analytic gradient of loss() with respect to parameters().
  std::vector<double> gradient(std::span<const Vector> frames, std::span<const Expression> labels) const {
    check_batch(frames, labels);
    std::vector<double> g(params_.size(), 0.0);
    std::vector<double> h(hidden_), dh(hidden_);
    const double scale = 1.0 / static_cast<double>(frames.size());
    for (std::size_t n = 0; n < frames.size(); ++n) {
      const auto& x = frames[n];
      auto delta = forward(x, h);
      delta[index_of(labels[n])] -= 1.0;
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double dc = delta[c] * scale;
        g[b2_offset() + c] += dc;
        for (std::size_t j = 0; j < hidden_; ++j) {
          g[w2_offset() + c * hidden_ + j] += dc * h[j];
          dh[j] += dc * params_[w2_offset() + c * hidden_ + j];
        }
      }
      for (std::size_t j = 0; j < hidden_; ++j) {
        if (h[j] <= 0.0) continue;  // ReLU gate
        g[b1_offset() + j] += dh[j];
        for (std::size_t k = 0; k < dim_; ++k) g[j * dim_ + k] += dh[j] * x[k];
      }
    }
    return g;
  }

  // epochs x |frames| single-frame SGD steps on one class.
  void train_episode(std::span<const LabeledSequence> batch, std::size_t epochs, double lr) {
    std::vector<Vector> frames;
    std::vector<Expression> labels;
    for (const auto& seq : batch)
      for (const auto& f : seq.frames) {
        frames.push_back(f);
        labels.push_back(seq.label);
      }
    for (std::size_t e = 0; e < epochs; ++e)
      for (std::size_t n = 0; n < frames.size(); ++n) {
        const std::span<const Vector> one(&frames[n], 1);
        const std::span<const Expression> lab(&labels[n], 1);
        const double l = loss(one, lab);
        if (!std::isfinite(l)) throw TrainingError("baseline loss became non-finite");
        if (lr == 0.0) continue;
        const auto g = gradient(one, lab);
        for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * g[i];
      }
    for (double p : params_)
      if (!std::isfinite(p)) throw TrainingError("baseline weights became non-finite");
  }

  // Argmax of the frame-averaged class probabilities.
  Expression predict(std::span<const Vector> sequence) const {
    if (sequence.empty()) throw InputError("cannot classify an empty sequence");
    std::array<double, kNumClasses> avg{};
    for (const auto& f : sequence) {
      const auto p = probabilities(f);
      for (std::size_t c = 0; c < kNumClasses; ++c) avg[c] += p[c];
    }
    return kAllExpressions[static_cast<std::size_t>(std::max_element(avg.begin(), avg.end()) - avg.begin())];
  }

  bool operator==(const BaselineModel&) const = default;

 private:
  std::size_t b1_offset() const noexcept { return hidden_ * dim_; }
  std::size_t w2_offset() const noexcept { return b1_offset() + hidden_; }
  std::size_t b2_offset() const noexcept { return w2_offset() + kNumClasses * hidden_; }

  void check(std::span<const double> x) const {
    if (x.size() != dim_) throw InputError("baseline input dimension mismatch");
  }

  void check_batch(std::span<const Vector> frames, std::span<const Expression> labels) const {
    if (frames.empty() || frames.size() != labels.size()) throw InputError("baseline batch is empty or mislabeled");
    for (const auto& f : frames) check(f);
  }

  std::array<double, kNumClasses> forward(std::span<const double> x, std::vector<double>& h) const {
    for (std::size_t j = 0; j < hidden_; ++j) {
      double a = params_[b1_offset() + j];
      const double* w = &params_[j * dim_];
      for (std::size_t k = 0; k < dim_; ++k) a += w[k] * x[k];
      h[j] = std::max(a, 0.0);
    }
    std::array<double, kNumClasses> z{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      double a = params_[b2_offset() + c];
      for (std::size_t j = 0; j < hidden_; ++j) a += params_[w2_offset() + c * hidden_ + j] * h[j];
      z[c] = a;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
  }

  std::size_t dim_;
  std::size_t hidden_;
  std::vector<double> params_;
};

// Sequential (single-class) training step used by the incremental protocol.
inline BaselineModel run_baseline_episode(BaselineModel model, std::span<const LabeledSequence> batch,
                                          std::size_t epochs, double lr) {
  if (batch.empty()) throw ProtocolError("baseline episode batch is empty");
  for (const auto& seq : batch) {
    if (seq.label != batch.front().label) throw ProtocolError("baseline episode batch mixes classes");
    for (const auto& f : seq.frames)
      if (f.size() != model.dim()) throw InputError("baseline input dimension mismatch");
  }
  model.train_episode(batch, epochs, lr);
  return model;
}

}  // namespace clifer
