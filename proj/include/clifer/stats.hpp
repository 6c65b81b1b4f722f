#pragma once

// Evaluation statistics: confusion matrices, macro-F1, normal CIs, the
// Kruskal-Wallis H test and the chi-square tail it needs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"

namespace clifer {

// Rows are the true class, columns the prediction, both in canonical order.
class ConfusionMatrix {
 public:
  void add(Expression truth, Expression predicted, std::uint64_t n = 1) {
    counts_[index_of(truth)][index_of(predicted)] += n;
  }

  std::uint64_t at(Expression truth, Expression predicted) const {
    return counts_[index_of(truth)][index_of(predicted)];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts_)
      for (auto v : row) t += v;
    return t;
  }

  std::uint64_t row_sum(std::size_t i) const {
    return std::accumulate(counts_[i].begin(), counts_[i].end(), std::uint64_t{0});
  }

  std::uint64_t col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (const auto& row : counts_) s += row[j];
    return s;
  }

  std::uint64_t diagonal(std::size_t i) const { return counts_[i][i]; }

 private:
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts_{};
};

// Unweighted mean of per-class F1 over classes that occur as truth or
// prediction. A present class with P + R = 0 contributes 0.
inline double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InputError("macro_f1 of an empty confusion matrix");
  double sum = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const auto tp = static_cast<double>(cm.diagonal(i));
    const auto truth = static_cast<double>(cm.row_sum(i));
    const auto pred = static_cast<double>(cm.col_sum(i));
    if (truth == 0.0 && pred == 0.0) continue;
    ++included;
    const double p = pred > 0.0 ? tp / pred : 0.0;
    const double r = truth > 0.0 ? tp / truth : 0.0;
    sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / static_cast<double>(included);
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw InputError("mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// mean +/- 1.96 s / sqrt(n), s the sample standard deviation.
inline MeanCi mean_ci95(std::span<const double> values) {
  if (values.size() < 2) throw InputError("a 95% CI needs at least 2 values");
  // Constant samples: report the value itself, not a rounded running sum.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; }))
    return {values[0], 0.0};
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double n = static_cast<double>(values.size());
  const double s = std::sqrt(ss / (n - 1.0));
  return {m, 1.96 * s / std::sqrt(n)};
}

// Regularized upper incomplete gamma Q(a, x): series for x < a + 1,
// Lentz continued fraction otherwise.
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw InputError("gamma shape must be positive");
  if (x < 0.0) throw InputError("gamma argument must be non-negative");
  if (x == 0.0) return 1.0;
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

inline double chi_square_sf(double x, unsigned df) {
  if (df == 0) throw InputError("chi-square needs df >= 1");
  if (x < 0.0 || std::isnan(x)) throw InputError("chi-square statistic must be non-negative");
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

struct KwResult {
  double h = 0.0;
  unsigned degrees_of_freedom = 0;
  double p_value = 1.0;
  bool tie_corrected = false;
};

// Mid-ranks (1-based) of the pooled values; ties share the average rank.
inline std::vector<double> mid_ranks(std::span<const double> values, double* tie_term = nullptr) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  double ties = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

inline KwResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw InputError("Kruskal-Wallis needs at least 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw InputError("Kruskal-Wallis group is empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); }))
    throw DegenerateDataError("all values are identical; ranks carry no information");

  double ties = 0.0;
  const auto ranks = mid_ranks(pooled, &ties);
  const double n = static_cast<double>(pooled.size());
  const double centre = (n + 1.0) / 2.0;
  double h = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += ranks[offset + i];
    offset += g.size();
    const double ni = static_cast<double>(g.size());
    const double mean_rank = sum / ni;
    h += ni * (mean_rank - centre) * (mean_rank - centre);
  }
  h *= 12.0 / (n * (n + 1.0));
  KwResult out;
  if (ties > 0.0) {
    h /= 1.0 - ties / (n * n * n - n);
    out.tie_corrected = true;
  }
  out.h = std::max(h, 0.0);
  out.degrees_of_freedom = static_cast<unsigned>(groups.size() - 1);
  out.p_value = chi_square_sf(out.h, out.degrees_of_freedom);
  return out;
}

struct SignTestResult {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // one-sided, H1: differences tend to be positive
};

// Exact one-sided sign test; zero differences are dropped.
inline SignTestResult sign_test(std::span<const double> differences) {
  SignTestResult r;
  for (double d : differences) {
    if (d > 0.0) ++r.positive;
    else if (d < 0.0) ++r.negative;
    else ++r.ties;
  }
  const std::size_t n = r.positive + r.negative;
  if (n == 0) return r;
  // P(X >= positive), X ~ Binomial(n, 1/2), summed in log space.
  double p = 0.0;
  for (std::size_t k = r.positive; k <= n; ++k) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                            static_cast<double>(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  r.p_value = std::min(p, 1.0);
  return r;
}

}  // namespace clifer
