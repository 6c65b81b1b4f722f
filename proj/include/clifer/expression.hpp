#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace clifer {

// The six expression classes, declared in canonical order. Every tie-break
// over labels picks the smallest value of this enum.
enum class Expression : std::uint8_t { neutral, happy, surprise, anger, fear, sadness };

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<Expression, kNumClasses> kAllExpressions{
    Expression::neutral, Expression::happy, Expression::surprise,
    Expression::anger,   Expression::fear,  Expression::sadness};

inline constexpr std::array<std::string_view, kNumClasses> kExpressionNames{
    "neutral", "happy", "surprise", "anger", "fear", "sadness"};

constexpr std::size_t index_of(Expression e) noexcept { return static_cast<std::size_t>(e); }

constexpr Expression expression_at(std::size_t i) { return kAllExpressions.at(i); }

constexpr std::string_view to_string(Expression e) noexcept { return kExpressionNames[index_of(e)]; }

inline std::optional<Expression> try_parse_expression(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (kExpressionNames[i] == name) return kAllExpressions[i];
  return std::nullopt;
}

inline Expression parse_expression(std::string_view name) {
  if (auto e = try_parse_expression(name)) return *e;
  throw ProtocolError("unknown expression class '" + std::string(name) + "'");
}

// Per-neuron label histogram for associative labelling.
using LabelCounts = std::array<std::uint64_t, kNumClasses>;

inline std::uint64_t total(const LabelCounts& c) noexcept {
  std::uint64_t t = 0;
  for (auto v : c) t += v;
  return t;
}

// Argmax with ties resolved to the canonically smallest class; empty when all counts are 0.
inline std::optional<Expression> argmax_label(const LabelCounts& c) noexcept {
  std::size_t best = kNumClasses;
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (c[i] > 0 && (best == kNumClasses || c[i] > c[best])) best = i;
  if (best == kNumClasses) return std::nullopt;
  return kAllExpressions[best];
}

}  // namespace clifer
