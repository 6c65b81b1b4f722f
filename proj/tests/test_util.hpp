#pragma once

#include <clifer/clifer.hpp>

namespace testutil {

struct EdgeMapBuilder {
  clifer::GwrNetwork::EdgeMap map;
  void add(clifer::NeuronId a, clifer::NeuronId b, std::uint32_t age = 0) {
    map[clifer::GwrNetwork::edge_key(a, b)] = age;
  }
};

inline clifer::LabeledSequence sequence(clifer::Expression label, std::vector<clifer::Vector> frames,
                                        std::string sample = "s", std::string subject = "S01") {
  return {std::move(subject), std::move(sample), label, std::move(frames)};
}

}  // namespace testutil

using testutil::EdgeMapBuilder;
