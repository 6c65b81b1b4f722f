#pragma once

// JSON snapshots. Every double is written as a hex-float string so a
// save/load cycle reproduces the network bit for bit.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "gwr.hpp"
#include "hexfloat.hpp"

namespace clifer {

using json = nlohmann::ordered_json;

inline constexpr int kSnapshotVersion = 1;

namespace detail {

inline json hex_array(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(to_hexfloat(x));
  return a;
}

inline Vector read_hex_array(const json& j) {
  if (!j.is_array()) throw DataError("expected an array of hex-floats");
  Vector v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(from_hexfloat(e.get<std::string>()));
  return v;
}

inline json hex_matrix(std::span<const Vector> rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(hex_array(r));
  return a;
}

inline std::vector<Vector> read_hex_matrix(const json& j) {
  if (!j.is_array()) throw DataError("expected an array of vectors");
  std::vector<Vector> out;
  for (const auto& r : j) out.push_back(read_hex_array(r));
  return out;
}

inline json label_counts_json(const LabelCounts& c) {
  json o = json::object();
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (c[i] > 0) o[std::string(kExpressionNames[i])] = c[i];
  return o;
}

inline LabelCounts read_label_counts(const json& j) {
  LabelCounts c{};
  for (const auto& [name, n] : j.items()) {
    auto e = try_parse_expression(name);
    if (!e) throw LabelError("unknown label '" + name + "' in snapshot");
    c[index_of(*e)] = n.get<std::uint64_t>();
  }
  return c;
}

template <typename F>
decltype(auto) guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace detail

inline json params_to_json(const GwrParams& p) {
  json j;
  j["insertion_threshold"] = to_hexfloat(p.insertion_threshold);
  j["habituation_threshold"] = to_hexfloat(p.habituation_threshold);
  j["eps_b"] = to_hexfloat(p.eps_b);
  j["eps_n"] = to_hexfloat(p.eps_n);
  j["tau_b"] = to_hexfloat(p.tau_b);
  j["tau_n"] = to_hexfloat(p.tau_n);
  j["kappa"] = to_hexfloat(p.kappa);
  j["max_edge_age"] = p.max_edge_age;
  j["context_depth"] = p.context_depth;
  j["beta"] = to_hexfloat(p.beta);
  j["alpha"] = detail::hex_array(p.alpha);
  j["prune_isolated"] = p.prune_isolated;
  return j;
}

// Accepts hex-float strings or plain JSON numbers, so hand-written config
// files can use decimals. Missing keys keep the values of `base`.
inline GwrParams params_from_json(const json& j, GwrParams base = {}) {
  return detail::guarded([&] {
    auto real = [&](const char* key, double& dst) {
      if (!j.contains(key)) return;
      const auto& v = j.at(key);
      dst = v.is_string() ? from_hexfloat(v.get<std::string>()) : v.get<double>();
    };
    GwrParams p = std::move(base);
    real("insertion_threshold", p.insertion_threshold);
    real("habituation_threshold", p.habituation_threshold);
    real("eps_b", p.eps_b);
    real("eps_n", p.eps_n);
    real("tau_b", p.tau_b);
    real("tau_n", p.tau_n);
    real("kappa", p.kappa);
    real("beta", p.beta);
    if (j.contains("max_edge_age")) p.max_edge_age = j.at("max_edge_age").get<std::uint32_t>();
    if (j.contains("context_depth")) p.with_context_depth(j.at("context_depth").get<std::size_t>());
    if (j.contains("alpha")) {
      p.alpha.clear();
      for (const auto& a : j.at("alpha"))
        p.alpha.push_back(a.is_string() ? from_hexfloat(a.get<std::string>()) : a.get<double>());
    }
    if (j.contains("prune_isolated")) p.prune_isolated = j.at("prune_isolated").get<bool>();
    p.validate();
    return p;
  });
}

inline json to_json(const GwrNetwork& net) {
  json j;
  j["version"] = kSnapshotVersion;
  j["kind"] = "gwr_network";
  j["params"] = params_to_json(net.params());
  j["dim"] = net.dim();
  json neurons = json::array();
  for (const Neuron& n : net.neurons()) {
    json o;
    o["id"] = n.id;
    o["weight"] = detail::hex_array(n.weight);
    o["contexts"] = detail::hex_matrix(n.contexts);
    o["h"] = to_hexfloat(n.habituation);
    o["label_counts"] = detail::label_counts_json(n.label_counts);
    neurons.push_back(std::move(o));
  }
  j["neurons"] = std::move(neurons);
  json edges = json::array();
  for (const auto& [key, age] : net.edges()) edges.push_back({{"a", key.first}, {"b", key.second}, {"age", age}});
  j["edges"] = std::move(edges);
  json temporal = json::array();
  for (const auto& [key, n] : net.temporal_counts())
    temporal.push_back({{"from", key.first}, {"to", key.second}, {"n", n}});
  j["temporal_counts"] = std::move(temporal);
  j["prev_bmu"] = net.prev_bmu() ? json(*net.prev_bmu()) : json(nullptr);
  j["global_context"] = detail::hex_matrix(net.global_context());
  j["rng_seed"] = net.rng_seed();
  j["next_id"] = net.next_id();
  return j;
}

inline GwrNetwork network_from_json(const json& j) {
  return detail::guarded([&] {
    if (j.at("version").get<int>() != kSnapshotVersion) throw DataError("unsupported snapshot version");
    GwrParams params = params_from_json(j.at("params"));
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<Neuron> neurons;
    for (const auto& o : j.at("neurons")) {
      Neuron n;
      n.id = o.at("id").get<NeuronId>();
      n.weight = detail::read_hex_array(o.at("weight"));
      n.contexts = detail::read_hex_matrix(o.at("contexts"));
      n.habituation = from_hexfloat(o.at("h").get<std::string>());
      n.label_counts = detail::read_label_counts(o.at("label_counts"));
      neurons.push_back(std::move(n));
    }
    GwrNetwork::EdgeMap edges;
    for (const auto& e : j.at("edges")) {
      auto a = e.at("a").get<NeuronId>(), b = e.at("b").get<NeuronId>();
      if (a == b) throw DataError("self-loop edge in snapshot");
      edges[GwrNetwork::edge_key(a, b)] = e.at("age").get<std::uint32_t>();
    }
    GwrNetwork::TransitionMap transitions;
    for (const auto& t : j.at("temporal_counts"))
      transitions[{t.at("from").get<NeuronId>(), t.at("to").get<NeuronId>()}] = t.at("n").get<std::uint64_t>();
    std::optional<NeuronId> prev;
    if (!j.at("prev_bmu").is_null()) prev = j.at("prev_bmu").get<NeuronId>();
    NeuronId next_id = 0;
    for (const auto& n : neurons) next_id = std::max(next_id, n.id + 1);
    if (j.contains("next_id")) next_id = j.at("next_id").get<NeuronId>();
    return GwrNetwork::from_parts(std::move(params), dim, std::move(neurons), std::move(edges),
                                  std::move(transitions), prev,
                                  detail::read_hex_matrix(j.at("global_context")),
                                  j.at("rng_seed").get<std::uint64_t>(), next_id);
  });
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace clifer
