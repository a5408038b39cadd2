#include "rpac/path_lift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rpac {

namespace {

bool is_source(NeuronKind k) { return k == NeuronKind::input || k == NeuronKind::constant_one; }

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  return a > max - b ? max : a + b;
}

// Out-edges of every neuron sorted by destination id, so that depth-first
// enumeration yields paths in lexicographic order.
std::vector<std::vector<std::size_t>> sorted_out_edges(const DagNetwork& net) {
  std::vector<std::vector<std::size_t>> out(net.num_neurons());
  for (std::size_t v = 0; v < net.num_neurons(); ++v) {
    const auto span = net.out_edges(static_cast<int>(v));
    out[v].assign(span.begin(), span.end());
    std::sort(out[v].begin(), out[v].end(),
              [&](std::size_t a, std::size_t b) { return net.edge(a).dst < net.edge(b).dst; });
  }
  return out;
}

}  // namespace

std::uint64_t count_paths(const DagNetwork& net) {
  // paths_to_output[v]: number of paths from v to any output neuron.
  std::vector<std::uint64_t> paths_to_output(net.num_neurons(), 0);
  const auto order = net.topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    if (net.kind(v) == NeuronKind::output) {
      paths_to_output[static_cast<std::size_t>(v)] = 1;
      continue;
    }
    std::uint64_t n = 0;
    for (std::size_t e : net.out_edges(v)) {
      n = saturating_add(n, paths_to_output[static_cast<std::size_t>(net.edge(e).dst)]);
    }
    paths_to_output[static_cast<std::size_t>(v)] = n;
  }
  std::uint64_t total = 0;
  for (std::size_t v = 0; v < net.num_neurons(); ++v) {
    if (is_source(net.kind(static_cast<int>(v)))) total = saturating_add(total, paths_to_output[v]);
  }
  return total;
}

PathSet enumerate_paths(const DagNetwork& net, std::uint64_t cap) {
  const std::uint64_t count = count_paths(net);
  if (count > cap) {
    throw Error(ErrorKind::PathExplosion,
                std::to_string(count) + " paths exceed the cap of " + std::to_string(cap));
  }
  const auto out = sorted_out_edges(net);
  PathSet ps;
  ps.neurons.reserve(count);
  ps.edges.reserve(count);

  std::vector<int> stack_neurons;
  std::vector<std::size_t> stack_edges;
  auto descend = [&](auto&& self, int v) -> void {
    if (net.kind(v) == NeuronKind::output) {
      ps.neurons.push_back(stack_neurons);
      ps.edges.push_back(stack_edges);
      return;
    }
    for (std::size_t e : out[static_cast<std::size_t>(v)]) {
      const int d = net.edge(e).dst;
      stack_neurons.push_back(d);
      stack_edges.push_back(e);
      self(self, d);
      stack_neurons.pop_back();
      stack_edges.pop_back();
    }
  };
  for (std::size_t v = 0; v < net.num_neurons(); ++v) {
    if (!is_source(net.kind(static_cast<int>(v)))) continue;
    stack_neurons.assign(1, static_cast<int>(v));
    stack_edges.clear();
    descend(descend, static_cast<int>(v));
  }
  return ps;
}

LiftedPoint lift(const DagNetwork& net, const PathSet& paths, const WeightAssignment& w) {
  check_weights(net, w);
  LiftedPoint lp;
  lp.phi.reserve(paths.size());
  for (const auto& edges : paths.edges) {
    double prod = 1.0;
    for (std::size_t e : edges) prod *= w.values[e];
    lp.phi.push_back(prod);
  }
  lp.signs.reserve(w.values.size());
  for (double x : w.values) lp.signs.push_back((x > 0.0) - (x < 0.0));
  return lp;
}

double lifted_l1_distance(const LiftedPoint& a, const LiftedPoint& b) {
  if (a.phi.size() != b.phi.size() || a.signs.size() != b.signs.size()) {
    throw Error(ErrorKind::DimensionMismatch, "lifted points come from different networks");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) d += std::abs(a.phi[i] - b.phi[i]);
  for (std::size_t i = 0; i < a.signs.size(); ++i) d += std::abs(a.signs[i] - b.signs[i]);
  return d;
}

double weight_l1_distance(const WeightAssignment& a, const WeightAssignment& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorKind::DimensionMismatch, "weight assignments have different sizes");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d += std::abs(a.values[i] - b.values[i]);
  return d;
}

}  // namespace rpac
