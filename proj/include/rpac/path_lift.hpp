#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rpac/dag_net.hpp"

namespace rpac {

// Every directed path from an input or constant_one neuron to an output
// neuron, in lexicographic order of the neuron-id sequences.
struct PathSet {
  std::vector<std::vector<int>> neurons;
  std::vector<std::vector<std::size_t>> edges;

  std::size_t size() const noexcept { return neurons.size(); }
};

inline constexpr std::uint64_t kDefaultPathCap = 1'000'000;

// Number of source-to-output paths by dynamic programming over the
// topological order, without enumerating them. Saturates at UINT64_MAX.
std::uint64_t count_paths(const DagNetwork& net);

// Throws PathExplosion when count_paths(net) exceeds `cap`.
PathSet enumerate_paths(const DagNetwork& net, std::uint64_t cap = kDefaultPathCap);

struct LiftedPoint {
  std::vector<double> phi;  // product of edge weights along each path
  std::vector<int> signs;   // sign of each edge weight, sign(0) = 0
};

LiftedPoint lift(const DagNetwork& net, const PathSet& paths, const WeightAssignment& w);

// ||phi_a - phi_b||_1 + ||signs_a - signs_b||_1.
double lifted_l1_distance(const LiftedPoint& a, const LiftedPoint& b);

double weight_l1_distance(const WeightAssignment& a, const WeightAssignment& b);

}  // namespace rpac
