#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpac/error.hpp"

namespace rpac {

enum class NeuronKind { input, constant_one, hidden, output };

std::string_view to_string(NeuronKind kind) noexcept;

struct Edge {
  int src = 0;
  int dst = 0;
};

// Raw, unchecked description of a network. Neuron ids are the indices into
// `kinds`; `layers` is either empty or has one (optional) entry per neuron.
struct NetworkDesc {
  std::vector<NeuronKind> kinds;
  std::vector<Edge> edges;
  std::vector<std::optional<int>> layers;
};

// Returns the first violated structural invariant, or nullopt when `desc`
// describes a valid DAG-ReLU network.
std::optional<Error> validate(const NetworkDesc& desc);

// Immutable, validated DAG-ReLU network topology.
//
// Edge indices follow the order of `NetworkDesc::edges`. Biases are edges
// leaving the (at most one) constant_one neuron, whose activation is always 1.
class DagNetwork {
 public:
  // Throws Error when `desc` fails validate().
  explicit DagNetwork(NetworkDesc desc);

  std::size_t num_neurons() const noexcept { return desc_.kinds.size(); }
  std::size_t num_edges() const noexcept { return desc_.edges.size(); }
  std::size_t num_hidden() const noexcept { return hidden_.size(); }

  NeuronKind kind(int id) const { return desc_.kinds.at(static_cast<std::size_t>(id)); }
  bool is_hidden(int id) const { return kind(id) == NeuronKind::hidden; }
  const Edge& edge(std::size_t e) const { return desc_.edges.at(e); }
  std::span<const Edge> edges() const noexcept { return desc_.edges; }

  // Kahn's algorithm, smallest id first among ready neurons.
  std::span<const int> topo_order() const noexcept { return topo_; }
  // Non-constant inputs, in increasing id order (the layout of `x`).
  std::span<const int> inputs() const noexcept { return inputs_; }
  std::span<const int> outputs() const noexcept { return outputs_; }
  // Hidden neurons in topological order; positions are "hidden indices".
  std::span<const int> hidden() const noexcept { return hidden_; }
  std::optional<int> constant_neuron() const noexcept { return constant_; }

  // -1 for non-hidden neurons.
  int hidden_index(int id) const { return hidden_index_.at(static_cast<std::size_t>(id)); }

  std::span<const std::size_t> in_edges(int id) const { return in_.at(static_cast<std::size_t>(id)); }
  std::span<const std::size_t> out_edges(int id) const { return out_.at(static_cast<std::size_t>(id)); }

  std::optional<std::size_t> find_edge(int src, int dst) const;
  std::string edge_key(std::size_t e) const;

  std::optional<int> layer(int id) const;
  // True when every hidden neuron carries a declared layer.
  bool has_hidden_layering() const;

  const NetworkDesc& desc() const noexcept { return desc_; }

 private:
  NetworkDesc desc_;
  std::vector<int> topo_;
  std::vector<int> inputs_;
  std::vector<int> outputs_;
  std::vector<int> hidden_;
  std::vector<int> hidden_index_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::optional<int> constant_;
};

// One real value per edge of the owning network, indexed by edge index.
struct WeightAssignment {
  std::vector<double> values;
};

void check_weights(const DagNetwork& net, const WeightAssignment& w);

// Positive factor per hidden neuron, stored as z = log(lambda) over all
// neuron ids; entries of non-hidden neurons are identically zero.
class RescalingVector {
 public:
  static RescalingVector identity(const DagNetwork& net);
  // `z_hidden` is indexed by hidden index.
  static RescalingVector from_log(const DagNetwork& net, std::span<const double> z_hidden);
  static RescalingVector from_factors(const DagNetwork& net, std::span<const double> lambda_hidden);

  double log_factor(int id) const { return z_.at(static_cast<std::size_t>(id)); }
  double factor(int id) const;
  std::size_t num_neurons() const noexcept { return z_.size(); }

  // log(lambda_dst / lambda_src) for edge e of `net`.
  double edge_log_factor(const DagNetwork& net, std::size_t e) const;

  std::vector<double> hidden_log_factors(const DagNetwork& net) const;
  std::vector<double> hidden_factors(const DagNetwork& net) const;

  RescalingVector inverse() const;
  // Entrywise product lambda * other.
  RescalingVector times(const RescalingVector& other) const;

 private:
  explicit RescalingVector(std::vector<double> z) : z_(std::move(z)) {}
  std::vector<double> z_;
};

struct ForwardOptions {
  // Apply ReLU at output neurons too (the literal recursive definition).
  bool relu_outputs = false;
};

// Realized function: one value per output neuron, in outputs() order.
std::vector<double> forward(const DagNetwork& net, const WeightAssignment& w,
                            std::span<const double> x, ForwardOptions opts = {});

// (lambda . w)_{u->v} = lambda_v / lambda_u * w_{u->v}; w is not modified.
WeightAssignment apply_rescaling(const DagNetwork& net, const RescalingVector& lambda,
                                 const WeightAssignment& w);

// lambda_hat with lambda_hat_v = lambda_v / other_v.
RescalingVector compose_rescalings(const RescalingVector& lambda, const RescalingVector& other);

// Signed incidence matrix B: B(e, h) = +1 if e enters hidden neuron h, -1 if it
// leaves h. Every row has at most two nonzeros, stored as column indices.
struct EdgeFactorMatrix {
  std::size_t cols = 0;
  std::vector<int> plus_col;   // hidden index of dst, or -1
  std::vector<int> minus_col;  // hidden index of src, or -1

  std::size_t rows() const noexcept { return plus_col.size(); }
  double row_dot(std::size_t e, std::span<const double> z_hidden) const;
  std::vector<std::vector<double>> dense() const;
};

EdgeFactorMatrix edge_factor_matrix(const DagNetwork& net);

}  // namespace rpac
