#include "rpac/dag_net.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <utility>

namespace rpac {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CyclicGraph: return "CyclicGraph";
    case ErrorKind::DanglingHidden: return "DanglingHidden";
    case ErrorKind::BadEdgeDirection: return "BadEdgeDirection";
    case ErrorKind::DuplicateConstant: return "DuplicateConstant";
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::UnknownNeuron: return "UnknownNeuron";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EdgeSetMismatch: return "EdgeSetMismatch";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::NonHiddenNeuron: return "NonHiddenNeuron";
    case ErrorKind::DegenerateCoefficients: return "DegenerateCoefficients";
    case ErrorKind::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorKind::PathExplosion: return "PathExplosion";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      detail_(std::move(detail)) {}

std::string_view to_string(NeuronKind kind) noexcept {
  switch (kind) {
    case NeuronKind::input: return "input";
    case NeuronKind::constant_one: return "constant_one";
    case NeuronKind::hidden: return "hidden";
    case NeuronKind::output: return "output";
  }
  return "unknown";
}

namespace {

std::string edge_name(const Edge& e) {
  return std::to_string(e.src) + "->" + std::to_string(e.dst);
}

bool may_emit(NeuronKind k) { return k != NeuronKind::output; }
bool may_receive(NeuronKind k) { return k == NeuronKind::hidden || k == NeuronKind::output; }

// Kahn's algorithm with a min-heap of ready ids. Returns fewer than n ids when
// the graph has a cycle.
std::vector<int> kahn_order(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (const Edge& e : edges) {
    succ[static_cast<std::size_t>(e.src)].push_back(e.dst);
    ++indeg[static_cast<std::size_t>(e.dst)];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(static_cast<int>(v));
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int s : succ[static_cast<std::size_t>(v)]) {
      if (--indeg[static_cast<std::size_t>(s)] == 0) ready.push(s);
    }
  }
  return order;
}

}  // namespace

std::optional<Error> validate(const NetworkDesc& desc) {
  const std::size_t n = desc.kinds.size();
  if (!desc.layers.empty() && desc.layers.size() != n) {
    return Error(ErrorKind::DimensionMismatch, "layers has " + std::to_string(desc.layers.size()) +
                                                   " entries for " + std::to_string(n) + " neurons");
  }
  std::optional<int> constant;
  for (std::size_t v = 0; v < n; ++v) {
    if (desc.kinds[v] != NeuronKind::constant_one) continue;
    if (constant) {
      return Error(ErrorKind::DuplicateConstant,
                   "neurons " + std::to_string(*constant) + " and " + std::to_string(v) +
                       " are both constant_one");
    }
    constant = static_cast<int>(v);
  }

  std::set<std::pair<int, int>> seen;
  std::vector<int> indeg(n, 0), outdeg(n, 0);
  for (const Edge& e : desc.edges) {
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n ||
        static_cast<std::size_t>(e.dst) >= n) {
      return Error(ErrorKind::UnknownNeuron, "edge " + edge_name(e) + " references a missing neuron");
    }
    if (e.src == e.dst) {
      return Error(ErrorKind::CyclicGraph, "self-loop on neuron " + std::to_string(e.src));
    }
    const NeuronKind ks = desc.kinds[static_cast<std::size_t>(e.src)];
    const NeuronKind kd = desc.kinds[static_cast<std::size_t>(e.dst)];
    if (!may_emit(ks) || !may_receive(kd)) {
      return Error(ErrorKind::BadEdgeDirection, "edge " + edge_name(e) + " goes from " +
                                                    std::string(to_string(ks)) + " to " +
                                                    std::string(to_string(kd)));
    }
    if (!seen.emplace(e.src, e.dst).second) {
      return Error(ErrorKind::DuplicateEdge, "edge " + edge_name(e) + " appears twice");
    }
    ++outdeg[static_cast<std::size_t>(e.src)];
    ++indeg[static_cast<std::size_t>(e.dst)];
  }

  const std::vector<int> order = kahn_order(n, desc.edges);
  if (order.size() != n) {
    std::vector<bool> placed(n, false);
    for (int v : order) placed[static_cast<std::size_t>(v)] = true;
    const auto it = std::find(placed.begin(), placed.end(), false);
    return Error(ErrorKind::CyclicGraph,
                 "neuron " + std::to_string(it - placed.begin()) + " lies on a cycle");
  }

  for (std::size_t v = 0; v < n; ++v) {
    if (desc.kinds[v] != NeuronKind::hidden) continue;
    if (indeg[v] == 0) {
      return Error(ErrorKind::DanglingHidden, "hidden neuron " + std::to_string(v) + " has no incoming edge");
    }
    if (outdeg[v] == 0) {
      return Error(ErrorKind::DanglingHidden, "hidden neuron " + std::to_string(v) + " has no outgoing edge");
    }
  }
  return std::nullopt;
}

DagNetwork::DagNetwork(NetworkDesc desc) : desc_(std::move(desc)) {
  if (auto err = validate(desc_)) throw *err;
  const std::size_t n = desc_.kinds.size();
  topo_ = kahn_order(n, desc_.edges);
  in_.resize(n);
  out_.resize(n);
  for (std::size_t e = 0; e < desc_.edges.size(); ++e) {
    out_[static_cast<std::size_t>(desc_.edges[e].src)].push_back(e);
    in_[static_cast<std::size_t>(desc_.edges[e].dst)].push_back(e);
  }
  hidden_index_.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    switch (desc_.kinds[v]) {
      case NeuronKind::input: inputs_.push_back(static_cast<int>(v)); break;
      case NeuronKind::output: outputs_.push_back(static_cast<int>(v)); break;
      case NeuronKind::constant_one: constant_ = static_cast<int>(v); break;
      case NeuronKind::hidden: break;
    }
  }
  for (int v : topo_) {
    if (desc_.kinds[static_cast<std::size_t>(v)] == NeuronKind::hidden) {
      hidden_index_[static_cast<std::size_t>(v)] = static_cast<int>(hidden_.size());
      hidden_.push_back(v);
    }
  }
}

std::optional<std::size_t> DagNetwork::find_edge(int src, int dst) const {
  if (src < 0 || static_cast<std::size_t>(src) >= num_neurons()) return std::nullopt;
  for (std::size_t e : out_edges(src)) {
    if (desc_.edges[e].dst == dst) return e;
  }
  return std::nullopt;
}

std::string DagNetwork::edge_key(std::size_t e) const { return edge_name(edge(e)); }

std::optional<int> DagNetwork::layer(int id) const {
  if (desc_.layers.empty()) return std::nullopt;
  return desc_.layers.at(static_cast<std::size_t>(id));
}

bool DagNetwork::has_hidden_layering() const {
  return std::all_of(hidden_.begin(), hidden_.end(), [&](int v) { return layer(v).has_value(); });
}

void check_weights(const DagNetwork& net, const WeightAssignment& w) {
  if (w.values.size() != net.num_edges()) {
    throw Error(ErrorKind::DimensionMismatch, "weight assignment has " + std::to_string(w.values.size()) +
                                                  " values for " + std::to_string(net.num_edges()) + " edges");
  }
}

// ---------------------------------------------------------------------------
// RescalingVector

RescalingVector RescalingVector::identity(const DagNetwork& net) {
  return RescalingVector(std::vector<double>(net.num_neurons(), 0.0));
}

RescalingVector RescalingVector::from_log(const DagNetwork& net, std::span<const double> z_hidden) {
  if (z_hidden.size() != net.num_hidden()) {
    throw Error(ErrorKind::DimensionMismatch, "rescaling has " + std::to_string(z_hidden.size()) +
                                                  " entries for " + std::to_string(net.num_hidden()) +
                                                  " hidden neurons");
  }
  std::vector<double> z(net.num_neurons(), 0.0);
  for (std::size_t h = 0; h < z_hidden.size(); ++h) {
    if (!std::isfinite(z_hidden[h])) {
      throw Error(ErrorKind::InvalidParams,
                  "non-finite log factor for hidden neuron " + std::to_string(net.hidden()[h]));
    }
    z[static_cast<std::size_t>(net.hidden()[h])] = z_hidden[h];
  }
  return RescalingVector(std::move(z));
}

RescalingVector RescalingVector::from_factors(const DagNetwork& net, std::span<const double> lambda_hidden) {
  std::vector<double> z(lambda_hidden.size());
  for (std::size_t h = 0; h < z.size(); ++h) {
    if (!(lambda_hidden[h] > 0.0) || !std::isfinite(lambda_hidden[h])) {
      throw Error(ErrorKind::InvalidParams, "rescaling factor must be positive and finite");
    }
    z[h] = std::log(lambda_hidden[h]);
  }
  return from_log(net, z);
}

double RescalingVector::factor(int id) const { return std::exp(log_factor(id)); }

double RescalingVector::edge_log_factor(const DagNetwork& net, std::size_t e) const {
  const Edge& ed = net.edge(e);
  return log_factor(ed.dst) - log_factor(ed.src);
}

std::vector<double> RescalingVector::hidden_log_factors(const DagNetwork& net) const {
  std::vector<double> out;
  out.reserve(net.num_hidden());
  for (int v : net.hidden()) out.push_back(log_factor(v));
  return out;
}

std::vector<double> RescalingVector::hidden_factors(const DagNetwork& net) const {
  std::vector<double> out = hidden_log_factors(net);
  for (double& x : out) x = std::exp(x);
  return out;
}

RescalingVector RescalingVector::inverse() const {
  std::vector<double> z = z_;
  for (double& x : z) x = -x;
  return RescalingVector(std::move(z));
}

RescalingVector RescalingVector::times(const RescalingVector& other) const {
  if (other.z_.size() != z_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "rescalings belong to different networks");
  }
  std::vector<double> z = z_;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += other.z_[i];
  return RescalingVector(std::move(z));
}

// ---------------------------------------------------------------------------

std::vector<double> forward(const DagNetwork& net, const WeightAssignment& w,
                            std::span<const double> x, ForwardOptions opts) {
  check_weights(net, w);
  if (x.size() != net.inputs().size()) {
    throw Error(ErrorKind::DimensionMismatch, "input has " + std::to_string(x.size()) + " entries for " +
                                                  std::to_string(net.inputs().size()) + " input neurons");
  }
  std::vector<double> act(net.num_neurons(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) act[static_cast<std::size_t>(net.inputs()[i])] = x[i];
  if (auto c = net.constant_neuron()) act[static_cast<std::size_t>(*c)] = 1.0;

  for (int v : net.topo_order()) {
    const NeuronKind k = net.kind(v);
    if (k == NeuronKind::input || k == NeuronKind::constant_one) continue;
    double pre = 0.0;
    for (std::size_t e : net.in_edges(v)) {
      pre += act[static_cast<std::size_t>(net.edge(e).src)] * w.values[e];
    }
    const bool relu = k == NeuronKind::hidden || opts.relu_outputs;
    act[static_cast<std::size_t>(v)] = relu ? std::max(pre, 0.0) : pre;
  }

  std::vector<double> out;
  out.reserve(net.outputs().size());
  for (int v : net.outputs()) out.push_back(act[static_cast<std::size_t>(v)]);
  return out;
}

WeightAssignment apply_rescaling(const DagNetwork& net, const RescalingVector& lambda,
                                 const WeightAssignment& w) {
  check_weights(net, w);
  if (lambda.num_neurons() != net.num_neurons()) {
    throw Error(ErrorKind::DimensionMismatch, "rescaling belongs to a different network");
  }
  WeightAssignment out = w;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    out.values[e] *= std::exp(lambda.edge_log_factor(net, e));
  }
  return out;
}

RescalingVector compose_rescalings(const RescalingVector& lambda, const RescalingVector& other) {
  return lambda.times(other.inverse());
}

double EdgeFactorMatrix::row_dot(std::size_t e, std::span<const double> z_hidden) const {
  double s = 0.0;
  if (plus_col[e] >= 0) s += z_hidden[static_cast<std::size_t>(plus_col[e])];
  if (minus_col[e] >= 0) s -= z_hidden[static_cast<std::size_t>(minus_col[e])];
  return s;
}

std::vector<std::vector<double>> EdgeFactorMatrix::dense() const {
  std::vector<std::vector<double>> m(rows(), std::vector<double>(cols, 0.0));
  for (std::size_t e = 0; e < rows(); ++e) {
    if (plus_col[e] >= 0) m[e][static_cast<std::size_t>(plus_col[e])] = 1.0;
    if (minus_col[e] >= 0) m[e][static_cast<std::size_t>(minus_col[e])] = -1.0;
  }
  return m;
}

EdgeFactorMatrix edge_factor_matrix(const DagNetwork& net) {
  EdgeFactorMatrix b;
  b.cols = net.num_hidden();
  b.plus_col.reserve(net.num_edges());
  b.minus_col.reserve(net.num_edges());
  for (const Edge& e : net.edges()) {
    b.plus_col.push_back(net.hidden_index(e.dst));
    b.minus_col.push_back(net.hidden_index(e.src));
  }
  return b;
}

}  // namespace rpac
