#include "rpac/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rpac::io {

namespace {

[[noreturn]] void schema(const std::string& detail) { throw Error(ErrorKind::SchemaError, detail); }

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) schema(where + ": missing field \"" + name + "\"");
  return j.at(name);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) schema(where + ": expected an integer");
  return j.get<int>();
}

NeuronKind parse_kind(const json& j, const std::string& where) {
  if (!j.is_string()) schema(where + ": expected a string");
  const std::string s = j.get<std::string>();
  if (s == "input") return NeuronKind::input;
  if (s == "constant_one") return NeuronKind::constant_one;
  if (s == "hidden") return NeuronKind::hidden;
  if (s == "output") return NeuronKind::output;
  schema(where + ": unknown neuron kind \"" + s + "\"");
}

std::optional<Edge> parse_edge_key(const std::string& key) {
  const auto arrow = key.find("->");
  if (arrow == std::string::npos) return std::nullopt;
  Edge e;
  const char* b = key.data();
  auto r1 = std::from_chars(b, b + arrow, e.src);
  auto r2 = std::from_chars(b + arrow + 2, b + key.size(), e.dst);
  if (r1.ec != std::errc() || r1.ptr != b + arrow || r2.ec != std::errc() || r2.ptr != b + key.size()) {
    return std::nullopt;
  }
  return e;
}

// Per-edge values from an object keyed "src->dst"; every edge must appear.
std::vector<double> edge_map(const json& j, const DagNetwork& net, const std::string& where) {
  if (!j.is_object()) schema(where + ": expected an object keyed by \"src->dst\"");
  std::vector<double> out(net.num_edges(), 0.0);
  std::vector<bool> seen(net.num_edges(), false);
  for (const auto& [key, value] : j.items()) {
    const auto e = parse_edge_key(key);
    if (!e) schema(where + ": bad edge key \"" + key + "\"");
    const auto idx = net.find_edge(e->src, e->dst);
    if (!idx) throw Error(ErrorKind::EdgeSetMismatch, where + ": \"" + key + "\" is not an edge of the network");
    out[*idx] = number(value, where + "[\"" + key + "\"]");
    seen[*idx] = true;
  }
  for (std::size_t e = 0; e < seen.size(); ++e) {
    if (!seen[e]) throw Error(ErrorKind::EdgeSetMismatch, where + ": no value for edge \"" + net.edge_key(e) + "\"");
  }
  return out;
}

json edge_object(const DagNetwork& net, std::span<const double> values) {
  json o = json::object();
  for (std::size_t e = 0; e < net.num_edges(); ++e) o[net.edge_key(e)] = values[e];
  return o;
}

}  // namespace

LoadedNetwork network_from_json(const json& j) {
  const json& neurons = field(j, "neurons", "network");
  if (!neurons.is_array()) schema("network.neurons: expected an array");
  const std::size_t n = neurons.size();
  NetworkDesc desc;
  desc.kinds.resize(n);
  desc.layers.resize(n);
  std::vector<bool> have(n, false);
  bool any_layer = false;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = "network.neurons[" + std::to_string(i) + "]";
    const int id = integer(field(neurons[i], "id", where), where + ".id");
    if (id < 0 || static_cast<std::size_t>(id) >= n || have[static_cast<std::size_t>(id)]) {
      schema(where + ".id: ids must be dense and unique in 0.." + std::to_string(n - 1));
    }
    have[static_cast<std::size_t>(id)] = true;
    desc.kinds[static_cast<std::size_t>(id)] = parse_kind(field(neurons[i], "kind", where), where + ".kind");
    if (neurons[i].contains("layer")) {
      desc.layers[static_cast<std::size_t>(id)] = integer(neurons[i]["layer"], where + ".layer");
      any_layer = true;
    }
  }
  if (!any_layer) desc.layers.clear();

  std::vector<double> weights;
  const json& edges = field(j, "edges", "network");
  if (!edges.is_array()) schema("network.edges: expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "network.edges[" + std::to_string(i) + "]";
    Edge e{integer(field(edges[i], "src", where), where + ".src"), integer(field(edges[i], "dst", where), where + ".dst")};
    desc.edges.push_back(e);
    weights.push_back(edges[i].contains("w") ? number(edges[i]["w"], where + ".w") : 0.0);
  }

  std::size_t bias_edges = 0;
  if (j.contains("biases")) {
    const json& biases = j["biases"];
    if (!biases.is_array()) schema("network.biases: expected an array");
    if (!biases.empty()) {
      int constant = -1;
      for (std::size_t v = 0; v < n; ++v) {
        if (desc.kinds[v] == NeuronKind::constant_one) constant = static_cast<int>(v);
      }
      if (constant < 0) {
        constant = static_cast<int>(desc.kinds.size());
        desc.kinds.push_back(NeuronKind::constant_one);
        if (!desc.layers.empty()) desc.layers.emplace_back();
      }
      for (std::size_t i = 0; i < biases.size(); ++i) {
        const std::string where = "network.biases[" + std::to_string(i) + "]";
        desc.edges.push_back(Edge{constant, integer(field(biases[i], "neuron", where), where + ".neuron")});
        weights.push_back(number(field(biases[i], "b", where), where + ".b"));
        ++bias_edges;
      }
    }
  }
  DagNetwork net(std::move(desc));
  return LoadedNetwork{std::move(net), WeightAssignment{std::move(weights)}, bias_edges};
}

json network_to_json(const DagNetwork& net, const WeightAssignment& w) {
  check_weights(net, w);
  json neurons = json::array();
  for (std::size_t v = 0; v < net.num_neurons(); ++v) {
    json nj = {{"id", v}, {"kind", std::string(to_string(net.kind(static_cast<int>(v))))}};
    if (auto l = net.layer(static_cast<int>(v))) nj["layer"] = *l;
    neurons.push_back(std::move(nj));
  }
  json edges = json::array();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    edges.push_back({{"src", net.edge(e).src}, {"dst", net.edge(e).dst}, {"w", w.values[e]}});
  }
  return json{{"neurons", std::move(neurons)}, {"edges", std::move(edges)}};
}

DiagGaussian distribution_from_json(const json& j, const DagNetwork& net, Role role,
                                    const WeightAssignment* weights) {
  const std::string where = role == Role::prior ? "prior" : "posterior";
  if (!j.is_object()) schema(where + ": expected an object");
  if (j.contains("kind") && j["kind"] != "diag_gaussian") schema(where + ".kind: only \"diag_gaussian\" is supported");
  if (j.contains("role")) {
    const std::string declared = j["role"].is_string() ? j["role"].get<std::string>() : "";
    if (declared != "prior" && declared != "posterior") schema(where + ".role: expected \"prior\" or \"posterior\"");
    if (declared != where) schema(where + ".role: file declares role \"" + declared + "\"");
  }

  std::vector<double> std;
  if (j.contains("isotropic_std")) {
    std.assign(net.num_edges(), number(j["isotropic_std"], where + ".isotropic_std"));
  } else {
    std = edge_map(field(j, "std", where), net, where + ".std");
  }

  std::vector<double> mean(net.num_edges(), 0.0);
  if (j.contains("mean")) {
    const json& m = j["mean"];
    if (m.is_string()) {
      if (m != "weights") schema(where + ".mean: the only string form is \"weights\"");
      if (!weights) schema(where + ".mean: \"weights\" needs network weights");
      mean = weights->values;
    } else {
      mean = edge_map(m, net, where + ".mean");
    }
  }

  if (role == Role::prior) {
    for (std::size_t e = 0; e < mean.size(); ++e) {
      if (mean[e] != 0.0) {
        throw Error(ErrorKind::InvalidDistribution, "prior mean of edge \"" + net.edge_key(e) + "\" is nonzero");
      }
    }
    return DiagGaussian::prior(std::move(std));
  }
  return DiagGaussian::posterior(std::move(mean), std::move(std));
}

json distribution_to_json(const DagNetwork& net, const DiagGaussian& d) {
  return json{{"kind", "diag_gaussian"},
              {"role", d.role() == Role::prior ? "prior" : "posterior"},
              {"mean", edge_object(net, d.mean())},
              {"std", edge_object(net, d.std())}};
}

Dataset dataset_from_json(const json& j) {
  Dataset d;
  const json& x = field(j, "x", "dataset");
  const json& y = field(j, "y", "dataset");
  if (!x.is_array() || !y.is_array()) schema("dataset: x and y must be arrays");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::string where = "dataset.x[" + std::to_string(i) + "]";
    if (!x[i].is_array()) schema(where + ": expected an array");
    std::vector<double> row;
    for (std::size_t k = 0; k < x[i].size(); ++k) row.push_back(number(x[i][k], where));
    d.x.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < y.size(); ++i) d.y.push_back(integer(y[i], "dataset.y[" + std::to_string(i) + "]"));
  if (d.x.size() != d.y.size()) schema("dataset: x and y have different lengths");
  return d;
}

RescalingVector rescaling_from_json(const json& j, const DagNetwork& net) {
  if (!j.is_object()) schema("rescaling: expected an object keyed by hidden neuron id");
  std::vector<double> lambda(net.num_hidden(), 1.0);
  for (const auto& [key, value] : j.items()) {
    int id = -1;
    auto r = std::from_chars(key.data(), key.data() + key.size(), id);
    if (r.ec != std::errc() || r.ptr != key.data() + key.size()) schema("rescaling: bad neuron id \"" + key + "\"");
    if (id < 0 || static_cast<std::size_t>(id) >= net.num_neurons() || !net.is_hidden(id)) {
      throw Error(ErrorKind::NonHiddenNeuron, "rescaling: neuron " + key + " is not hidden");
    }
    lambda[static_cast<std::size_t>(net.hidden_index(id))] = number(value, "rescaling[\"" + key + "\"]");
  }
  return RescalingVector::from_factors(net, lambda);
}

json rescaling_to_json(const DagNetwork& net, const RescalingVector& lambda) {
  json o = json::object();
  for (int v : net.hidden()) o[std::to_string(v)] = lambda.factor(v);
  return o;
}

json bcd_run_to_json(const DagNetwork& net, const BcdRun& run) {
  return json{{"lambda_star", rescaling_to_json(net, run.lambda)},
              {"kl_initial", run.kl_initial},
              {"kl_final", run.kl_final},
              {"converged", run.converged},
              {"sweeps", run.sweeps_done},
              {"last_step", run.last_step},
              {"schedule", std::string(to_string(run.schedule))},
              {"tol", run.tol},
              {"max_sweeps", run.max_sweeps},
              {"clamp_events", run.clamp_events}};
}

json bound_report_to_json(const BoundReport& r) {
  json lambda = json::object();
  for (std::size_t h = 0; h < r.hidden_ids.size(); ++h) lambda[std::to_string(r.hidden_ids[h])] = r.lambda_star[h];
  auto bound = [&](const BoundValue& b) {
    return json{{"value", b.value}, {"t", b.t}, {"delta_used", b.delta_used}, {"vacuous", b.vacuous}};
  };
  json t_mode;
  if (r.t_choice.t) {
    t_mode = {{"mode", "fixed"}, {"t", *r.t_choice.t}};
  } else {
    t_mode = {{"mode", "grid"}, {"grid", r.t_choice.grid}, {"delta_split", r.params.delta / static_cast<double>(r.t_choice.grid.size())}};
  }
  return json{{"empirical_risk",
               {{"value", r.empirical_risk.value},
                {"mc_samples", r.empirical_risk.mc_samples},
                {"std_error", r.empirical_risk.std_error},
                {"clamp_count", r.empirical_risk.clamp_count}}},
              {"kl_raw", r.kl_raw},
              {"kl_rescaled", r.kl_rescaled},
              {"bound_raw", bound(r.bound_raw)},
              {"bound_rescaled", bound(r.bound_rescaled)},
              {"params", {{"n", r.params.n}, {"loss_bound_C", r.params.loss_bound}, {"delta", r.params.delta}}},
              {"t_choice", std::move(t_mode)},
              {"lambda_star", std::move(lambda)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
  }
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace rpac::io
