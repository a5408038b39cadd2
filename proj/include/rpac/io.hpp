#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "rpac/dag_net.hpp"
#include "rpac/gauss.hpp"
#include "rpac/pac_bound.hpp"
#include "rpac/rescale_opt.hpp"

namespace rpac::io {

using nlohmann::json;

// Network file:
//   {"neurons":[{"id":0,"kind":"input","layer":0},...],
//    "edges":[{"src":0,"dst":2,"w":0.5},...],
//    "biases":[{"neuron":2,"b":0.1},...]}
// Ids must be dense 0..N-1. Missing "w" defaults to 0. Biases become edges
// from the constant_one neuron, which is appended with id N when absent.
struct LoadedNetwork {
  DagNetwork net;
  WeightAssignment weights;
  std::size_t bias_edges = 0;  // edges added while normalizing biases
};

LoadedNetwork network_from_json(const json& j);
json network_to_json(const DagNetwork& net, const WeightAssignment& w);

// Distribution file:
//   {"kind":"diag_gaussian","role":"posterior",
//    "mean":{"0->2":0.3,...}, "std":{"0->2":0.03,...}}
// "std" may be replaced by "isotropic_std": s. A missing "mean" means zero;
// "mean":"weights" takes the network's weights. Priors reject nonzero means.
DiagGaussian distribution_from_json(const json& j, const DagNetwork& net, Role role,
                                    const WeightAssignment* weights = nullptr);
json distribution_to_json(const DagNetwork& net, const DiagGaussian& d);

// Dataset file: {"x":[[...],...],"y":[0,2,...]}.
Dataset dataset_from_json(const json& j);

// {"<hidden id>": lambda, ...}; neurons not listed keep factor 1.
RescalingVector rescaling_from_json(const json& j, const DagNetwork& net);
json rescaling_to_json(const DagNetwork& net, const RescalingVector& lambda);

json bcd_run_to_json(const DagNetwork& net, const BcdRun& run);
json bound_report_to_json(const BoundReport& r);

json read_json_file(const std::filesystem::path& path);

// Canonical text: sorted keys, shortest round-trip floats, trailing newline.
std::string canonical_dump(const json& j);

}  // namespace rpac::io
