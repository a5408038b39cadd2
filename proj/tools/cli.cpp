#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <sstream>

#include "rpac/dag_net.hpp"
#include "rpac/gauss.hpp"
#include "rpac/io.hpp"
#include "rpac/pac_bound.hpp"
#include "rpac/path_lift.hpp"
#include "rpac/rescale_opt.hpp"
#include "rpac/rng.hpp"

namespace rpac::cli {

namespace {

using io::json;

struct Options {
  std::string net, q, p, data, lambda, out, trace, csv, distance, x;
  std::string schedule = "cyclic";
  std::string t_grid;
  std::string model_id = "model";
  double tol = 1e-10;
  int max_sweeps = 10000;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> init_seed;
  double delta = 0.05;
  std::optional<double> t;
  std::size_t mc_samples = 100;
  int threads = 1;
  std::uint64_t path_cap = kDefaultPathCap;
  bool relu_outputs = false;
  bool phi = false;
};

void emit(const Options& o, std::ostream& out, const json& j) {
  const std::string text = io::canonical_dump(j);
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + o.out);
  f << text;
}

Schedule parse_schedule(const std::string& s) {
  if (s == "cyclic") return Schedule::cyclic;
  if (s == "odd-even" || s == "odd_even") return Schedule::odd_even;
  throw Error(ErrorKind::InvalidParams, "--schedule must be cyclic or odd-even, got \"" + s + "\"");
}

std::vector<double> parse_t_grid(const std::string& arg) {
  std::stringstream ss(arg);
  std::string lo, hi, n;
  if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') || !std::getline(ss, n)) {
    throw Error(ErrorKind::InvalidParams, "--t-grid expects LO:HI:N, got \"" + arg + "\"");
  }
  try {
    return geometric_grid(std::stod(lo), std::stod(hi), static_cast<std::size_t>(std::stoul(n)));
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidParams, "--t-grid expects LO:HI:N, got \"" + arg + "\"");
  }
}

std::vector<double> parse_vector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidParams, "--x: bad number \"" + tok + "\"");
    }
  }
  return v;
}

struct Inputs {
  io::LoadedNetwork loaded;
  std::optional<DiagGaussian> q, p;
};

Inputs load_common(const Options& o, bool need_q, bool need_p) {
  Inputs in{io::network_from_json(io::read_json_file(o.net)), std::nullopt, std::nullopt};
  if (need_q) {
    in.q = io::distribution_from_json(io::read_json_file(o.q), in.loaded.net, Role::posterior, &in.loaded.weights);
  }
  if (need_p) {
    in.p = io::distribution_from_json(io::read_json_file(o.p), in.loaded.net, Role::prior);
  }
  return in;
}

BcdOptions bcd_options(const Options& o, const DagNetwork& net) {
  BcdOptions b;
  b.schedule = parse_schedule(o.schedule);
  b.tol = o.tol;
  b.max_sweeps = o.max_sweeps;
  b.threads = o.threads;
  if (o.init_seed) {
    const CounterNormal rng(*o.init_seed);
    std::vector<double> z(net.num_hidden());
    for (std::size_t h = 0; h < z.size(); ++h) z[h] = -3.0 + 6.0 * rng.uniform(0, h);
    b.init = RescalingVector::from_log(net, z);
  }
  return b;
}

void write_trace(const std::string& path, const BcdRun& run) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
  f << "sweep,objective\n";
  f.precision(17);
  for (std::size_t i = 0; i < run.objective_trace.size(); ++i) f << i << ',' << run.objective_trace[i] << '\n';
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto loaded = io::network_from_json(io::read_json_file(o.net));
  const DagNetwork& net = loaded.net;
  json topo = json::array();
  for (int v : net.topo_order()) topo.push_back(v);
  emit(o, out, json{{"valid", true},
                    {"neurons", net.num_neurons()},
                    {"edges", net.num_edges()},
                    {"hidden", net.num_hidden()},
                    {"normalized_bias_edges", loaded.bias_edges},
                    {"topo_order", std::move(topo)}});
  return kOk;
}

int cmd_forward(const Options& o, std::ostream& out) {
  const auto loaded = io::network_from_json(io::read_json_file(o.net));
  std::vector<std::vector<double>> xs;
  if (!o.data.empty()) xs = io::dataset_from_json(io::read_json_file(o.data)).x;
  if (!o.x.empty()) xs.push_back(parse_vector(o.x));
  if (xs.empty()) throw Error(ErrorKind::InvalidParams, "forward needs --x or --data");
  json outputs = json::array();
  for (const auto& x : xs) outputs.push_back(forward(loaded.net, loaded.weights, x, {o.relu_outputs}));
  emit(o, out, json{{"outputs", std::move(outputs)}});
  return kOk;
}

int cmd_rescale_apply(const Options& o, std::ostream& out) {
  const auto loaded = io::network_from_json(io::read_json_file(o.net));
  const RescalingVector lambda = io::rescaling_from_json(io::read_json_file(o.lambda), loaded.net);
  emit(o, out, io::network_to_json(loaded.net, apply_rescaling(loaded.net, lambda, loaded.weights)));
  return kOk;
}

int cmd_kl(const Options& o, std::ostream& out) {
  const Inputs in = load_common(o, true, true);
  json j{{"kl", kl_diag(*in.q, *in.p)}};
  if (!o.lambda.empty()) {
    const RescalingVector lambda = io::rescaling_from_json(io::read_json_file(o.lambda), in.loaded.net);
    j["jbar"] = objective_jbar(in.loaded.net, *in.q, *in.p, lambda);
    j["j"] = objective_j(in.loaded.net, *in.q, *in.p, lambda);
  }
  emit(o, out, j);
  return kOk;
}

int cmd_optimize(const Options& o, std::ostream& out, std::ostream& err) {
  const Inputs in = load_common(o, true, true);
  const BcdRun run = run_bcd(in.loaded.net, *in.q, *in.p, bcd_options(o, in.loaded.net));
  if (!o.trace.empty()) write_trace(o.trace, run);
  if (run.clamp_events > 0) {
    err << "warning: " << run.clamp_events << " coefficient exponents were clamped at +-700\n";
  }
  emit(o, out, io::bcd_run_to_json(in.loaded.net, run));
  return run.converged ? kOk : kNotConverged;
}

int cmd_bound(const Options& o, std::ostream& out, std::ostream& err) {
  const Inputs in = load_common(o, true, true);
  const DagNetwork& net = in.loaded.net;
  const Dataset data = io::dataset_from_json(io::read_json_file(o.data));

  TChoice choice;
  if (o.t) {
    choice.t = *o.t;
  } else {
    choice.grid = o.t_grid.empty() ? default_t_grid(data.size()) : parse_t_grid(o.t_grid);
  }
  BoundParams params{data.size(), 1.0, o.delta};
  check_params(params);

  RiskOptions ropts;
  ropts.mc_samples = o.mc_samples;
  ropts.seed = o.seed;
  ropts.threads = o.threads;
  ropts.forward.relu_outputs = o.relu_outputs;
  const RiskEstimate risk = mc_empirical_risk(net, *in.q, data, Loss::zero_one(), ropts);

  const double kl_raw = kl_diag(*in.q, *in.p);
  const BcdRun run = run_bcd(net, *in.q, *in.p, bcd_options(o, net));
  if (!o.trace.empty()) write_trace(o.trace, run);
  // The identity rescaling is always feasible, so the rescaled KL never
  // exceeds the raw one.
  const double kl_rescaled = std::min(run.kl_final, kl_raw);
  std::vector<int> hidden(net.hidden().begin(), net.hidden().end());
  const BoundReport report =
      make_bound_report(risk, kl_raw, kl_rescaled, params, choice, run.lambda.hidden_factors(net), hidden);

  json j = io::bound_report_to_json(report);
  j["bcd"] = io::bcd_run_to_json(net, run);
  j["model_id"] = o.model_id;
  emit(o, out, j);

  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + o.csv);
    f.precision(17);
    f << "model_id,kl_raw,kl_rescaled,bound_raw,bound_rescaled,vacuous_raw,vacuous_rescaled\n";
    f << o.model_id << ',' << report.kl_raw << ',' << report.kl_rescaled << ',' << report.bound_raw.value << ','
      << report.bound_rescaled.value << ',' << (report.bound_raw.vacuous ? "true" : "false") << ','
      << (report.bound_rescaled.vacuous ? "true" : "false") << '\n';
  }
  if (!run.converged) {
    err << "warning: rescaling optimizer stopped after " << run.sweeps_done << " sweeps without converging\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_path_lift(const Options& o, std::ostream& out) {
  const auto loaded = io::network_from_json(io::read_json_file(o.net));
  const DagNetwork& net = loaded.net;
  if (!o.distance.empty()) {
    const auto other = io::network_from_json(io::read_json_file(o.distance));
    if (other.net.num_edges() != net.num_edges()) {
      throw Error(ErrorKind::DimensionMismatch, "--distance network has a different edge set");
    }
    for (std::size_t e = 0; e < net.num_edges(); ++e) {
      if (other.net.edge(e).src != net.edge(e).src || other.net.edge(e).dst != net.edge(e).dst) {
        throw Error(ErrorKind::DimensionMismatch, "--distance network has a different edge set");
      }
    }
    const PathSet paths = enumerate_paths(net, o.path_cap);
    emit(o, out, json{{"path_count", paths.size()},
                      {"lifted_l1_distance", lifted_l1_distance(lift(net, paths, loaded.weights),
                                                                lift(net, paths, other.weights))},
                      {"weight_l1_distance", weight_l1_distance(loaded.weights, other.weights)}});
    return kOk;
  }
  const std::uint64_t count = count_paths(net);
  json j{{"path_count", count}};
  std::vector<int> signs;
  for (double w : loaded.weights.values) signs.push_back((w > 0.0) - (w < 0.0));
  j["signs"] = signs;
  if (o.phi) {
    const PathSet paths = enumerate_paths(net, o.path_cap);
    const LiftedPoint lp = lift(net, paths, loaded.weights);
    j["phi"] = lp.phi;
    j["paths"] = paths.neurons;
  }
  emit(o, out, j);
  return kOk;
}

int cmd_risk(const Options& o, std::ostream& out) {
  const Inputs in = load_common(o, true, false);
  const Dataset data = io::dataset_from_json(io::read_json_file(o.data));
  RiskOptions ropts;
  ropts.mc_samples = o.mc_samples;
  ropts.seed = o.seed;
  ropts.threads = o.threads;
  ropts.forward.relu_outputs = o.relu_outputs;
  const RiskEstimate r = mc_empirical_risk(in.loaded.net, *in.q, data, Loss::zero_one(), ropts);
  emit(o, out, json{{"value", r.value}, {"mc_samples", r.mc_samples}, {"std_error", r.std_error}, {"seed", o.seed}});
  return kOk;
}

void write_error(std::ostream& err, std::string_view kind, const std::string& detail) {
  err << json{{"error", {{"kind", kind}, {"detail", detail}}}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"PAC-Bayes bounds for DAG-ReLU networks, tightened over neuron-wise rescalings", "rpac"};
  app.require_subcommand(1);

  auto add_net = [&](CLI::App* sub) { sub->add_option("--net", o.net, "network JSON")->required(); };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "write JSON here instead of stdout"); };
  auto add_bcd = [&](CLI::App* sub) {
    sub->add_option("--tol", o.tol, "sweep-level max |dz| stopping tolerance")->capture_default_str();
    sub->add_option("--max-sweeps", o.max_sweeps)->capture_default_str();
    sub->add_option("--schedule", o.schedule, "cyclic | odd-even")->capture_default_str();
    sub->add_option("--init-seed", o.init_seed, "random start with log factors uniform in [-3, 3]");
    sub->add_option("--trace", o.trace, "write sweep,objective CSV");
    sub->add_option("--threads", o.threads)->capture_default_str();
  };
  auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--mc-samples", o.mc_samples)->capture_default_str();
    sub->add_option("--seed", o.seed)->capture_default_str();
    sub->add_flag("--relu-outputs", o.relu_outputs, "apply ReLU at output neurons");
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a network file");
  add_net(validate_cmd);
  add_out(validate_cmd);

  auto* forward_cmd = app.add_subcommand("forward", "evaluate the network");
  add_net(forward_cmd);
  add_out(forward_cmd);
  forward_cmd->add_option("--x", o.x, "comma-separated input vector");
  forward_cmd->add_option("--data", o.data, "dataset JSON; evaluates every row");
  forward_cmd->add_flag("--relu-outputs", o.relu_outputs);

  auto* rescale_cmd = app.add_subcommand("rescale-apply", "apply a rescaling to the weights");
  add_net(rescale_cmd);
  add_out(rescale_cmd);
  rescale_cmd->add_option("--lambda", o.lambda, "JSON {hidden id: factor}")->required();

  auto* kl_cmd = app.add_subcommand("kl", "KL(Q || P), optionally under a rescaling");
  add_net(kl_cmd);
  add_out(kl_cmd);
  kl_cmd->add_option("--q", o.q, "posterior JSON")->required();
  kl_cmd->add_option("--p", o.p, "prior JSON")->required();
  kl_cmd->add_option("--lambda", o.lambda, "posterior-side rescaling JSON");

  auto* optimize_cmd = app.add_subcommand("optimize", "minimize KL over rescalings");
  add_net(optimize_cmd);
  add_out(optimize_cmd);
  add_bcd(optimize_cmd);
  optimize_cmd->add_option("--q", o.q)->required();
  optimize_cmd->add_option("--p", o.p)->required();

  auto* bound_cmd = app.add_subcommand("bound", "raw and rescaled McAllester bounds");
  add_net(bound_cmd);
  add_out(bound_cmd);
  add_bcd(bound_cmd);
  add_mc(bound_cmd);
  bound_cmd->add_option("--q", o.q)->required();
  bound_cmd->add_option("--p", o.p)->required();
  bound_cmd->add_option("--data", o.data)->required();
  bound_cmd->add_option("--delta", o.delta)->capture_default_str();
  auto* t_opt = bound_cmd->add_option("--t", o.t, "fixed t");
  bound_cmd->add_option("--t-grid", o.t_grid, "LO:HI:N geometric grid with a union bound")->excludes(t_opt);
  bound_cmd->add_option("--csv", o.csv, "append-style CSV summary");
  bound_cmd->add_option("--model-id", o.model_id)->capture_default_str();

  auto* lift_cmd = app.add_subcommand("path-lift", "path+sign lift of the weights");
  add_net(lift_cmd);
  add_out(lift_cmd);
  lift_cmd->add_option("--distance", o.distance, "second network with the same edges");
  lift_cmd->add_option("--path-cap", o.path_cap)->capture_default_str();
  lift_cmd->add_flag("--phi", o.phi, "include path products");

  auto* risk_cmd = app.add_subcommand("risk", "Monte-Carlo empirical risk of Q");
  add_net(risk_cmd);
  add_out(risk_cmd);
  add_mc(risk_cmd);
  risk_cmd->add_option("--q", o.q)->required();
  risk_cmd->add_option("--data", o.data)->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("rpac");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    write_error(err, "UsageError", e.what());
    return kInputError;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(o, out);
    if (forward_cmd->parsed()) return cmd_forward(o, out);
    if (rescale_cmd->parsed()) return cmd_rescale_apply(o, out);
    if (kl_cmd->parsed()) return cmd_kl(o, out);
    if (optimize_cmd->parsed()) return cmd_optimize(o, out, err);
    if (bound_cmd->parsed()) return cmd_bound(o, out, err);
    if (lift_cmd->parsed()) return cmd_path_lift(o, out);
    if (risk_cmd->parsed()) return cmd_risk(o, out);
  } catch (const Error& e) {
    write_error(err, to_string(e.kind()), e.detail());
    return kInputError;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace rpac::cli
