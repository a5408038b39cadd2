#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "rpac/io.hpp"
#include "support/nets.hpp"

namespace rpac {
namespace {

namespace fs = std::filesystem;
using io::json;

std::string fixture(const std::string& name) { return std::string(RPAC_FIXTURES) + "/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
  json parsed() const { return json::parse(out); }
  json error() const { return json::parse(err.substr(0, err.find('\n'))); }
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("rpac_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

TEST(IoNetwork, BiasesBecomeConstantEdges) {
  const io::LoadedNetwork l = io::network_from_json(io::read_json_file(fixture("layered.json")));
  EXPECT_EQ(l.bias_edges, 7u);
  EXPECT_EQ(l.net.num_neurons(), 10u);
  ASSERT_TRUE(l.net.constant_neuron().has_value());
  EXPECT_EQ(*l.net.constant_neuron(), 9);
  EXPECT_EQ(l.net.in_edges(2).size(), 3u);
  EXPECT_EQ(l.net.num_edges(), 2 * 3 + 3 * 3 + 3 * 1 + 7u);
}

TEST(IoNetwork, RoundTrip) {
  testing::Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    const DagNetwork net = testing::random_net(rng);
    const WeightAssignment w = testing::random_weights(rng, net);
    const io::LoadedNetwork back = io::network_from_json(json::parse(io::network_to_json(net, w).dump()));
    EXPECT_EQ(back.weights.values, w.values);
    EXPECT_EQ(back.bias_edges, 0u);
    ASSERT_EQ(back.net.num_edges(), net.num_edges());
    for (std::size_t e = 0; e < net.num_edges(); ++e) {
      EXPECT_EQ(back.net.edge(e).src, net.edge(e).src);
      EXPECT_EQ(back.net.edge(e).dst, net.edge(e).dst);
    }
  }
}

TEST(IoNetwork, SchemaErrorsNameTheField) {
  try {
    io::network_from_json(json::parse(R"({"neurons":[{"id":0,"kind":"input"},{"id":1,"kind":"banana"}],"edges":[]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
    EXPECT_NE(e.detail().find("neurons[1].kind"), std::string::npos);
  }
  try {
    io::network_from_json(json::parse(R"({"neurons":[{"id":0,"kind":"input"},{"id":3,"kind":"output"}],"edges":[]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(e.detail().find("dense"), std::string::npos);
  }
  EXPECT_THROW(io::network_from_json(json::parse(R"({"edges":[]})")), Error);
}

TEST(IoDistribution, ShorthandsAndRoles) {
  const auto l = io::network_from_json(io::read_json_file(fixture("diamond.json")));
  const DiagGaussian q = io::distribution_from_json(io::read_json_file(fixture("diamond_q.json")), l.net,
                                                    Role::posterior, &l.weights);
  EXPECT_EQ(q.mean()[1], -1.5);
  EXPECT_EQ(q.std()[3], 0.05);
  const DiagGaussian p = io::distribution_from_json(io::read_json_file(fixture("prior_unit.json")), l.net, Role::prior);
  EXPECT_TRUE(p.is_isotropic());
  // A posterior file used as a prior is refused.
  try {
    io::distribution_from_json(io::read_json_file(fixture("diamond_q.json")), l.net, Role::prior, &l.weights);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
  }
  const auto chain = io::network_from_json(io::read_json_file(fixture("chain.json")));
  try {
    io::distribution_from_json(io::read_json_file(fixture("prior_nonzero_mean.json")), chain.net, Role::prior);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDistribution);
  }
  // Missing edge in an explicit map.
  EXPECT_THROW(io::distribution_from_json(json::parse(R"({"std":{"0->1":1.0}})"), chain.net, Role::posterior), Error);
}

TEST(IoDistribution, RoundTrip) {
  testing::Rng rng(82);
  const DagNetwork net = testing::random_net(rng);
  const DiagGaussian q = testing::random_posterior(rng, net.num_edges());
  const DiagGaussian back = io::distribution_from_json(io::distribution_to_json(net, q), net, Role::posterior);
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    EXPECT_EQ(back.mean()[e], q.mean()[e]);
    EXPECT_EQ(back.std()[e], q.std()[e]);
  }
}

TEST(IoCanonical, SortedKeysAndRoundTripDoubles) {
  const json j{{"b", 0.1}, {"a", 1.0 / 3.0}};
  const std::string s = io::canonical_dump(j);
  EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
  EXPECT_EQ(json::parse(s)["a"].get<double>(), 1.0 / 3.0);
  EXPECT_NE(s.find("0.1"), std::string::npos);
  EXPECT_EQ(s.find("0.10000"), std::string::npos);
}

TEST(Cli, ValidateReportsTopology) {
  const Result r = run_cli({"validate", "--net", fixture("layered.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json j = r.parsed();
  EXPECT_EQ(j["valid"], true);
  EXPECT_EQ(j["normalized_bias_edges"], 7);
  EXPECT_EQ(j["topo_order"].size(), 10u);
}

TEST(Cli, ValidationErrorIsMachineReadable) {
  const Result r = run_cli({"validate", "--net", fixture("dangling.json")});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_TRUE(r.out.empty());
  const json e = r.error();
  EXPECT_EQ(e["error"]["kind"], "DanglingHidden");
  EXPECT_TRUE(e["error"]["detail"].is_string());
}

TEST(Cli, MissingFileAndUsageErrors) {
  Result r = run_cli({"validate", "--net", fixture("nope.json")});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_EQ(r.error()["error"]["kind"], "IoError");
  r = run_cli({"optimize", "--net", fixture("chain.json")});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_EQ(r.error()["error"]["kind"], "UsageError");
  r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, cli::kInputError);
  r = run_cli({"bound", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
               fixture("prior_unit.json"), "--data", fixture("sign_data.json"), "--t", "3", "--t-grid", "1:2:3"});
  EXPECT_EQ(r.code, cli::kInputError);
}

TEST(Cli, HelpExitsZero) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("optimize"), std::string::npos);
}

TEST(Cli, ForwardChain) {
  const Result r = run_cli({"forward", "--net", fixture("chain_w33.json"), "--x", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.parsed()["outputs"][0][0].get<double>(), 18.0);
  const Result bad = run_cli({"forward", "--net", fixture("chain_w33.json"), "--x", "1,2"});
  EXPECT_EQ(bad.code, cli::kInputError);
  EXPECT_EQ(bad.error()["error"]["kind"], "DimensionMismatch");
}

TEST(Cli, RescaleApplyPreservesFunction) {
  TempDir tmp;
  write_file(tmp.file("lambda.json"), R"({"1": 4.0})");
  const Result r = run_cli({"rescale-apply", "--net", fixture("chain_w33.json"), "--lambda", tmp.file("lambda.json"),
                            "--out", tmp.file("scaled.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto scaled = io::network_from_json(io::read_json_file(tmp.file("scaled.json")));
  EXPECT_EQ(scaled.weights.values, (std::vector<double>{12.0, 0.75}));
  write_file(tmp.file("bad.json"), R"({"0": 4.0})");
  const Result bad = run_cli({"rescale-apply", "--net", fixture("chain_w33.json"), "--lambda", tmp.file("bad.json")});
  EXPECT_EQ(bad.error()["error"]["kind"], "NonHiddenNeuron");
}

TEST(Cli, KlWithRescaling) {
  TempDir tmp;
  write_file(tmp.file("lambda.json"), R"({"1": 0.02})");
  const Result r = run_cli({"kl", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
                            fixture("prior_unit.json"), "--lambda", tmp.file("lambda.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json j = r.parsed();
  EXPECT_GT(j["kl"].get<double>(), 1000.0);
  EXPECT_LT(j["jbar"].get<double>(), 3.0);
  EXPECT_GT(j["j"].get<double>(), j["kl"].get<double>());
}

TEST(Cli, OptimizeChainFixture) {
  TempDir tmp;
  const Result r = run_cli({"optimize", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
                            fixture("prior_unit.json"), "--trace", tmp.file("trace.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json j = r.parsed();
  EXPECT_LE(j["kl_final"].get<double>(), j["kl_initial"].get<double>());
  EXPECT_EQ(j["converged"], true);
  EXPECT_NEAR(j["lambda_star"]["1"].get<double>(), 1.0 / 50.0, 1e-9);

  std::ifstream trace(tmp.file("trace.csv"));
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "sweep,objective");
  double prev = INFINITY;
  int rows = 0;
  while (std::getline(trace, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
    ++rows;
  }
  EXPECT_EQ(rows, j["sweeps"].get<int>() + 1);
}

TEST(Cli, OddEvenScheduleNeedsLayers) {
  const Result r = run_cli({"optimize", "--net", fixture("diamond.json"), "--q", fixture("diamond_q.json"), "--p",
                            fixture("prior_unit.json"), "--schedule", "odd-even"});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("ScheduleMismatch"), std::string::npos);
  const Result ok = run_cli({"optimize", "--net", fixture("layered.json"), "--q", fixture("layered_q.json"), "--p",
                             fixture("prior_unit.json"), "--schedule", "odd-even", "--threads", "2"});
  EXPECT_EQ(ok.code, cli::kOk) << ok.err;
  EXPECT_EQ(ok.parsed()["schedule"], "odd-even");
}

TEST(Cli, MaxSweepsExitCode) {
  const Result r = run_cli({"optimize", "--net", fixture("layered.json"), "--q", fixture("layered_q.json"), "--p",
                            fixture("prior_unit.json"), "--max-sweeps", "1", "--tol", "1e-300"});
  EXPECT_EQ(r.code, cli::kNotConverged);
  EXPECT_EQ(r.parsed()["converged"], false);
}

TEST(Cli, RandomInitReachesSameOptimum) {
  const std::vector<std::string> base{"optimize", "--net", fixture("layered.json"), "--q", fixture("layered_q.json"),
                                      "--p", fixture("prior_unit.json")};
  const json a = run_cli(base).parsed();
  auto args = base;
  args.insert(args.end(), {"--init-seed", "17"});
  const json b = run_cli(args).parsed();
  for (const auto& [k, v] : a["lambda_star"].items()) {
    EXPECT_NEAR(std::log(v.get<double>()), std::log(b["lambda_star"][k].get<double>()), 1e-6);
  }
}

TEST(Cli, BoundRescuesVacuousFixture) {
  TempDir tmp;
  const Result r = run_cli({"bound", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
                            fixture("prior_unit.json"), "--data", fixture("sign_data.json"), "--seed", "3", "--csv",
                            tmp.file("bound.csv"), "--model-id", "chain50"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json j = r.parsed();
  EXPECT_EQ(j["bound_raw"]["vacuous"], true);
  EXPECT_EQ(j["bound_rescaled"]["vacuous"], false);
  EXPECT_LE(j["kl_rescaled"].get<double>(), j["kl_raw"].get<double>());
  EXPECT_LE(j["bound_rescaled"]["value"].get<double>(), j["bound_raw"]["value"].get<double>());
  EXPECT_EQ(j["t_choice"]["mode"], "grid");
  EXPECT_EQ(j["params"]["n"], 200);
  EXPECT_EQ(j["model_id"], "chain50");
  const std::string csv = read_file(tmp.file("bound.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "model_id,kl_raw,kl_rescaled,bound_raw,bound_rescaled,vacuous_raw,vacuous_rescaled");
  EXPECT_NE(csv.find("chain50,"), std::string::npos);
  EXPECT_NE(csv.find(",true,false"), std::string::npos);
}

TEST(Cli, BoundTGridReportsChoiceAndSplit) {
  const Result r = run_cli({"bound", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
                            fixture("prior_unit.json"), "--data", fixture("sign_data.json"), "--t-grid", "1:100:10"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json j = r.parsed();
  EXPECT_EQ(j["t_choice"]["grid"].size(), 10u);
  EXPECT_DOUBLE_EQ(j["t_choice"]["delta_split"].get<double>(), 0.005);
  EXPECT_DOUBLE_EQ(j["bound_rescaled"]["delta_used"].get<double>(), 0.005);
  EXPECT_GE(j["bound_rescaled"]["t"].get<double>(), 1.0);
  const Result fixed = run_cli({"bound", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"),
                                "--p", fixture("prior_unit.json"), "--data", fixture("sign_data.json"), "--t", "20"});
  EXPECT_EQ(fixed.parsed()["bound_raw"]["t"], 20.0);
  EXPECT_EQ(fixed.parsed()["t_choice"]["mode"], "fixed");
}

TEST(Cli, PathLiftDistanceExample) {
  const Result r = run_cli({"path-lift", "--net", fixture("chain_w33.json"), "--distance", fixture("chain_w00.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.parsed()["lifted_l1_distance"], 11.0);
  EXPECT_EQ(r.parsed()["weight_l1_distance"], 6.0);
  const Result phi = run_cli({"path-lift", "--net", fixture("layered.json"), "--phi"});
  ASSERT_EQ(phi.code, cli::kOk);
  // Input paths 2*3*3*1 plus constant paths 3*3*1 + 3*1 + 1.
  EXPECT_EQ(phi.parsed()["path_count"], 18 + 9 + 3 + 1);
  EXPECT_EQ(phi.parsed()["phi"].size(), 31u);
  const Result capped = run_cli({"path-lift", "--net", fixture("layered.json"), "--phi", "--path-cap", "10"});
  EXPECT_EQ(capped.error()["error"]["kind"], "PathExplosion");
}

TEST(Cli, RiskSubcommand) {
  const Result r = run_cli({"risk", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--data",
                            fixture("sign_data.json"), "--mc-samples", "50", "--seed", "4"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const double v = r.parsed()["value"].get<double>();
  EXPECT_GE(v, 0.0);
  EXPECT_LT(v, 0.2);
  EXPECT_EQ(r.parsed()["mc_samples"], 50);
}

TEST(Cli, OutputIsByteIdenticalAcrossRuns) {
  const std::vector<std::vector<std::string>> commands{
      {"validate", "--net", fixture("layered.json")},
      {"forward", "--net", fixture("layered.json"), "--x", "0.3,-1"},
      {"kl", "--net", fixture("layered.json"), "--q", fixture("layered_q.json"), "--p", fixture("prior_unit.json")},
      {"optimize", "--net", fixture("layered.json"), "--q", fixture("layered_q.json"), "--p", fixture("prior_unit.json")},
      {"bound", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--p",
       fixture("prior_unit.json"), "--data", fixture("sign_data.json"), "--seed", "9"},
      {"path-lift", "--net", fixture("layered.json"), "--phi"},
      {"risk", "--net", fixture("chain.json"), "--q", fixture("chain_q_rescaled.json"), "--data",
       fixture("sign_data.json"), "--seed", "9"},
  };
  for (const auto& cmd : commands) {
    const Result a = run_cli(cmd), b = run_cli(cmd);
    EXPECT_EQ(a.code, cli::kOk) << cmd[0] << ": " << a.err;
    EXPECT_EQ(a.out, b.out) << cmd[0];
    EXPECT_FALSE(a.out.empty());
  }
}

}  // namespace
}  // namespace rpac
