#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rpac/dag_net.hpp"
#include "rpac/gauss.hpp"

namespace rpac {

struct BoundParams {
  std::size_t n = 1;         // training-set size
  double loss_bound = 1.0;   // C, loss values lie in [0, C]
  double delta = 0.05;
};

void check_params(const BoundParams& params);

// emp_risk + t^2 C / (8n) + (kl + log(1/delta)) / t.
double mcallester(double emp_risk, double kl, const BoundParams& params, double t);

struct GridBound {
  double t = 0.0;
  double bound = 0.0;
  double delta_split = 0.0;  // delta / |grid|, the per-point confidence
  std::size_t grid_size = 0;
};

// Union bound over `t_grid`: every point is evaluated at delta / |grid| and
// the smallest bound is returned together with its t. Ties keep the first t.
GridBound mcallester_grid(double emp_risk, double kl, const BoundParams& params,
                          std::span<const double> t_grid);

// `count` points geometrically spaced on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

// 20 geometric points between sqrt(n)/10 and 10 sqrt(n).
std::vector<double> default_t_grid(std::size_t n);

struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
};

// Predicted class: argmax over outputs with ties to the smallest index. A
// network with a single output predicts 1 when the output is positive, else 0.
int predict_class(std::span<const double> outputs);

class Loss {
 public:
  using Fn = std::function<double(std::span<const double> outputs, int label)>;

  static Loss zero_one();
  // Arbitrary loss clamped to [0, bound]; clamps are counted.
  static Loss clamped(double bound, Fn fn);

  double bound() const noexcept { return bound_; }
  bool is_zero_one() const noexcept { return !fn_; }
  // Returns the loss and sets `clamped` when the raw value left [0, bound].
  double operator()(std::span<const double> outputs, int label, bool& clamped) const;

 private:
  Loss(double bound, Fn fn) : bound_(bound), fn_(std::move(fn)) {}
  double bound_;
  Fn fn_;
};

struct RiskEstimate {
  double value = 0.0;
  std::size_t mc_samples = 0;
  double std_error = 0.0;
  std::size_t clamp_count = 0;
};

struct RiskOptions {
  std::size_t mc_samples = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  ForwardOptions forward{};
};

// Dataset-average loss of every Monte-Carlo weight draw (draw i is
// sample_one(q, seed, i)). Results are stored by draw index, so the output
// does not depend on the thread count.
std::vector<double> per_draw_risks(const DagNetwork& net, const DiagGaussian& q, const Dataset& data,
                                   const Loss& loss, const RiskOptions& opts,
                                   std::size_t* clamp_count = nullptr);

RiskEstimate mc_empirical_risk(const DagNetwork& net, const DiagGaussian& q, const Dataset& data,
                               const Loss& loss, const RiskOptions& opts);

// Either a fixed t or a grid searched under a union bound.
struct TChoice {
  std::optional<double> t;
  std::vector<double> grid;
};

struct BoundValue {
  double value = 0.0;
  double t = 0.0;
  double delta_used = 0.0;
  bool vacuous = false;
};

BoundValue evaluate_bound(double emp_risk, double kl, const BoundParams& params, const TChoice& choice);

struct BoundReport {
  RiskEstimate empirical_risk;
  double kl_raw = 0.0;
  double kl_rescaled = 0.0;
  BoundValue bound_raw;
  BoundValue bound_rescaled;
  BoundParams params;
  TChoice t_choice;
  std::vector<double> lambda_star;  // posterior-side factors by hidden index
  std::vector<int> hidden_ids;
};

// Both bounds share the same empirical risk; only the KL term differs.
BoundReport make_bound_report(const RiskEstimate& risk, double kl_raw, double kl_rescaled,
                              const BoundParams& params, const TChoice& choice,
                              std::vector<double> lambda_star, std::vector<int> hidden_ids);

}  // namespace rpac
