#include "rpac/pac_bound.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace rpac {

void check_params(const BoundParams& params) {
  if (params.n < 1) throw Error(ErrorKind::InvalidParams, "n must be at least 1");
  if (!(params.loss_bound > 0.0) || !std::isfinite(params.loss_bound)) {
    throw Error(ErrorKind::InvalidParams, "loss bound C must be positive");
  }
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw Error(ErrorKind::InvalidParams, "delta must lie in (0, 1)");
  }
}

double mcallester(double emp_risk, double kl, const BoundParams& params, double t) {
  check_params(params);
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidParams, "t must be positive");
  if (!(kl >= 0.0)) throw Error(ErrorKind::InvalidParams, "kl must be nonnegative");
  if (!std::isfinite(emp_risk)) throw Error(ErrorKind::InvalidParams, "empirical risk must be finite");
  const double n = static_cast<double>(params.n);
  return emp_risk + t * t * params.loss_bound / (8.0 * n) + (kl + std::log(1.0 / params.delta)) / t;
}

GridBound mcallester_grid(double emp_risk, double kl, const BoundParams& params,
                          std::span<const double> t_grid) {
  if (t_grid.empty()) throw Error(ErrorKind::EmptyGrid, "t grid has no points");
  std::vector<double> sorted(t_grid.begin(), t_grid.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::InvalidParams, "t grid entries must be distinct");
  }
  BoundParams split = params;
  split.delta = params.delta / static_cast<double>(t_grid.size());
  GridBound best;
  best.grid_size = t_grid.size();
  best.delta_split = split.delta;
  bool first = true;
  for (double t : t_grid) {
    const double b = mcallester(emp_risk, kl, split, t);
    if (first || b < best.bound) {
      best.t = t;
      best.bound = b;
      first = false;
    }
  }
  return best;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw Error(ErrorKind::EmptyGrid, "grid needs at least one point");
  if (!(lo > 0.0) || !(hi >= lo)) throw Error(ErrorKind::InvalidParams, "grid needs 0 < lo <= hi");
  if (count == 1) return {lo};
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

std::vector<double> default_t_grid(std::size_t n) {
  const double root = std::sqrt(static_cast<double>(n));
  return geometric_grid(root / 10.0, 10.0 * root, 20);
}

int predict_class(std::span<const double> outputs) {
  if (outputs.size() == 1) return outputs[0] > 0.0 ? 1 : 0;
  return static_cast<int>(std::max_element(outputs.begin(), outputs.end()) - outputs.begin());
}

Loss Loss::zero_one() { return Loss(1.0, nullptr); }

Loss Loss::clamped(double bound, Fn fn) {
  if (!(bound > 0.0)) throw Error(ErrorKind::InvalidParams, "loss bound must be positive");
  if (!fn) throw Error(ErrorKind::InvalidParams, "custom loss needs a function");
  return Loss(bound, std::move(fn));
}

double Loss::operator()(std::span<const double> outputs, int label, bool& clamped) const {
  if (!fn_) return predict_class(outputs) == label ? 0.0 : 1.0;
  const double raw = fn_(outputs, label);
  if (!(raw >= 0.0 && raw <= bound_)) {
    clamped = true;
    return std::isnan(raw) ? bound_ : std::clamp(raw, 0.0, bound_);
  }
  return raw;
}

namespace {

void check_dataset(const DagNetwork& net, const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "dataset has no examples");
  if (data.x.size() != data.y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset has " + std::to_string(data.x.size()) + " rows and " +
                                                  std::to_string(data.y.size()) + " labels");
  }
  const int classes = net.outputs().size() == 1 ? 2 : static_cast<int>(net.outputs().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.x[i].size() != net.inputs().size()) {
      throw Error(ErrorKind::DimensionMismatch, "row " + std::to_string(i) + " has " +
                                                    std::to_string(data.x[i].size()) + " features");
    }
    if (data.y[i] < 0 || data.y[i] >= classes) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "label " + std::to_string(data.y[i]) + " of row " + std::to_string(i) + " is not in [0, " +
                      std::to_string(classes) + ")");
    }
  }
}

}  // namespace

std::vector<double> per_draw_risks(const DagNetwork& net, const DiagGaussian& q, const Dataset& data,
                                   const Loss& loss, const RiskOptions& opts, std::size_t* clamp_count) {
  check_dataset(net, data);
  if (opts.mc_samples < 1) throw Error(ErrorKind::InvalidParams, "mc_samples must be at least 1");
  if (q.size() != net.num_edges()) {
    throw Error(ErrorKind::EdgeSetMismatch, "posterior does not match the network's edges");
  }
  std::vector<double> risks(opts.mc_samples, 0.0);
  std::vector<std::size_t> clamps(opts.mc_samples, 0);
  auto run_draw = [&](std::size_t i) {
    const WeightAssignment w = sample_one(q, opts.seed, i);
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const std::vector<double> out = forward(net, w, data.x[k], opts.forward);
      bool clamped = false;
      total += loss(out, data.y[k], clamped);
      clamps[i] += clamped ? 1 : 0;
    }
    risks[i] = total / static_cast<double>(data.size());
  };

  const std::size_t threads = static_cast<std::size_t>(std::max(1, opts.threads));
  if (threads == 1) {
    for (std::size_t i = 0; i < opts.mc_samples; ++i) run_draw(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, opts.mc_samples); ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < opts.mc_samples; i += threads) run_draw(i);
      });
    }
  }
  if (clamp_count) {
    *clamp_count = 0;
    for (std::size_t c : clamps) *clamp_count += c;
  }
  return risks;
}

RiskEstimate mc_empirical_risk(const DagNetwork& net, const DiagGaussian& q, const Dataset& data,
                               const Loss& loss, const RiskOptions& opts) {
  RiskEstimate est;
  const std::vector<double> risks = per_draw_risks(net, q, data, loss, opts, &est.clamp_count);
  double sum = 0.0;
  for (double r : risks) sum += r;
  const double m = static_cast<double>(risks.size());
  est.value = std::clamp(sum / m, 0.0, loss.bound());
  est.mc_samples = risks.size();
  if (risks.size() > 1) {
    double ss = 0.0;
    for (double r : risks) ss += (r - est.value) * (r - est.value);
    est.std_error = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  return est;
}

BoundValue evaluate_bound(double emp_risk, double kl, const BoundParams& params, const TChoice& choice) {
  BoundValue out;
  if (choice.t) {
    out.value = mcallester(emp_risk, kl, params, *choice.t);
    out.t = *choice.t;
    out.delta_used = params.delta;
  } else {
    const GridBound g = mcallester_grid(emp_risk, kl, params, choice.grid);
    out.value = g.bound;
    out.t = g.t;
    out.delta_used = g.delta_split;
  }
  out.vacuous = out.value > params.loss_bound;
  return out;
}

BoundReport make_bound_report(const RiskEstimate& risk, double kl_raw, double kl_rescaled,
                              const BoundParams& params, const TChoice& choice,
                              std::vector<double> lambda_star, std::vector<int> hidden_ids) {
  if (!(kl_rescaled <= kl_raw + 1e-10 * (1.0 + kl_raw))) {
    throw Error(ErrorKind::InvalidParams, "rescaled KL exceeds the raw KL");
  }
  BoundReport r;
  r.empirical_risk = risk;
  r.kl_raw = kl_raw;
  r.kl_rescaled = kl_rescaled;
  r.params = params;
  r.t_choice = choice;
  r.bound_raw = evaluate_bound(risk.value, kl_raw, params, choice);
  r.bound_rescaled = evaluate_bound(risk.value, kl_rescaled, params, choice);
  r.lambda_star = std::move(lambda_star);
  r.hidden_ids = std::move(hidden_ids);
  return r;
}

}  // namespace rpac
