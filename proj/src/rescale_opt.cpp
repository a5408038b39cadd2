#include "rpac/rescale_opt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "rpac/detail/sum.hpp"

namespace rpac {

namespace {

constexpr double kExponentClamp = 700.0;

double clamp_exponent(double x, bool& clamped) {
  if (x > kExponentClamp) {
    clamped = true;
    return kExponentClamp;
  }
  if (x < -kExponentClamp) {
    clamped = true;
    return -kExponentClamp;
  }
  return x;
}

void require_prior(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p) {
  if (p.role() != Role::prior) {
    throw Error(ErrorKind::InvalidDistribution, "the rescaling objective needs a centered prior");
  }
  if (q.size() != net.num_edges() || p.size() != net.num_edges()) {
    throw Error(ErrorKind::EdgeSetMismatch, "distributions do not match the network's edges");
  }
}

void require_sizes(const DagNetwork& net, const SecondMoments& m2, const DiagGaussian& p,
                   std::span<const double> z_hidden) {
  if (m2.m2.size() != net.num_edges() || p.size() != net.num_edges()) {
    throw Error(ErrorKind::EdgeSetMismatch, "moments or prior do not match the network's edges");
  }
  if (z_hidden.size() != net.num_hidden()) {
    throw Error(ErrorKind::DimensionMismatch, "log factors do not match the hidden neurons");
  }
}

// m2_e / sp_e^2 per edge.
std::vector<double> moment_ratios(const SecondMoments& m2, const DiagGaussian& p) {
  std::vector<double> r(m2.m2.size());
  for (std::size_t e = 0; e < r.size(); ++e) {
    const double sp = p.std()[e];
    r[e] = m2.m2[e] / (sp * sp);
  }
  return r;
}

// Prior-side log factor of neuron v, zero off the hidden set.
double log_factor_at(const DagNetwork& net, std::span<const double> z_hidden, int v) {
  const int h = net.hidden_index(v);
  return h < 0 ? 0.0 : z_hidden[static_cast<std::size_t>(h)];
}

struct Coefficients {
  double a = 0.0;
  double c = 0.0;
  bool clamped = false;
};

Coefficients coefficients_at(const DagNetwork& net, std::span<const double> ratio,
                             std::span<const double> z_hidden, int v) {
  Coefficients k;
  detail::CompensatedSum a, c;
  for (std::size_t e : net.out_edges(v)) {
    const double zs = log_factor_at(net, z_hidden, net.edge(e).dst);
    a.add(ratio[e] * std::exp(clamp_exponent(-2.0 * zs, k.clamped)));
  }
  for (std::size_t e : net.in_edges(v)) {
    const double zu = log_factor_at(net, z_hidden, net.edge(e).src);
    c.add(ratio[e] * std::exp(clamp_exponent(2.0 * zu, k.clamped)));
  }
  k.a = a.value();
  k.c = c.value();
  return k;
}

double degree_balance(const DagNetwork& net, int v) {
  return static_cast<double>(net.in_edges(v).size()) - static_cast<double>(net.out_edges(v).size());
}

}  // namespace

std::string_view to_string(Schedule s) noexcept {
  return s == Schedule::cyclic ? "cyclic" : "odd-even";
}

SecondMoments second_moments(const DiagGaussian& q) {
  SecondMoments m;
  m.m2.resize(q.size());
  for (std::size_t e = 0; e < q.size(); ++e) {
    m.m2[e] = q.mean()[e] * q.mean()[e] + q.std()[e] * q.std()[e];
  }
  return m;
}

double objective_j(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                   const RescalingVector& lambda) {
  return kl_diag(q, pushforward_rescaling(net, lambda, p));
}

double objective_jbar(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                      const RescalingVector& lambda) {
  return kl_diag(pushforward_rescaling(net, lambda, q), p);
}

double objective_jbar_log(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                          std::span<const double> z_hidden) {
  require_prior(net, q, p);
  const SecondMoments m2 = second_moments(q);
  require_sizes(net, m2, p, z_hidden);
  detail::CompensatedSum total;
  bool clamped = false;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const Edge& ed = net.edge(e);
    const double t = log_factor_at(net, z_hidden, ed.dst) - log_factor_at(net, z_hidden, ed.src);
    const double sp = p.std()[e];
    total.add(m2.m2[e] * std::exp(clamp_exponent(2.0 * t, clamped)) / (2.0 * sp * sp));
    total.add(-t);
    total.add(std::log(sp) - std::log(q.std()[e]));
    total.add(-0.5);
  }
  return std::max(0.0, total.value());
}

ReducedKl reduce_two_sided(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                           const RescalingVector& lambda, const RescalingVector& lambda_prime) {
  ReducedKl out{0.0, 0.0, compose_rescalings(lambda, lambda_prime)};
  out.two_sided = kl_diag(pushforward_rescaling(net, lambda, q), pushforward_rescaling(net, lambda_prime, p));
  out.one_sided = objective_jbar(net, q, p, out.composed);
  return out;
}

BcdCoefficients bcd_coefficients(const DagNetwork& net, const SecondMoments& m2, const DiagGaussian& p,
                                 const RescalingVector& lambda, int neuron) {
  if (neuron < 0 || static_cast<std::size_t>(neuron) >= net.num_neurons() || !net.is_hidden(neuron)) {
    throw Error(ErrorKind::NonHiddenNeuron, "neuron " + std::to_string(neuron) + " is not hidden");
  }
  const std::vector<double> z = lambda.hidden_log_factors(net);
  require_sizes(net, m2, p, z);
  const std::vector<double> ratio = moment_ratios(m2, p);
  const Coefficients k = coefficients_at(net, ratio, z, neuron);
  return BcdCoefficients{k.a, degree_balance(net, neuron), k.c, k.clamped};
}

double bcd_quadratic_root(double a, double b, double c) {
  if (!(a > 0.0) || !(c > 0.0) || !std::isfinite(a) || !std::isfinite(c) || !std::isfinite(b)) {
    throw Error(ErrorKind::DegenerateCoefficients,
                "need A > 0 and C > 0, got A=" + std::to_string(a) + " C=" + std::to_string(c));
  }
  // X* = sqrt(C/A) * (-k + sqrt(k^2 + 1)) with k = B / (2 sqrt(AC)); the
  // rationalized branch avoids cancellation for k > 0 and nothing overflows.
  const double sa = std::sqrt(a);
  const double sc = std::sqrt(c);
  const double k = b / (2.0 * sa * sc);
  const double h = std::hypot(k, 1.0);
  const double g = k <= 0.0 ? h - k : 1.0 / (k + h);
  return (sc / sa) * g;
}

double bcd_update_neuron(double a, double b, double c) { return std::sqrt(bcd_quadratic_root(a, b, c)); }

double objective_jhat(const DagNetwork& net, const SecondMoments& m2, const DiagGaussian& p,
                      std::span<const double> z_hidden) {
  require_sizes(net, m2, p, z_hidden);
  const EdgeFactorMatrix b = edge_factor_matrix(net);
  detail::CompensatedSum total;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const double t = b.row_dot(e, z_hidden);
    const double sp = p.std()[e];
    total.add(m2.m2[e] / (sp * sp) * std::exp(-2.0 * t));
    total.add(2.0 * t);
  }
  return total.value();
}

std::vector<double> objective_jhat_grad(const DagNetwork& net, const SecondMoments& m2,
                                        const DiagGaussian& p, std::span<const double> z_hidden) {
  require_sizes(net, m2, p, z_hidden);
  const EdgeFactorMatrix b = edge_factor_matrix(net);
  std::vector<detail::CompensatedSum> acc(net.num_hidden());
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const double t = b.row_dot(e, z_hidden);
    const double sp = p.std()[e];
    const double g = -2.0 * m2.m2[e] / (sp * sp) * std::exp(-2.0 * t) + 2.0;
    if (b.plus_col[e] >= 0) acc[static_cast<std::size_t>(b.plus_col[e])].add(g);
    if (b.minus_col[e] >= 0) acc[static_cast<std::size_t>(b.minus_col[e])].add(-g);
  }
  std::vector<double> grad(acc.size());
  for (std::size_t h = 0; h < acc.size(); ++h) grad[h] = acc[h].value();
  return grad;
}

std::optional<Error> check_parity_layering(const DagNetwork& net) {
  for (int v : net.hidden()) {
    if (!net.layer(v)) {
      return Error(ErrorKind::ScheduleMismatch, "hidden neuron " + std::to_string(v) + " has no layer");
    }
  }
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const Edge& ed = net.edge(e);
    if (!net.is_hidden(ed.src) || !net.is_hidden(ed.dst)) continue;
    if ((*net.layer(ed.src) - *net.layer(ed.dst)) % 2 == 0) {
      return Error(ErrorKind::ScheduleMismatch,
                   "edge " + net.edge_key(e) + " joins two hidden neurons of the same layer parity");
    }
  }
  return std::nullopt;
}

BcdRun run_bcd(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p, const BcdOptions& opts) {
  require_prior(net, q, p);
  if (!(opts.tol > 0.0) || opts.max_sweeps < 1) {
    throw Error(ErrorKind::InvalidParams, "tol must be positive and max_sweeps at least 1");
  }

  // Groups of hidden indices updated in sequence. Members of an odd_even group
  // are pairwise non-adjacent, so their updates commute.
  std::vector<std::vector<int>> groups;
  if (opts.schedule == Schedule::odd_even) {
    if (auto err = check_parity_layering(net)) throw *err;
    std::vector<int> odd, even;
    for (std::size_t h = 0; h < net.num_hidden(); ++h) {
      const int layer = *net.layer(net.hidden()[h]);
      (layer % 2 != 0 ? odd : even).push_back(static_cast<int>(h));
    }
    if (!odd.empty()) groups.push_back(std::move(odd));
    if (!even.empty()) groups.push_back(std::move(even));
  } else {
    std::vector<int> order = opts.order;
    if (order.empty()) {
      for (std::size_t h = 0; h < net.num_hidden(); ++h) order.push_back(static_cast<int>(h));
    }
    for (int h : order) {
      if (h < 0 || static_cast<std::size_t>(h) >= net.num_hidden()) {
        throw Error(ErrorKind::InvalidParams, "cyclic order entry " + std::to_string(h) + " is out of range");
      }
      groups.push_back({h});
    }
  }

  const std::vector<double> ratio = moment_ratios(second_moments(q), p);

  // Optimization runs on prior-side log factors z; the posterior-side
  // factors reported to the caller are -z.
  std::vector<double> z(net.num_hidden(), 0.0);
  if (opts.init) {
    z = opts.init->hidden_log_factors(net);
    for (double& x : z) x = -x;
  }
  auto jbar_now = [&] {
    std::vector<double> zbar(z);
    for (double& x : zbar) x = -x;
    return objective_jbar_log(net, q, p, zbar);
  };

  std::atomic<std::size_t> clamp_events{0};
  auto update_one = [&](int h) {
    const int v = net.hidden()[static_cast<std::size_t>(h)];
    const Coefficients k = coefficients_at(net, ratio, z, v);
    if (k.clamped) clamp_events.fetch_add(1, std::memory_order_relaxed);
    const double zn = 0.5 * std::log(bcd_quadratic_root(k.a, degree_balance(net, v), k.c));
    const double step = std::abs(zn - z[static_cast<std::size_t>(h)]);
    z[static_cast<std::size_t>(h)] = zn;
    return step;
  };

  BcdRun run{RescalingVector::identity(net), {}, {}, 0, false, opts.schedule, opts.tol, opts.max_sweeps,
             0.0, kl_diag(q, p), 0.0, 0};
  run.objective_trace.push_back(jbar_now());
  if (opts.trace_updates) run.update_trace.push_back(run.objective_trace.back());

  const int threads = std::max(1, opts.threads);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_step = 0.0;
    for (const std::vector<int>& group : groups) {
      if (threads > 1 && group.size() > 1) {
        std::vector<double> steps(group.size(), 0.0);
        {
          std::vector<std::jthread> pool;
          const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), group.size());
          for (std::size_t t = 0; t < nthreads; ++t) {
            pool.emplace_back([&, t] {
              for (std::size_t i = t; i < group.size(); i += nthreads) steps[i] = update_one(group[i]);
            });
          }
        }
        for (double s : steps) max_step = std::max(max_step, s);
        if (opts.trace_updates) run.update_trace.push_back(jbar_now());
      } else {
        for (int h : group) {
          max_step = std::max(max_step, update_one(h));
          if (opts.trace_updates) run.update_trace.push_back(jbar_now());
        }
      }
    }
    run.objective_trace.push_back(jbar_now());
    run.sweeps_done = sweep + 1;
    run.last_step = max_step;
    if (max_step < opts.tol) {
      run.converged = true;
      break;
    }
  }

  std::vector<double> zbar(z);
  for (double& x : zbar) x = -x;
  run.lambda = RescalingVector::from_log(net, zbar);
  run.kl_final = run.objective_trace.back();
  run.clamp_events = clamp_events.load();
  return run;
}

}  // namespace rpac
