#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rpac/dag_net.hpp"
#include "rpac/gauss.hpp"

namespace rpac {

// Raw second moments E_q[w_e^2] = mean^2 + std^2 of the posterior. These are
// the only posterior statistics the rescaling objective depends on, so any
// posterior with known per-edge second moments could be plugged in here.
struct SecondMoments {
  std::vector<double> m2;
};

SecondMoments second_moments(const DiagGaussian& q);

// J(lambda) = KL(q || lambda#p), prior side rescaled.
double objective_j(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                   const RescalingVector& lambda);

// Jbar(lambda) = KL(lambda#q || p), posterior side rescaled. Jbar(lambda) = J(1/lambda).
double objective_jbar(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                      const RescalingVector& lambda);

// Jbar evaluated directly from posterior-side log factors (hidden-indexed),
// summing edgewise in log space. Agrees with objective_jbar but stays accurate
// when the factors span many decades.
double objective_jbar_log(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                          std::span<const double> z_hidden);

struct ReducedKl {
  double two_sided = 0.0;   // KL(lambda#q || lambda'#p), computed directly
  double one_sided = 0.0;   // Jbar(lambda / lambda')
  RescalingVector composed;
};

ReducedKl reduce_two_sided(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
                           const RescalingVector& lambda, const RescalingVector& lambda_prime);

struct BcdCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  bool clamped = false;
};

// Coefficients of the one-dimensional problem in X = lambda_v^2 for the
// prior-side objective J, with every other factor of `lambda` held fixed:
//
//   A_v = sum_{v->s} m2_e / sp_e^2 / lambda_s^2
//   C_v = sum_{u->v} m2_e / sp_e^2 * lambda_u^2
//   B_v = #in(v) - #out(v)
//
// (sp_e the prior std). For an isotropic prior these are the classical
// coefficients divided by sp^2, which leaves the minimizer unchanged.
BcdCoefficients bcd_coefficients(const DagNetwork& net, const SecondMoments& m2, const DiagGaussian& p,
                                 const RescalingVector& lambda, int neuron);

// Positive root X* of A X^2 + B X - C = 0, the minimizer of A X + C / X + B log X.
double bcd_quadratic_root(double a, double b, double c);

// lambda_v = sqrt(X*). Throws DegenerateCoefficients unless A > 0 and C > 0.
double bcd_update_neuron(double a, double b, double c);

// Normalized reparameterized objective over prior-side log factors z:
//   Jhat(z) = sum_e m2_e / sp_e^2 * exp(-2 <b_e, z>) + 2 <b_e, z>,
// so that J(exp(z)) = Jhat(z) / 2 + const.
double objective_jhat(const DagNetwork& net, const SecondMoments& m2, const DiagGaussian& p,
                      std::span<const double> z_hidden);
std::vector<double> objective_jhat_grad(const DagNetwork& net, const SecondMoments& m2,
                                        const DiagGaussian& p, std::span<const double> z_hidden);

enum class Schedule { cyclic, odd_even };

std::string_view to_string(Schedule s) noexcept;

struct BcdOptions {
  Schedule schedule = Schedule::cyclic;
  double tol = 1e-10;
  int max_sweeps = 10000;
  // Posterior-side starting point; identity when absent.
  std::optional<RescalingVector> init;
  // Cyclic order as hidden indices; topological order when empty.
  std::vector<int> order;
  // Record Jbar after every single-neuron update in addition to every sweep.
  bool trace_updates = false;
  // Worker threads for odd_even half-sweeps.
  int threads = 1;
};

struct BcdRun {
  // Posterior-side minimizer of Jbar; the prior-side minimizer of J is its inverse.
  RescalingVector lambda;
  // Jbar before the first sweep, then after every sweep.
  std::vector<double> objective_trace;
  std::vector<double> update_trace;
  int sweeps_done = 0;
  bool converged = false;
  Schedule schedule = Schedule::cyclic;
  double tol = 0.0;
  int max_sweeps = 0;
  double last_step = 0.0;       // max |dz| over the last sweep
  double kl_initial = 0.0;      // KL(q || p)
  double kl_final = 0.0;        // Jbar(lambda)
  std::size_t clamp_events = 0; // exponent saturations at +-700
};

// Block coordinate descent on Jbar. Throws ScheduleMismatch when odd_even is
// requested on a network without a valid parity layering; a run that hits
// max_sweeps returns its last (best) iterate with converged = false.
BcdRun run_bcd(const DagNetwork& net, const DiagGaussian& q, const DiagGaussian& p,
               const BcdOptions& opts = {});

// Checks the odd_even precondition: every hidden neuron has a layer and no
// edge joins two hidden neurons whose layers have equal parity.
std::optional<Error> check_parity_layering(const DagNetwork& net);

}  // namespace rpac
