#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpac/dag_net.hpp"

namespace rpac {

enum class Role { prior, posterior };

// Diagonal Gaussian over the edge weights of a network (indexed by edge).
//
// Priors are centered by construction: the only way to obtain one is through
// the prior builders, which take no mean.
class DiagGaussian {
 public:
  static DiagGaussian prior(std::vector<double> std);
  static DiagGaussian isotropic_prior(std::size_t edges, double std);
  static DiagGaussian posterior(std::vector<double> mean, std::vector<double> std);

  Role role() const noexcept { return role_; }
  std::size_t size() const noexcept { return std_.size(); }
  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> std() const noexcept { return std_; }

  // True when every coordinate shares the same standard deviation.
  bool is_isotropic() const noexcept;

 private:
  DiagGaussian(Role role, std::vector<double> mean, std::vector<double> std);

  Role role_;
  std::vector<double> mean_;
  std::vector<double> std_;
};

// Closed-form KL(q || p) in nats, summed edgewise with the log-ratio of
// standard deviations taken as log(std_p) - log(std_q).
double kl_diag(const DiagGaussian& q, const DiagGaussian& p);

// Law of apply_rescaling(lambda, w) for w ~ d: mean and std of every edge are
// multiplied by lambda_dst / lambda_src.
DiagGaussian pushforward_rescaling(const DagNetwork& net, const RescalingVector& lambda,
                                   const DiagGaussian& d);

// Draw `draw` of `d` under `seed`; edge e uses the standard normal variate
// CounterNormal(seed).normal(draw, e).
WeightAssignment sample_one(const DiagGaussian& d, std::uint64_t seed, std::uint64_t draw);

std::vector<WeightAssignment> sample(const DiagGaussian& d, std::size_t count, std::uint64_t seed);

}  // namespace rpac
