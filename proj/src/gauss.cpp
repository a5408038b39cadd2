#include "rpac/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpac/detail/sum.hpp"
#include "rpac/rng.hpp"

namespace rpac {

DiagGaussian::DiagGaussian(Role role, std::vector<double> mean, std::vector<double> std)
    : role_(role), mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() != std_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "mean and std have different lengths");
  }
  for (std::size_t e = 0; e < std_.size(); ++e) {
    if (!(std_[e] > 0.0) || !std::isfinite(std_[e])) {
      throw Error(ErrorKind::InvalidDistribution, "std of edge " + std::to_string(e) + " must be positive");
    }
    if (!std::isfinite(mean_[e])) {
      throw Error(ErrorKind::InvalidDistribution, "mean of edge " + std::to_string(e) + " is not finite");
    }
  }
}

DiagGaussian DiagGaussian::prior(std::vector<double> std) {
  std::vector<double> mean(std.size(), 0.0);
  return DiagGaussian(Role::prior, std::move(mean), std::move(std));
}

DiagGaussian DiagGaussian::isotropic_prior(std::size_t edges, double std) {
  return prior(std::vector<double>(edges, std));
}

DiagGaussian DiagGaussian::posterior(std::vector<double> mean, std::vector<double> std) {
  return DiagGaussian(Role::posterior, std::move(mean), std::move(std));
}

bool DiagGaussian::is_isotropic() const noexcept {
  return std::adjacent_find(std_.begin(), std_.end(), std::not_equal_to<>()) == std_.end();
}

double kl_diag(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.size() != p.size()) {
    throw Error(ErrorKind::EdgeSetMismatch, "distributions cover " + std::to_string(q.size()) + " and " +
                                                std::to_string(p.size()) + " edges");
  }
  detail::CompensatedSum total;
  for (std::size_t e = 0; e < q.size(); ++e) {
    const double sq = q.std()[e];
    const double sp = p.std()[e];
    const double dm = q.mean()[e] - p.mean()[e];
    total.add((sq * sq + dm * dm) / (2.0 * sp * sp));
    total.add(std::log(sp) - std::log(sq));
    total.add(-0.5);
  }
  return std::max(0.0, total.value());
}

DiagGaussian pushforward_rescaling(const DagNetwork& net, const RescalingVector& lambda,
                                   const DiagGaussian& d) {
  if (d.size() != net.num_edges()) {
    throw Error(ErrorKind::EdgeSetMismatch, "distribution does not match the network's edges");
  }
  std::vector<double> mean(d.mean().begin(), d.mean().end());
  std::vector<double> std(d.std().begin(), d.std().end());
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const double f = std::exp(lambda.edge_log_factor(net, e));
    mean[e] *= f;
    std[e] *= f;
  }
  if (d.role() == Role::prior) return DiagGaussian::prior(std::move(std));
  return DiagGaussian::posterior(std::move(mean), std::move(std));
}

WeightAssignment sample_one(const DiagGaussian& d, std::uint64_t seed, std::uint64_t draw) {
  const CounterNormal rng(seed);
  WeightAssignment w;
  w.values.resize(d.size());
  for (std::size_t e = 0; e < d.size(); ++e) {
    w.values[e] = d.mean()[e] + d.std()[e] * rng.normal(draw, e);
  }
  return w;
}

std::vector<WeightAssignment> sample(const DiagGaussian& d, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorKind::InvalidParams, "sample count must be at least 1");
  std::vector<WeightAssignment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_one(d, seed, i));
  return out;
}

}  // namespace rpac
