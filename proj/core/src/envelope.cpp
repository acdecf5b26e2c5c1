#include "sublin/envelope.hpp"

#include <cmath>
#include <stdexcept>

namespace sublin {

EstimateWithError mc_estimate(const PathStatistic& f, const ControlPolicy& policy,
                              const TimePartition& partition, const IncrementScheme& scheme,
                              long n_paths, uint64_t seed) {
  if (n_paths < 2) throw std::invalid_argument("mc_estimate: need at least two paths");
  partition.validate();
  scheme.validate();
  const StepPolicy step = policy.as_step_policy();
  SamplePath path;
  double mean = 0.0, m2 = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    PathRng rng(stream_key(seed, static_cast<uint64_t>(p)));
    simulate_into(path, step, partition, scheme, rng, policy.band_lo(), policy.band_hi());
    const double x = f(path);
    const double delta = x - mean;
    mean += delta / static_cast<double>(p + 1);
    m2 += delta * (x - mean);
  }
  EstimateWithError est;
  est.value = mean;
  est.stderr_ = std::sqrt(m2 / static_cast<double>(n_paths - 1)) /
                std::sqrt(static_cast<double>(n_paths));
  est.n_paths = n_paths;
  est.seed = seed;
  return est;
}

ControlPolicy extract_policy(std::shared_ptr<const DpResult> dp, const VolatilityBand& band) {
  return ControlPolicy::from_table(std::move(dp), band);
}

EnvelopeResult sup_over_policies(const PathStatistic& f,
                                 std::span<const ControlPolicy> family,
                                 const TimePartition& partition,
                                 const IncrementScheme& scheme, long n_paths, uint64_t seed) {
  if (family.empty()) {
    throw std::invalid_argument("sup_over_policies: the policy family is empty");
  }
  EnvelopeResult result;
  bool first = true;
  for (const ControlPolicy& policy : family) {
    // Every policy sees the same seed, hence the same increment draws:
    // comparisons between members use common random numbers.
    const EstimateWithError est = mc_estimate(f, policy, partition, scheme, n_paths, seed);
    result.per_policy.push_back({policy.name(), est});
    if (first || est.value > result.best.value) {
      result.best = est;
      result.best_policy = policy.name();
      first = false;
    }
  }
  return result;
}

}  // namespace sublin
