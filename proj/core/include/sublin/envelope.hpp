#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sublin/policy.hpp"

namespace sublin {

// Statistic of one simulated path.
using PathStatistic = std::function<double(const SamplePath&)>;

struct EstimateWithError {
  double value = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(n_paths)
  long n_paths = 0;
  uint64_t seed = 0;
};

// Monte Carlo mean of the statistic under the policy, streaming one path at
// a time (constant memory). The running mean/variance use Welford's update
// in path order, so results are deterministic for a given seed. Every policy
// evaluated with the same seed sees the same increment draws (common random
// numbers), which tightens policy comparisons.
EstimateWithError mc_estimate(const PathStatistic& f, const ControlPolicy& policy,
                              const TimePartition& partition, const IncrementScheme& scheme,
                              long n_paths, uint64_t seed);

// Table policy from a DP run that retained its argmax layers.
ControlPolicy extract_policy(std::shared_ptr<const DpResult> dp, const VolatilityBand& band);

struct PolicyEstimate {
  std::string policy;
  EstimateWithError estimate;
};

struct EnvelopeResult {
  EstimateWithError best;
  std::string best_policy;
  std::vector<PolicyEstimate> per_policy;
};

// Best Monte Carlo estimate over a finite policy family: each member is a
// lower bound for the sublinear expectation, so the max sandwiches the DP
// value from below. Empty family throws std::invalid_argument.
EnvelopeResult sup_over_policies(const PathStatistic& f,
                                 std::span<const ControlPolicy> family,
                                 const TimePartition& partition,
                                 const IncrementScheme& scheme, long n_paths, uint64_t seed);

}  // namespace sublin
