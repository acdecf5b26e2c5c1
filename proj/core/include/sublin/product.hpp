#pragma once

#include <span>
#include <string>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/increments.hpp"
#include "sublin/partition.hpp"

namespace sublin {

// Outcome of one nodewise identity check on the product lattice: the worst
// deviation over every reachable (layer, state) node, with its location.
struct ProductCheckDetail {
  std::string name;
  double worst_abs = 0.0;
  int worst_layer = -1;
  double worst_m = 0.0;  // base-martingale coordinate of the worst node
  double worst_w = 0.0;  // auxiliary Gaussian coordinate of the worst node
  double tol = 0.0;
  bool pass = false;
};

// Product of the base sublinear lattice (driving the symmetric martingale M)
// with an independent Gaussian-quadrature coordinate W, carrying the
// perturbed martingale M + eps * W. Construction enumerates the reachable
// (M, W) states per layer and runs the identity checks nodewise.
struct ProductLattice {
  TimePartition partition;
  SigmaSet sigmas;
  IncrementScheme base_scheme;
  IncrementScheme gauss;
  double eps = 0.0;
  std::vector<ProductCheckDetail> checks;

  bool all_pass() const;
};

// Builds the product lattice and verifies, nodewise over every reachable
// state at every layer:
//   (a) one-step expectation of +-(M + eps W) returns +-(M + eps W) (the
//       perturbed process stays a symmetric martingale);
//   (b) one-step expectation of a*(M' + eps W')^2 minus a*(M + eps W)^2
//       equals 2*(G(a) + eps^2 a / 2)*dt for every a in a_list;
//   (c) a payoff ignoring W gets the same one-step value as on the base
//       lattice alone (the product adds no information about M).
// Checks (a) and (c) are pure floating-point cancellations (tolerance 1e-12);
// check (b) carries the same roundoff plus the quadrature's second-moment
// defect. eps outside (0,1) throws std::invalid_argument.
ProductLattice product_perturb(const TimePartition& partition, const SigmaSet& sigmas,
                               const IncrementScheme& base_scheme, double eps, int gauss_q,
                               std::span<const double> a_list, double tol = 1e-10);

}  // namespace sublin
