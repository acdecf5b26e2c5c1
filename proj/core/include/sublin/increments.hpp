#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sublin {

// Normalized one-step increment distribution: a random variable zeta with
// mean 0 and unit variance, given either by the two-point symmetric law
// (Rademacher) or by a Gauss quadrature discretization of the standard normal.
// Simulation draws zeta from the underlying law; lattice operators average
// over the (nodes, weights) pairs.
struct IncrementScheme {
  enum class Kind { rademacher, gauss };

  Kind kind = Kind::rademacher;
  std::vector<double> nodes;    // ascending, symmetric about 0
  std::vector<double> weights;  // positive, sum to 1

  static IncrementScheme rademacher();
  // Q-point Gauss quadrature of the standard normal (Hermite nodes mapped by
  // sqrt(2)); nodes are exactly symmetrized so odd moments vanish identically.
  static IncrementScheme gauss_quadrature(int q);

  // Parses "rademacher" or "gauss:Q"; throws ConfigError on anything else.
  static IncrementScheme parse(const std::string& text);

  int size() const { return static_cast<int>(nodes.size()); }
  std::string name() const;

  // Enforces the scheme contract: positive weights summing to 1 within 1e-14,
  // symmetric nodes, second moment 1 within 1e-12. Throws ConfigError.
  void validate() const;
};

// Gauss-Legendre rule on [a, b] (nodes, weights); used by closed-form
// oracles that integrate explicit densities.
struct LegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  static LegendreRule on_interval(double a, double b, int q);
};

// E[f(mean + sqrt(variance) * Z)] for standard normal Z, via the scheme's
// quadrature (intended for gauss_quadrature schemes with large Q); the
// closed-form oracle for classical-diffusion values.
double gauss_expectation(const IncrementScheme& scheme, double mean, double variance,
                         const std::function<double(double)>& f);

}  // namespace sublin
