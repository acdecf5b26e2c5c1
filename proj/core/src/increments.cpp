#include "sublin/increments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sublin/errors.hpp"

namespace sublin {
namespace {

// Nodes and weights of an orthogonal-polynomial quadrature rule from the
// symmetric tridiagonal Jacobi matrix (Golub-Welsch): nodes are eigenvalues,
// weights are mu0 * (first eigenvector component)^2.
void golub_welsch(const std::vector<double>& offdiag, double mu0,
                  std::vector<double>* nodes, std::vector<double>* weights) {
  const int q = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
  for (int k = 0; k < q - 1; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes->resize(q);
  weights->resize(q);
  for (int k = 0; k < q; ++k) {
    (*nodes)[k] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    (*weights)[k] = mu0 * v0 * v0;
  }
}

}  // namespace

IncrementScheme IncrementScheme::rademacher() {
  IncrementScheme s;
  s.kind = Kind::rademacher;
  s.nodes = {-1.0, 1.0};
  s.weights = {0.5, 0.5};
  return s;
}

IncrementScheme IncrementScheme::gauss_quadrature(int q) {
  if (q < 2) throw ConfigError("gauss quadrature: need at least 2 nodes, got " + std::to_string(q));

  // Hermite weight exp(-x^2): offdiagonal sqrt(k/2), total mass sqrt(pi).
  std::vector<double> offdiag(q - 1);
  for (int k = 1; k < q; ++k) offdiag[k - 1] = std::sqrt(k / 2.0);
  std::vector<double> nodes, weights;
  golub_welsch(offdiag, std::sqrt(M_PI), &nodes, &weights);

  IncrementScheme s;
  s.kind = Kind::gauss;
  s.nodes.resize(q);
  s.weights.resize(q);
  // Map to the standard normal (z = sqrt(2) x, w /= sqrt(pi)) and symmetrize
  // mirrored pairs exactly so that odd-moment identities hold to the last bit.
  for (int k = 0; k < q; ++k) {
    s.nodes[k] = std::sqrt(2.0) * nodes[k];
    s.weights[k] = weights[k] / std::sqrt(M_PI);
  }
  for (int k = 0; k < q / 2; ++k) {
    const int m = q - 1 - k;
    const double z = 0.5 * (s.nodes[m] - s.nodes[k]);
    const double w = 0.5 * (s.weights[m] + s.weights[k]);
    s.nodes[k] = -z;
    s.nodes[m] = z;
    s.weights[k] = w;
    s.weights[m] = w;
  }
  if (q % 2 == 1) s.nodes[q / 2] = 0.0;
  return s;
}

IncrementScheme IncrementScheme::parse(const std::string& text) {
  if (text == "rademacher") return rademacher();
  if (text.rfind("gauss:", 0) == 0) {
    int q = 0;
    try {
      q = std::stoi(text.substr(6));
    } catch (const std::exception&) {
      throw ConfigError("scheme: cannot parse node count in '" + text + "'");
    }
    return gauss_quadrature(q);
  }
  throw ConfigError("scheme: expected 'rademacher' or 'gauss:Q', got '" + text + "'");
}

std::string IncrementScheme::name() const {
  if (kind == Kind::rademacher) return "rademacher";
  return "gauss:" + std::to_string(size());
}

void IncrementScheme::validate() const {
  if (nodes.size() != weights.size() || nodes.empty()) {
    throw ConfigError("increment scheme: nodes and weights must be nonempty and equal-sized");
  }
  double sum = 0.0, second = 0.0;
  for (size_t k = 0; k < nodes.size(); ++k) {
    if (!(weights[k] > 0.0)) {
      throw ConfigError("increment scheme: weights must be positive");
    }
    sum += weights[k];
    second += weights[k] * nodes[k] * nodes[k];
  }
  if (std::abs(sum - 1.0) > 1e-14) {
    std::ostringstream os;
    os << "increment scheme: weights sum to " << sum << ", must be 1 within 1e-14";
    throw ConfigError(os.str());
  }
  for (size_t k = 0; k < nodes.size(); ++k) {
    if (std::abs(nodes[k] + nodes[nodes.size() - 1 - k]) > 1e-12) {
      throw ConfigError("increment scheme: nodes must be symmetric about 0");
    }
  }
  if (std::abs(second - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "increment scheme: second moment is " << second << ", must be 1 within 1e-12";
    throw ConfigError(os.str());
  }
}

LegendreRule LegendreRule::on_interval(double a, double b, int q) {
  if (q < 1) throw ConfigError("legendre rule: need at least 1 node");
  // Legendre weight on [-1, 1]: offdiagonal k / sqrt(4k^2 - 1), mass 2.
  std::vector<double> offdiag(q - 1);
  for (int k = 1; k < q; ++k) offdiag[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  LegendreRule rule;
  golub_welsch(offdiag, 2.0, &rule.nodes, &rule.weights);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int k = 0; k < q; ++k) {
    rule.nodes[k] = mid + half * rule.nodes[k];
    rule.weights[k] *= half;
  }
  return rule;
}

double gauss_expectation(const IncrementScheme& scheme, double mean, double variance,
                         const std::function<double(double)>& f) {
  const double sd = std::sqrt(variance);
  double acc = 0.0;
  for (int k = 0; k < scheme.size(); ++k) {
    acc += scheme.weights[k] * f(mean + sd * scheme.nodes[k]);
  }
  return acc;
}

}  // namespace sublin
