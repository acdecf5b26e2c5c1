#include "sublin/product.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sublin/errors.hpp"

namespace sublin {

bool ProductLattice::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ProductCheckDetail& c) { return c.pass; });
}

namespace {

// One-step product expectation at (m, w): max over sigma of the double
// quadrature of f(m', w'), summed j-outer k-inner in fixed order.
template <typename F>
double product_one_step(const F& f, double m, double w, double sqrt_dt,
                        const SigmaSet& sigmas, const IncrementScheme& base,
                        const IncrementScheme& gauss) {
  double best = -std::numeric_limits<double>::infinity();
  for (double sigma : sigmas.levels) {
    double acc = 0.0;
    for (size_t j = 0; j < base.nodes.size(); ++j) {
      const double mn = m + sigma * sqrt_dt * base.nodes[j];
      double inner = 0.0;
      for (size_t k = 0; k < gauss.nodes.size(); ++k) {
        inner += gauss.weights[k] * f(mn, w + sqrt_dt * gauss.nodes[k]);
      }
      acc += base.weights[j] * inner;
    }
    best = std::max(best, acc);
  }
  return best;
}

struct WorstTracker {
  double worst = 0.0;
  int layer = -1;
  double m = 0.0, w = 0.0;

  void feed(double gap, int at_layer, double at_m, double at_w) {
    const double a = std::abs(gap);
    if (a > worst) {
      worst = a;
      layer = at_layer;
      m = at_m;
      w = at_w;
    }
  }

  ProductCheckDetail detail(const std::string& name, double tol) const {
    ProductCheckDetail d;
    d.name = name;
    d.worst_abs = worst;
    d.worst_layer = layer;
    d.worst_m = m;
    d.worst_w = w;
    d.tol = tol;
    d.pass = worst <= tol;
    return d;
  }
};

}  // namespace

ProductLattice product_perturb(const TimePartition& partition, const SigmaSet& sigmas,
                               const IncrementScheme& base_scheme, double eps, int gauss_q,
                               std::span<const double> a_list, double tol) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("product_perturb: eps must lie in (0, 1)");
  }
  partition.validate();
  base_scheme.validate();
  if (sigmas.levels.empty()) throw ConfigError("product_perturb: empty sigma set");

  ProductLattice prod;
  prod.partition = partition;
  prod.sigmas = sigmas;
  prod.base_scheme = base_scheme;
  prod.gauss = IncrementScheme::gauss_quadrature(gauss_q);
  prod.eps = eps;

  const SublinearGenerator gen(
      VolatilityBand{sigmas.levels.front() * sigmas.levels.front(),
                     sigmas.levels.back() * sigmas.levels.back()});

  const int n = partition.steps();

  // Reachable coordinates layer by layer (every sigma choice for M).
  std::vector<double> m_steps, w_steps;
  // The increments differ per layer only through sqrt(dt); enumerate per
  // layer from scratch to keep nonuniform partitions honest.
  std::vector<std::vector<double>> m_layers(n + 1), w_layers(n + 1);
  m_layers[0] = {0.0};
  w_layers[0] = {0.0};
  for (int i = 1; i <= n; ++i) {
    const double s = std::sqrt(partition.dt(i - 1));
    m_steps.clear();
    for (double sigma : sigmas.levels) {
      for (double z : base_scheme.nodes) m_steps.push_back(sigma * s * z);
    }
    w_steps.clear();
    for (double z : prod.gauss.nodes) w_steps.push_back(s * z);
    auto extend = [](const std::vector<double>& prev, const std::vector<double>& inc) {
      std::vector<double> cur;
      cur.reserve(prev.size() * inc.size());
      for (double b : prev) {
        for (double d : inc) cur.push_back(b + d);
      }
      std::sort(cur.begin(), cur.end());
      cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
      return cur;
    };
    m_layers[i] = extend(m_layers[i - 1], m_steps);
    w_layers[i] = extend(w_layers[i - 1], w_steps);
  }

  WorstTracker mart_plus, mart_minus;
  std::vector<WorstTracker> square(a_list.size());
  WorstTracker factor_atan, factor_cos;

  for (int i = 0; i < n; ++i) {
    const double dt = partition.dt(i);
    const double sqrt_dt = std::sqrt(dt);
    for (double m : m_layers[i]) {
      for (double w : w_layers[i]) {
        const double me = m + eps * w;
        const double plus = product_one_step(
            [eps](double mn, double wn) { return mn + eps * wn; }, m, w, sqrt_dt, sigmas,
            base_scheme, prod.gauss);
        mart_plus.feed(plus - me, i, m, w);
        const double minus = product_one_step(
            [eps](double mn, double wn) { return -(mn + eps * wn); }, m, w, sqrt_dt, sigmas,
            base_scheme, prod.gauss);
        mart_minus.feed(minus + me, i, m, w);

        for (size_t ai = 0; ai < a_list.size(); ++ai) {
          const double a = a_list[ai];
          const double val = product_one_step(
              [eps, a](double mn, double wn) {
                const double x = mn + eps * wn;
                return a * x * x;
              },
              m, w, sqrt_dt, sigmas, base_scheme, prod.gauss);
          const double target = a * me * me + 2.0 * gen.eval_epsilon(a, eps) * dt;
          square[ai].feed(val - target, i, m, w);
        }

        // Payoffs blind to W must see exactly the base one-step value.
        const auto base_step = [&](const std::function<double(double)>& f) {
          double best = -std::numeric_limits<double>::infinity();
          for (double sigma : sigmas.levels) {
            double acc = 0.0;
            for (size_t j = 0; j < base_scheme.nodes.size(); ++j) {
              acc += base_scheme.weights[j] * f(m + sigma * sqrt_dt * base_scheme.nodes[j]);
            }
            best = std::max(best, acc);
          }
          return best;
        };
        const double atan_prod = product_one_step(
            [](double mn, double) { return std::atan(mn); }, m, w, sqrt_dt, sigmas,
            base_scheme, prod.gauss);
        factor_atan.feed(atan_prod - base_step([](double x) { return std::atan(x); }), i, m, w);
        const double cos_prod = product_one_step(
            [](double mn, double) { return std::cos(1.3 * mn); }, m, w, sqrt_dt, sigmas,
            base_scheme, prod.gauss);
        factor_cos.feed(cos_prod - base_step([](double x) { return std::cos(1.3 * x); }), i, m,
                        w);
      }
    }
  }

  prod.checks.push_back(mart_plus.detail("martingale(+)", tol));
  prod.checks.push_back(mart_minus.detail("martingale(-)", tol));
  for (size_t ai = 0; ai < a_list.size(); ++ai) {
    prod.checks.push_back(
        square[ai].detail("square_identity(a=" + std::to_string(a_list[ai]) + ")", tol));
  }
  prod.checks.push_back(factor_atan.detail("base_factorization(arctan)", tol));
  prod.checks.push_back(factor_cos.detail("base_factorization(cosine)", tol));
  return prod;
}

}  // namespace sublin
