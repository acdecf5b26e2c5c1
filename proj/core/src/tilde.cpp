#include "sublin/tilde.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sublin/errors.hpp"

namespace sublin {

namespace {

int substep_count(const DominatedGenerator& gen, double h, double dt) {
  // Stability of the explicit scheme: dtau * max_variance / h^2 <= 1.
  const double ratio = dt * gen.max_variance() / (h * h);
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-12)));
}

void march_in_place(const DominatedGenerator& gen, std::vector<double>& v,
                    std::vector<double>& scratch, double h, double dt) {
  const int substeps = substep_count(gen, h, dt);
  const double dtau = dt / substeps;
  const double inv_h2 = 1.0 / (h * h);
  const int n = static_cast<int>(v.size());
  scratch.resize(v.size());
  for (int m = 0; m < substeps; ++m) {
    scratch[0] = v[0];
    scratch[n - 1] = v[n - 1];
    for (int j = 1; j < n - 1; ++j) {
      scratch[j] = v[j] + dtau * gen.eval((v[j + 1] - 2.0 * v[j] + v[j - 1]) * inv_h2);
    }
    v.swap(scratch);
  }
}

}  // namespace

std::vector<double> tilde_line_step(const DominatedGenerator& gen,
                                    std::span<const double> line, double h, double dt) {
  if (!(h > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("tilde_line_step: h and dt must be > 0");
  }
  if (line.size() < 3) throw std::invalid_argument("tilde_line_step: need at least 3 nodes");
  std::vector<double> v(line.begin(), line.end());
  std::vector<double> scratch;
  march_in_place(gen, v, scratch, h, dt);
  return v;
}

double tilde_local_step(const DominatedGenerator& gen,
                        const std::function<double(double)>& psi, double h, double dt,
                        int pad) {
  const int substeps = substep_count(gen, h, dt);
  if (pad <= substeps) {
    throw ConfigError("tilde_local_step: pad must exceed the sub-step count " +
                      std::to_string(substeps) + " so the frozen edges stay causal");
  }
  std::vector<double> v(2 * pad + 1);
  for (int j = -pad; j <= pad; ++j) v[j + pad] = psi(j * h);
  std::vector<double> scratch;
  march_in_place(gen, v, scratch, h, dt);
  return v[pad];
}

std::vector<std::pair<double, double>> default_domination_probes(
    const DominatedGenerator& gen) {
  std::set<double> pts = {0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0};
  for (double b : gen.breakpoints()) {
    for (double off : {-0.5, -0.125, 0.0, 0.125, 0.5}) pts.insert(b + off);
  }
  std::vector<std::pair<double, double>> probes;
  for (double a : pts) {
    for (double b : pts) {
      if (a != b) probes.emplace_back(a, b);
    }
  }
  return probes;
}

double tilde_conditional_expectation(const DominatedGenerator& gen, const StatePayoff& payoff,
                                     const TimePartition& partition, const StateSpec& spec,
                                     const TildeConfig& cfg) {
  partition.validate();
  const auto probes = default_domination_probes(gen);
  const auto dom = check_domination(gen, probes);
  if (!dom.ok) {
    throw ConfigError("tilde expectation: generator is not dominated: " + dom.first_violation);
  }
  const bool gap_state = spec.coords.size() == 1 &&
                         spec.coords[0].kind == AuxKind::reflected_gap &&
                         !spec.payoff_uses_base;
  const bool base_state = spec.coords.empty() && spec.payoff_uses_base;
  if (!gap_state && !base_state) {
    throw ConfigError(
        "tilde expectation: supported states are the base value and the reflected gap");
  }
  if (cfg.subdiv < 1) throw ConfigError("tilde expectation: subdiv must be >= 1");

  const double sigma_up = gen.band().sigma_upper();
  const double h = sigma_up * std::sqrt(partition.mesh()) / cfg.subdiv;
  const int reach = static_cast<int>(
      std::lround(std::ceil(cfg.trunc_widths * sigma_up * std::sqrt(partition.horizon()) / h)));

  // Retained state values: base x = -reach..reach, gap z = 0..reach.
  const int lo = base_state ? -reach : 0;
  std::vector<double> retained(reach - lo + 1);
  {
    double state[1];
    for (int j = lo; j <= reach; ++j) {
      state[0] = j * h;
      retained[j - lo] = payoff(std::span<const double>(state, 1));
    }
  }

  // Each macro step marches a padded line so that the frozen edges (and, for
  // the gap state, the value fold at zero) stay outside the light cone of the
  // retained region: the explicit stencil advances influence one node per
  // sub-step, so pad = substeps + 1 flat nodes suffice exactly. The gap
  // update max(z - delta, 0) turns into plain translation on the line
  // y -> value(max(y, 0)), because the scheme only reads second differences,
  // which are invariant under the flip delta -> -delta.
  std::vector<double> line, scratch;
  for (int i = partition.steps() - 1; i >= 0; --i) {
    const double dt = partition.dt(i);
    const int pad = substep_count(gen, h, dt) + 1;
    const int n_line = static_cast<int>(retained.size()) + 2 * pad;
    line.resize(n_line);
    for (int j = 0; j < pad; ++j) line[j] = retained.front();
    std::copy(retained.begin(), retained.end(), line.begin() + pad);
    for (int j = 0; j < pad; ++j) line[n_line - 1 - j] = retained.back();
    march_in_place(gen, line, scratch, h, dt);
    std::copy(line.begin() + pad, line.begin() + pad + retained.size(), retained.begin());
  }

  return retained[-lo];  // the start state: x = 0 or z = 0
}

}  // namespace sublin
