#include "sublin/pathspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sublin/errors.hpp"

namespace sublin {

double sgn_clamp(double x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("sgn_clamp: eps must be > 0");
  if (x >= eps) return 1.0;
  if (x <= -eps) return -1.0;
  return x / eps;
}

namespace {

// Draw one normalized increment from the scheme's law.
double draw_increment(const IncrementScheme& scheme, PathRng& rng) {
  if (scheme.kind == IncrementScheme::Kind::rademacher) return rng.sign();
  // Inverse CDF over the quadrature weights; the final node absorbs the
  // rounding remainder of the cumulative sum.
  double u = rng.uniform();
  for (size_t k = 0; k + 1 < scheme.weights.size(); ++k) {
    if (u < scheme.weights[k]) return scheme.nodes[k];
    u -= scheme.weights[k];
  }
  return scheme.nodes.back();
}

}  // namespace

void simulate_into(SamplePath& path, const StepPolicy& policy, const TimePartition& partition,
                   const IncrementScheme& scheme, PathRng& rng, double sigma_lo,
                   double sigma_hi) {
  const int n = partition.steps();
  path.partition = partition;
  path.values.resize(n + 1);
  path.policy_trace.resize(n);
  path.values[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = path.values[i];
    const double sigma = policy(i, b);
    if (!(sigma >= sigma_lo - 1e-12 && sigma <= sigma_hi + 1e-12)) {
      throw std::invalid_argument("simulate: policy returned sigma outside the band");
    }
    path.policy_trace[i] = sigma;
    path.values[i + 1] = b + sigma * std::sqrt(partition.dt(i)) * draw_increment(scheme, rng);
  }
}

PathBundle simulate(const StepPolicy& policy, const TimePartition& partition,
                    const IncrementScheme& scheme, uint64_t seed, long n_paths,
                    double sigma_lo, double sigma_hi) {
  partition.validate();
  scheme.validate();
  if (n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
  PathBundle bundle;
  bundle.partition = partition;
  bundle.seed = seed;
  bundle.rng_id = kRngId;
  bundle.scheme_name = scheme.name();
  bundle.paths.resize(n_paths);
  for (long p = 0; p < n_paths; ++p) {
    PathRng rng(stream_key(seed, static_cast<uint64_t>(p)));
    simulate_into(bundle.paths[p], policy, partition, scheme, rng, sigma_lo, sigma_hi);
  }
  return bundle;
}

std::vector<double> ito_sum(std::span<const double> eta, const SamplePath& path) {
  const size_t n = path.values.size() - 1;
  if (eta.size() != n && eta.size() != n + 1) {
    throw std::invalid_argument("ito_sum: integrand needs one value per step");
  }
  std::vector<double> out(n + 1);
  out[0] = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i + 1] = out[i] + eta[i] * (path.values[i + 1] - path.values[i]);
  }
  return out;
}

std::vector<double> quadratic_variation(const SamplePath& path) {
  const size_t n = path.values.size() - 1;
  std::vector<double> out(n + 1);
  out[0] = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = path.values[i + 1] - path.values[i];
    out[i + 1] = out[i] + d * d;
  }
  return out;
}

std::vector<double> mutual_variation(const SamplePath& p1, const SamplePath& p2) {
  if (p1.partition.times != p2.partition.times || p1.values.size() != p2.values.size()) {
    throw std::invalid_argument("mutual_variation: paths must share one partition");
  }
  const size_t n = p1.values.size() - 1;
  std::vector<double> out(n + 1);
  out[0] = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d1 = p1.values[i + 1] - p1.values[i];
    const double d2 = p2.values[i + 1] - p2.values[i];
    const double sum = d1 + d2, diff = d1 - d2;
    out[i + 1] = out[i] + 0.25 * (sum * sum - diff * diff);
  }
  return out;
}

SkorokhodDecomposition skorokhod_map(std::span<const double> x) {
  if (x.empty() || x[0] != 0.0) {
    throw std::invalid_argument("skorokhod_map: input must start at 0");
  }
  SkorokhodDecomposition d;
  d.x.assign(x.begin(), x.end());
  d.y.resize(x.size());
  d.z.resize(x.size());
  double running = 0.0;  // max(0, max_{j<=i} -x_j); starts at 0 since x[0] = 0
  for (size_t i = 0; i < x.size(); ++i) {
    running = std::max(running, -x[i]);
    d.y[i] = running;
    d.z[i] = x[i] + running;
  }
  return d;
}

LocalTimeTrack discrete_local_time(const SamplePath& path, double level, double eps) {
  const size_t n = path.values.size() - 1;
  LocalTimeTrack track;
  track.level = level;
  if (eps <= 0.0) {
    double max_step = 0.0;
    for (size_t i = 0; i < n; ++i) {
      max_step = std::max(max_step, std::abs(path.values[i + 1] - path.values[i]));
    }
    eps = 2.0 * max_step;
    if (eps <= 0.0) eps = 1.0;  // constant path: any window gives occupation 0
  }
  track.occupation_eps = eps;
  track.L.resize(n + 1);
  track.ito.resize(n + 1);
  track.occupation.resize(n + 1);
  track.L[0] = 0.0;
  track.ito[0] = 0.0;
  track.occupation[0] = 0.0;
  const double base = std::abs(level);  // |B_0 - level| with B_0 = 0
  for (size_t i = 0; i < n; ++i) {
    const double b = path.values[i];
    const double d = path.values[i + 1] - path.values[i];
    track.ito[i + 1] = track.ito[i] + sgn_left(b - level) * d;
    track.L[i + 1] = std::abs(path.values[i + 1] - level) - base - track.ito[i + 1];
    track.occupation[i + 1] =
        track.occupation[i] + (std::abs(b - level) < eps ? d * d / (2.0 * eps) : 0.0);
  }
  return track;
}

namespace {

void append_double(std::string& row, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  row.append(buf, end);
}

}  // namespace

void write_bundle_csv(std::ostream& os, const PathBundle& bundle) {
  os << "path_id,t,B,sigma,QV,L\n";
  std::string row;
  for (size_t p = 0; p < bundle.paths.size(); ++p) {
    const SamplePath& path = bundle.paths[p];
    const auto qv = quadratic_variation(path);
    const auto lt = discrete_local_time(path, 0.0);
    const size_t n = path.values.size() - 1;
    for (size_t i = 0; i <= n; ++i) {
      row.clear();
      row += std::to_string(p);
      row += ',';
      append_double(row, path.partition.times[i]);
      row += ',';
      append_double(row, path.values[i]);
      row += ',';
      append_double(row, path.policy_trace.empty() ? 0.0
                                                   : path.policy_trace[std::min(i, n - 1)]);
      row += ',';
      append_double(row, qv[i]);
      row += ',';
      append_double(row, lt.L[i]);
      row += '\n';
      os << row;
    }
  }
}

}  // namespace sublin
