#include "sublin/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sublin/errors.hpp"

namespace sublin {

// ---------------------------------------------------------------------------
// Partition and sigma-set plumbing.

TimePartition TimePartition::uniform(double horizon, int steps) {
  if (!(horizon > 0.0)) throw ConfigError("partition: horizon must be > 0");
  if (steps < 1) throw ConfigError("partition: need at least 1 step");
  TimePartition p;
  p.times.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) p.times[i] = horizon * i / steps;
  p.times.back() = horizon;
  return p;
}

double TimePartition::mesh() const {
  double m = 0.0;
  for (int i = 0; i < steps(); ++i) m = std::max(m, dt(i));
  return m;
}

void TimePartition::validate() const {
  if (times.size() < 2) throw ConfigError("partition: need at least two time points");
  if (times.front() != 0.0) throw ConfigError("partition: must start at 0");
  for (size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ConfigError("partition: times must be strictly increasing");
  }
}

SigmaSet SigmaSet::endpoints(const VolatilityBand& band) {
  SigmaSet s;
  s.levels = {band.sigma_lower(), band.sigma_upper()};
  if (band.degenerate()) s.levels = {band.sigma_upper()};
  return s;
}

SigmaSet SigmaSet::refined(const VolatilityBand& band, int k) {
  if (k < 2) throw ConfigError("sigma set: refinement needs k >= 2 levels");
  if (band.degenerate()) return endpoints(band);
  SigmaSet s;
  const double lo = band.sigma_lower(), hi = band.sigma_upper();
  s.levels.resize(k);
  for (int i = 0; i < k; ++i) s.levels[i] = lo + (hi - lo) * i / (k - 1);
  s.levels.front() = lo;
  s.levels.back() = hi;
  return s;
}

void SigmaSet::validate(const VolatilityBand& band) const {
  if (levels.empty()) throw ConfigError("sigma set: must be nonempty");
  for (size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw ConfigError("sigma set: levels must be ascending");
  }
  constexpr double kTol = 1e-12;
  if (std::abs(levels.front() - band.sigma_lower()) > kTol ||
      std::abs(levels.back() - band.sigma_upper()) > kTol) {
    throw ConfigError("sigma set: must contain both band endpoints");
  }
  for (double s : levels) {
    if (s < band.sigma_lower() - kTol || s > band.sigma_upper() + kTol) {
      throw ConfigError("sigma set: level outside the band");
    }
  }
}

double LatticeFunction::interpolate(double x) const {
  const double pos = x / grid.h - grid.lo;
  if (pos <= 0.0) return values.front();
  if (pos >= static_cast<double>(values.size() - 1)) return values.back();
  const int j = static_cast<int>(pos);
  const double frac = pos - j;
  return values[j] + frac * (values[j + 1] - values[j]);
}

// ---------------------------------------------------------------------------
// Move tables: node displacements sigma*sqrt(dt)*z_k / h, detected as exact
// integers where possible.

namespace {

struct Move {
  int base = 0;       // floor of the displacement in nodes (== the node when exact)
  double frac = 0.0;  // interpolation weight toward base + 1
  bool exact = true;
};

struct MoveTable {
  std::vector<std::vector<Move>> moves;  // [sigma][k]
  bool all_exact = true;
  int max_abs = 0;  // largest |displacement| in nodes, rounded up
};

MoveTable build_moves(const SigmaSet& sigmas, const IncrementScheme& scheme, double dt,
                      double h) {
  MoveTable table;
  table.moves.resize(sigmas.levels.size());
  for (size_t s = 0; s < sigmas.levels.size(); ++s) {
    table.moves[s].resize(scheme.nodes.size());
    for (size_t k = 0; k < scheme.nodes.size(); ++k) {
      const double disp = sigmas.levels[s] * std::sqrt(dt) * scheme.nodes[k] / h;
      Move m;
      const double rounded = std::round(disp);
      if (std::abs(disp - rounded) <= 1e-9) {
        m.base = static_cast<int>(rounded);
        m.frac = 0.0;
        m.exact = true;
      } else {
        m.base = static_cast<int>(std::floor(disp));
        m.frac = disp - m.base;
        m.exact = false;
        table.all_exact = false;
      }
      table.max_abs = std::max(table.max_abs, static_cast<int>(std::ceil(std::abs(disp))));
      table.moves[s][k] = m;
    }
  }
  return table;
}

inline double sample_clamped(const double* v, int n, int idx) {
  if (idx < 0) return v[0];
  if (idx >= n) return v[n - 1];
  return v[idx];
}

inline double sample_move(const double* v, int n, int j, const Move& m) {
  const int c = j + m.base;
  if (m.exact) return sample_clamped(v, n, c);
  return (1.0 - m.frac) * sample_clamped(v, n, c) + m.frac * sample_clamped(v, n, c + 1);
}

// out[j] = max over sigma of the weighted child average; ties resolve to the
// smallest sigma so extracted policies are deterministic.
void one_step_kernel(const double* v, double* out, int n, const MoveTable& table,
                     const std::vector<double>& weights, uint8_t* argmax) {
  const int n_sigma = static_cast<int>(table.moves.size());
  const int n_k = static_cast<int>(weights.size());
  for (int j = 0; j < n; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    int best_s = 0;
    for (int s = 0; s < n_sigma; ++s) {
      double acc = 0.0;
      for (int k = 0; k < n_k; ++k) {
        acc += weights[k] * sample_move(v, n, j, table.moves[s][k]);
      }
      if (acc > best) {
        best = acc;
        best_s = s;
      }
    }
    out[j] = best;
    if (argmax) argmax[j] = static_cast<uint8_t>(best_s);
  }
}

double lattice_spacing(const SigmaSet& sigmas, const TimePartition& partition, int subdiv) {
  if (subdiv < 1) throw ConfigError("lattice: subdiv must be >= 1");
  return sigmas.levels.back() * std::sqrt(partition.mesh()) / subdiv;
}

int truncation_nodes(const SigmaSet& sigmas, const TimePartition& partition,
                     const LatticeConfig& cfg, const IncrementScheme& scheme, double h) {
  const double reach = cfg.trunc_widths * sigmas.levels.back() * std::sqrt(partition.horizon());
  const long j = std::lround(std::ceil(reach / h));
  // The walk cannot leave the cone of maximal single-step moves; cap the grid
  // there so tiny step counts get exactly the reachable set.
  double z_max = 0.0;
  for (double z : scheme.nodes) z_max = std::max(z_max, std::abs(z));
  double cone = 0.0;
  for (int i = 0; i < partition.steps(); ++i) {
    cone += sigmas.levels.back() * z_max * std::sqrt(partition.dt(i));
  }
  const long cone_nodes = std::lround(std::ceil(cone / h)) + 1;
  return static_cast<int>(std::min(j, cone_nodes));
}

}  // namespace

LatticeFunction one_step_sublinear(const LatticeFunction& values, double dt,
                                   const SigmaSet& sigmas, const IncrementScheme& scheme,
                                   std::vector<uint8_t>* argmax) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_step_sublinear: dt must be > 0");
  scheme.validate();
  const MoveTable table = build_moves(sigmas, scheme, dt, values.grid.h);
  LatticeFunction out;
  out.grid = values.grid;
  out.values.resize(values.values.size());
  if (argmax) argmax->resize(values.values.size());
  one_step_kernel(values.values.data(), out.values.data(),
                  static_cast<int>(values.values.size()), table, scheme.weights,
                  argmax ? argmax->data() : nullptr);
  return out;
}

LatticeFunction conditional_expectation(const std::function<double(double)>& terminal,
                                        const TimePartition& partition, const SigmaSet& sigmas,
                                        const IncrementScheme& scheme, int stop_index,
                                        const LatticeConfig& cfg) {
  partition.validate();
  scheme.validate();
  const int n = partition.steps();
  if (stop_index < 0 || stop_index > n) {
    throw std::invalid_argument("conditional_expectation: stop index outside [0, steps]");
  }
  const double h = lattice_spacing(sigmas, partition, cfg.subdiv);
  const int reach = truncation_nodes(sigmas, partition, cfg, scheme, h);

  LatticeFunction layer;
  layer.grid = LatticeGrid{h, -reach, reach};
  layer.values.resize(layer.grid.size());
  for (int j = layer.grid.lo; j <= layer.grid.hi; ++j) {
    layer.values[j - layer.grid.lo] = terminal(layer.grid.x(j));
  }

  std::vector<double> next(layer.values.size());
  const double dt0 = partition.dt(0);
  MoveTable table = build_moves(sigmas, scheme, dt0, h);
  double table_dt = dt0;
  for (int i = n - 1; i >= stop_index; --i) {
    if (partition.dt(i) != table_dt) {
      table_dt = partition.dt(i);
      table = build_moves(sigmas, scheme, table_dt, h);
    }
    one_step_kernel(layer.values.data(), next.data(), static_cast<int>(layer.values.size()),
                    table, scheme.weights, nullptr);
    layer.values.swap(next);
  }
  return layer;
}

double lattice_expectation(const std::function<double(double)>& terminal,
                           const TimePartition& partition, const SigmaSet& sigmas,
                           const IncrementScheme& scheme, const LatticeConfig& cfg) {
  return conditional_expectation(terminal, partition, sigmas, scheme, 0, cfg).at_origin();
}

// ---------------------------------------------------------------------------
// State specs.

StateSpec StateSpec::base_only() {
  StateSpec s;
  s.payoff_uses_base = true;
  return s;
}

StateSpec StateSpec::running_max() {
  StateSpec s;
  s.payoff_uses_base = true;
  AuxCoordinate c;
  c.kind = AuxKind::running_max;
  c.name = "running_max";
  c.lipschitz = 1.0;
  s.coords.push_back(std::move(c));
  return s;
}

StateSpec StateSpec::reflected_gap() {
  StateSpec s;
  s.payoff_uses_base = false;
  AuxCoordinate c;
  c.kind = AuxKind::reflected_gap;
  c.name = "reflected_gap";
  c.lipschitz = 1.0;
  s.coords.push_back(std::move(c));
  return s;
}

StateSpec StateSpec::gap_and_max() {
  StateSpec s = reflected_gap();
  AuxCoordinate c;
  c.kind = AuxKind::gap_second_max;
  c.name = "running_max";
  c.lipschitz = 1.0;
  s.coords.push_back(std::move(c));
  return s;
}

StateSpec StateSpec::tanaka(double level) {
  StateSpec s;
  s.payoff_uses_base = true;
  AuxCoordinate c;
  c.kind = AuxKind::tanaka;
  c.name = "local_time";
  c.level = level;
  c.lipschitz = 2.0;
  s.coords.push_back(std::move(c));
  return s;
}

StateSpec StateSpec::signed_sum() {
  StateSpec s;
  s.payoff_uses_base = true;
  AuxCoordinate c;
  c.kind = AuxKind::signed_sum;
  c.name = "signed_sum";
  c.lipschitz = 1.0;
  s.coords.push_back(std::move(c));
  return s;
}

int StateSpec::dims() const {
  bool base_dim = payoff_uses_base;
  for (const auto& c : coords) {
    if (!c.base_free()) base_dim = true;
  }
  return (base_dim ? 1 : 0) + static_cast<int>(coords.size());
}

// ---------------------------------------------------------------------------
// Augmented-state DP engine.

namespace {

inline int sgn_node(long x) { return x > 0 ? 1 : -1; }  // sgn with sgn(0) = -1

struct EngineAxes {
  // axis 0 = base or first aux; axis 1 = aux (2-D only)
  int n0 = 0, n1 = 1;
  int lo0 = 0, lo1 = 0;
  inline int flat(int i0, int i1) const { return i0 * n1 + i1; }
};

// Exact integer-node children for the built-in coordinate kinds. j values are
// node indices relative to the axis origins (base axis: node 0 is the start
// point; aux axes: index 0 is the aux initial).
struct ExactChild {
  AuxKind kind;
  int level_node = 0;  // tanaka threshold in nodes (relative to base origin)

  // Returns the flattened child index for a base-anchored 2-D state.
  inline int base_aux(const EngineAxes& ax, int j0, int j1, int mv) const {
    // j0: base index offset by lo0 (i.e. grid index = j0 + lo0), same for j1.
    const int b = j0 + ax.lo0;
    int bn = b + mv;
    bn = std::clamp(bn, ax.lo0, ax.lo0 + ax.n0 - 1);
    int a = j1 + ax.lo1;
    int an;
    switch (kind) {
      case AuxKind::running_max:
        an = std::max(a, bn);
        break;
      case AuxKind::tanaka: {
        const long d = std::labs(bn - level_node) - std::labs(b - level_node) -
                       sgn_node(b - level_node) * static_cast<long>(bn - b);
        an = a + static_cast<int>(d);
        break;
      }
      case AuxKind::signed_sum:
        an = a + sgn_node(b) * (bn - b);
        break;
      default:
        an = a;
        break;
    }
    an = std::clamp(an, ax.lo1, ax.lo1 + ax.n1 - 1);
    return ax.flat(bn - ax.lo0, an - ax.lo1);
  }
};

// Children of the base-free pair (reflected gap, second-coordinate max).
inline int gap_pair_child(const EngineAxes& ax, int j0, int j1, int mv) {
  // axis 0 = gap z (lo0 == 0), axis 1 = running max s (lo1 == 0).
  int zn = j0 - mv;
  int grow = mv - j0;  // the part of the move that pushes past the gap
  if (zn < 0) zn = 0;
  if (zn > ax.n0 - 1) zn = ax.n0 - 1;
  int sn = j1 + (grow > 0 ? grow : 0);
  if (sn > ax.n1 - 1) sn = ax.n1 - 1;
  return ax.flat(zn, sn);
}

inline int gap_child(int n, int j, int mv) {
  int zn = j - mv;
  if (zn < 0) zn = 0;
  if (zn > n - 1) zn = n - 1;
  return zn;
}

struct RetainGuard {
  static void check(bool on, long layers, long nodes, const char* what, long limit) {
    if (!on) return;
    if (layers * nodes > limit) {
      std::ostringstream os;
      os << "dp_expectation: retaining " << what << " would store " << layers * nodes
         << " entries (limit " << limit << "); reduce steps or grid";
      throw ConfigError(os.str());
    }
  }
};

// Bilinear sample with flat extension, real-valued indices.
inline double sample2_clamped(const double* v, const EngineAxes& ax, double i0, double i1) {
  i0 = std::clamp(i0, 0.0, static_cast<double>(ax.n0 - 1));
  i1 = std::clamp(i1, 0.0, static_cast<double>(ax.n1 - 1));
  const int a = std::min(static_cast<int>(i0), ax.n0 - 2 >= 0 ? ax.n0 - 2 : 0);
  const int b = std::min(static_cast<int>(i1), ax.n1 - 2 >= 0 ? ax.n1 - 2 : 0);
  const double fa = i0 - a;
  const double fb = i1 - b;
  const double v00 = v[ax.flat(a, b)];
  const double v01 = v[ax.flat(a, std::min(b + 1, ax.n1 - 1))];
  const double v10 = v[ax.flat(std::min(a + 1, ax.n0 - 1), b)];
  const double v11 = v[ax.flat(std::min(a + 1, ax.n0 - 1), std::min(b + 1, ax.n1 - 1))];
  return (1 - fa) * ((1 - fb) * v00 + fb * v01) + fa * ((1 - fb) * v10 + fb * v11);
}

}  // namespace

DpResult dp_expectation(const StateSpec& spec, const StatePayoff& payoff,
                        const TimePartition& partition, const SigmaSet& sigmas,
                        const IncrementScheme& scheme, const LatticeConfig& cfg) {
  partition.validate();
  scheme.validate();
  const int n = partition.steps();
  const int dims = spec.dims();
  if (dims < 1 || dims > 2) {
    throw ConfigError("dp_expectation: state dimension " + std::to_string(dims) +
                      " not supported (at most base + one extra coordinate)");
  }
  for (size_t c = 0; c < spec.coords.size(); ++c) {
    if (spec.coords[c].kind == AuxKind::gap_second_max &&
        (c == 0 || spec.coords[0].kind != AuxKind::reflected_gap)) {
      throw ConfigError("dp_expectation: gap_second_max requires reflected_gap as first coordinate");
    }
  }

  const double h = lattice_spacing(sigmas, partition, cfg.subdiv);
  const int reach = truncation_nodes(sigmas, partition, cfg, scheme, h);

  const bool base_free = !spec.payoff_uses_base &&
                         std::all_of(spec.coords.begin(), spec.coords.end(),
                                     [](const AuxCoordinate& c) { return c.base_free(); });
  const bool has_base_axis = !base_free;
  if (!has_base_axis && spec.coords.empty()) {
    throw ConfigError("dp_expectation: empty state");
  }

  // Axis layout. Base axis is symmetric about the start node; aux axes start
  // at their initial value and extend over the same truncated reach.
  DpResult result;
  result.h = h;
  result.sigma_levels = sigmas.levels;
  EngineAxes ax;
  std::vector<const AuxCoordinate*> grid_coords;  // coords with their own axis

  auto axis_range = [&](const AuxCoordinate& c) -> std::pair<int, int> {
    if (c.range_min != c.range_max) {
      return {static_cast<int>(std::floor(c.range_min / h)),
              static_cast<int>(std::ceil(c.range_max / h))};
    }
    switch (c.kind) {
      case AuxKind::running_max:
      case AuxKind::reflected_gap:
      case AuxKind::gap_second_max:
      case AuxKind::tanaka:
        return {0, reach};
      case AuxKind::signed_sum:
        return {-reach, reach};
      default:
        throw ConfigError("dp_expectation: custom coordinate needs an explicit range");
    }
  };

  if (has_base_axis) {
    ax.lo0 = -reach;
    ax.n0 = 2 * reach + 1;
    result.axes.push_back(DpAxis{"base", 0.0, -reach, reach});
    if (!spec.coords.empty()) {
      auto [lo, hi] = axis_range(spec.coords[0]);
      ax.lo1 = lo;
      ax.n1 = hi - lo + 1;
      result.axes.push_back(DpAxis{spec.coords[0].name, 0.0, lo, hi});
      grid_coords.push_back(&spec.coords[0]);
    }
  } else {
    auto [lo0, hi0] = axis_range(spec.coords[0]);
    ax.lo0 = lo0;
    ax.n0 = hi0 - lo0 + 1;
    result.axes.push_back(DpAxis{spec.coords[0].name, 0.0, lo0, hi0});
    grid_coords.push_back(&spec.coords[0]);
    if (spec.coords.size() > 1) {
      auto [lo1, hi1] = axis_range(spec.coords[1]);
      ax.lo1 = lo1;
      ax.n1 = hi1 - lo1 + 1;
      result.axes.push_back(DpAxis{spec.coords[1].name, 0.0, lo1, hi1});
      grid_coords.push_back(&spec.coords[1]);
    }
  }

  const long n_states = static_cast<long>(ax.n0) * ax.n1;
  RetainGuard::check(cfg.retain_policy, n, n_states, "argmax tables", 300'000'000L);
  RetainGuard::check(cfg.retain_values, n + 1, n_states, "value tables", 50'000'000L);

  // Decide the arithmetic mode: exact node moves require every displacement
  // and the tanaka threshold to sit on the grid.
  const double dt0 = partition.dt(0);
  bool exact = true;
  bool uniform_dt = true;
  for (int i = 0; i < n; ++i) uniform_dt = uniform_dt && partition.dt(i) == dt0;
  MoveTable table0 = build_moves(sigmas, scheme, dt0, h);
  exact = table0.all_exact && uniform_dt;
  int level_node = 0;
  for (const auto& c : spec.coords) {
    if (c.kind == AuxKind::custom) exact = false;
    if (c.kind == AuxKind::tanaka) {
      const double ln = c.level / h;
      if (std::abs(ln - std::round(ln)) > 1e-9) {
        exact = false;
      } else {
        level_node = static_cast<int>(std::lround(ln));
      }
    }
  }

  // Terminal layer.
  std::vector<double> v(n_states), next(n_states);
  {
    std::vector<double> state(dims);
    for (int i0 = 0; i0 < ax.n0; ++i0) {
      for (int i1 = 0; i1 < ax.n1; ++i1) {
        int d = 0;
        if (has_base_axis) state[d++] = (i0 + ax.lo0) * h;
        if (!grid_coords.empty()) {
          state[d++] = ((has_base_axis ? i1 + ax.lo1 : i0 + ax.lo0)) * h;
        }
        if (!has_base_axis && grid_coords.size() > 1) state[d++] = (i1 + ax.lo1) * h;
        v[ax.flat(i0, i1)] = payoff(state);
      }
    }
  }

  if (cfg.retain_values) {
    result.layer_values.assign(n + 1, {});
    result.layer_values[n] = v;
  }
  if (cfg.retain_policy) result.argmax.assign(n, {});

  const int n_sigma = sigmas.size();
  const int n_k = scheme.size();
  const auto& weights = scheme.weights;

  MoveTable table = std::move(table0);
  double table_dt = dt0;

  ExactChild child_fn{spec.coords.empty() ? AuxKind::custom : spec.coords[0].kind, level_node};

  for (int i = n - 1; i >= 0; --i) {
    if (partition.dt(i) != table_dt) {
      table_dt = partition.dt(i);
      table = build_moves(sigmas, scheme, table_dt, h);
    }
    uint8_t* argmax_row = nullptr;
    if (cfg.retain_policy) {
      result.argmax[i].resize(n_states);
      argmax_row = result.argmax[i].data();
    }
    const double* vp = v.data();
    double* np = next.data();

    if (dims == 1 && has_base_axis) {
      one_step_kernel(vp, np, ax.n0, table, weights, argmax_row);
    } else if (dims == 1 && exact) {
      // Reflected gap, exact nodes.
      for (int j = 0; j < ax.n0; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        int best_s = 0;
        for (int s = 0; s < n_sigma; ++s) {
          double acc = 0.0;
          for (int k = 0; k < n_k; ++k) {
            acc += weights[k] * vp[gap_child(ax.n0, j, table.moves[s][k].base)];
          }
          if (acc > best) {
            best = acc;
            best_s = s;
          }
        }
        np[j] = best;
        if (argmax_row) argmax_row[j] = static_cast<uint8_t>(best_s);
      }
    } else if (dims == 1) {
      // Reflected gap with interpolated moves.
      for (int j = 0; j < ax.n0; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        int best_s = 0;
        for (int s = 0; s < n_sigma; ++s) {
          double acc = 0.0;
          for (int k = 0; k < n_k; ++k) {
            const Move& m = table.moves[s][k];
            const double zn = std::max(static_cast<double>(j) - (m.base + m.frac), 0.0);
            const int c = std::min(static_cast<int>(zn), ax.n0 - 2 >= 0 ? ax.n0 - 2 : 0);
            const double f = std::min(zn - c, 1.0);
            acc += weights[k] * ((1 - f) * vp[c] + f * vp[std::min(c + 1, ax.n0 - 1)]);
          }
          if (acc > best) {
            best = acc;
            best_s = s;
          }
        }
        np[j] = best;
        if (argmax_row) argmax_row[j] = static_cast<uint8_t>(best_s);
      }
    } else if (exact && has_base_axis) {
      for (int j0 = 0; j0 < ax.n0; ++j0) {
        for (int j1 = 0; j1 < ax.n1; ++j1) {
          double best = -std::numeric_limits<double>::infinity();
          int best_s = 0;
          for (int s = 0; s < n_sigma; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n_k; ++k) {
              acc += weights[k] * vp[child_fn.base_aux(ax, j0, j1, table.moves[s][k].base)];
            }
            if (acc > best) {
              best = acc;
              best_s = s;
            }
          }
          const int f = ax.flat(j0, j1);
          np[f] = best;
          if (argmax_row) argmax_row[f] = static_cast<uint8_t>(best_s);
        }
      }
    } else if (exact && !has_base_axis) {
      for (int j0 = 0; j0 < ax.n0; ++j0) {
        for (int j1 = 0; j1 < ax.n1; ++j1) {
          double best = -std::numeric_limits<double>::infinity();
          int best_s = 0;
          for (int s = 0; s < n_sigma; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n_k; ++k) {
              acc += weights[k] * vp[gap_pair_child(ax, j0, j1, table.moves[s][k].base)];
            }
            if (acc > best) {
              best = acc;
              best_s = s;
            }
          }
          const int f = ax.flat(j0, j1);
          np[f] = best;
          if (argmax_row) argmax_row[f] = static_cast<uint8_t>(best_s);
        }
      }
    } else {
      // Generic real-valued engine with bilinear children; handles custom
      // updates, off-grid moves, and off-grid tanaka thresholds.
      const double sqrt_dt = std::sqrt(partition.dt(i));
      for (int j0 = 0; j0 < ax.n0; ++j0) {
        for (int j1 = 0; j1 < ax.n1; ++j1) {
          const double b = has_base_axis ? (j0 + ax.lo0) * h : 0.0;
          const double a0 = has_base_axis ? (j1 + ax.lo1) * h : (j0 + ax.lo0) * h;
          const double a1 = (!has_base_axis && grid_coords.size() > 1) ? (j1 + ax.lo1) * h : 0.0;
          double best = -std::numeric_limits<double>::infinity();
          int best_s = 0;
          for (int s = 0; s < n_sigma; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n_k; ++k) {
              const double bn = b + sigmas.levels[s] * sqrt_dt * scheme.nodes[k];
              double c0, c1 = 0.0;
              if (has_base_axis) {
                c0 = bn / h - ax.lo0;
                if (!grid_coords.empty()) {
                  const AuxCoordinate& c = *grid_coords[0];
                  double an;
                  switch (c.kind) {
                    case AuxKind::running_max: an = std::max(a0, bn); break;
                    case AuxKind::tanaka:
                      an = a0 + std::abs(bn - c.level) - std::abs(b - c.level) -
                           (b - c.level > 0 ? 1.0 : -1.0) * (bn - b);
                      break;
                    case AuxKind::signed_sum:
                      an = a0 + (b > 0 ? 1.0 : -1.0) * (bn - b);
                      break;
                    default: an = c.update(a0, b, bn); break;
                  }
                  c1 = an / h - ax.lo1;
                }
              } else {
                const double mv = sigmas.levels[s] * sqrt_dt * scheme.nodes[k];
                const double zn = std::max(a0 - mv, 0.0);
                c0 = zn / h - ax.lo0;
                if (grid_coords.size() > 1) {
                  const double sn = a1 + std::max(mv - a0, 0.0);
                  c1 = sn / h - ax.lo1;
                }
              }
              acc += weights[k] * sample2_clamped(vp, ax, c0, c1);
            }
            if (acc > best) {
              best = acc;
              best_s = s;
            }
          }
          const int f = ax.flat(j0, j1);
          np[f] = best;
          if (argmax_row) argmax_row[f] = static_cast<uint8_t>(best_s);
        }
      }
    }

    v.swap(next);
    if (cfg.retain_values) result.layer_values[i] = v;
  }

  // Start state: base node 0, aux at their initial values.
  int i0 = has_base_axis ? -ax.lo0 : static_cast<int>(std::lround(spec.coords[0].initial / h)) - ax.lo0;
  int i1 = 0;
  if (ax.n1 > 1) {
    const AuxCoordinate& c = has_base_axis ? spec.coords[0] : spec.coords[1];
    i1 = static_cast<int>(std::lround(c.initial / h)) - ax.lo1;
  }
  result.value = v[ax.flat(std::clamp(i0, 0, ax.n0 - 1), std::clamp(i1, 0, ax.n1 - 1))];
  return result;
}

// ---------------------------------------------------------------------------
// Exact small-n evaluators.

namespace {

double tree_rec(const PathFunctional& f, const TimePartition& partition, const SigmaSet& sigmas,
                const IncrementScheme& scheme, std::vector<double>& path, size_t i) {
  const size_t n = partition.times.size() - 1;
  if (i == n) return f(path);
  const double sqrt_dt = std::sqrt(partition.dt(static_cast<int>(i)));
  const double b = path[i];
  double best = -std::numeric_limits<double>::infinity();
  for (double sigma : sigmas.levels) {
    double acc = 0.0;
    for (size_t k = 0; k < scheme.nodes.size(); ++k) {
      path[i + 1] = b + sigma * sqrt_dt * scheme.nodes[k];
      acc += scheme.weights[k] * tree_rec(f, partition, sigmas, scheme, path, i + 1);
    }
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace

double tree_conditional(const PathFunctional& f, const TimePartition& partition,
                        const SigmaSet& sigmas, const IncrementScheme& scheme,
                        std::span<const double> prefix) {
  partition.validate();
  scheme.validate();
  if (prefix.empty() || prefix.size() > partition.times.size()) {
    throw std::invalid_argument("tree_conditional: prefix must hold 1..steps+1 values");
  }
  std::vector<double> path(partition.times.size());
  std::copy(prefix.begin(), prefix.end(), path.begin());
  return tree_rec(f, partition, sigmas, scheme, path, prefix.size() - 1);
}

double tree_expectation(const PathFunctional& f, const TimePartition& partition,
                        const SigmaSet& sigmas, const IncrementScheme& scheme) {
  const double start[] = {0.0};
  return tree_conditional(f, partition, sigmas, scheme, start);
}

namespace {

// Policy-evaluation recursion for the brute-force oracle: the policy assigns
// a sigma level to every (step, observed increment history) node; node ids
// enumerate histories in base-Q order, layer by layer.
double policy_value(const PathFunctional& f, const TimePartition& partition,
                    const SigmaSet& sigmas, const IncrementScheme& scheme,
                    const std::vector<uint8_t>& assign, const std::vector<long>& offsets,
                    std::vector<double>& path, size_t i, long hist, double weight) {
  const size_t n = partition.times.size() - 1;
  if (i == n) return weight * f(path);
  const double sigma = sigmas.levels[assign[offsets[i] + hist]];
  const double sqrt_dt = std::sqrt(partition.dt(static_cast<int>(i)));
  const long q = static_cast<long>(scheme.nodes.size());
  double acc = 0.0;
  for (long k = 0; k < q; ++k) {
    path[i + 1] = path[i] + sigma * sqrt_dt * scheme.nodes[k];
    acc += policy_value(f, partition, sigmas, scheme, assign, offsets, path, i + 1,
                        hist * q + k, weight * scheme.weights[k]);
  }
  return acc;
}

}  // namespace

double brute_force_policy_max(const PathFunctional& f, const TimePartition& partition,
                              const SigmaSet& sigmas, const IncrementScheme& scheme) {
  partition.validate();
  scheme.validate();
  const int n = partition.steps();
  const long q = scheme.size();
  const long n_sigma = sigmas.size();

  // Decision nodes: sum over layers of q^i observation histories.
  std::vector<long> offsets(n + 1, 0);
  long nodes = 0, layer = 1;
  for (int i = 0; i < n; ++i) {
    offsets[i] = nodes;
    nodes += layer;
    layer *= q;
  }
  double log_policies = nodes * std::log2(static_cast<double>(n_sigma));
  if (log_policies > 26.0) {
    throw ConfigError("brute_force_policy_max: " + std::to_string(nodes) +
                      " decision nodes make exhaustive enumeration infeasible");
  }

  std::vector<uint8_t> assign(nodes, 0);
  std::vector<double> path(n + 1, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    best = std::max(best, policy_value(f, partition, sigmas, scheme, assign, offsets, path, 0,
                                       0, 1.0));
    // Odometer over the sigma assignment.
    long pos = 0;
    while (pos < nodes) {
      if (++assign[pos] < n_sigma) break;
      assign[pos] = 0;
      ++pos;
    }
    if (pos == nodes) break;
  }
  return best;
}

}  // namespace sublin
