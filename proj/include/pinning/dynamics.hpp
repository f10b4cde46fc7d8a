#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "pinning/lattice_path.hpp"
#include "pinning/observables.hpp"
#include "pinning/parallel.hpp"
#include "pinning/pinning_parameter.hpp"
#include "pinning/rng.hpp"

namespace pinning {

// Event-driven heat-bath dynamics. Default scheduler: every interior site
// rings at rate 2; on a ring the height is resampled from the conditional
// equilibrium given the neighbors, thresholding one shared uniform. All
// rates of (2.2)-type dynamics lie in [0,2], so this reproduces them
// exactly, and the shared-threshold rule preserves the monotone couplings
// pathwise (in the initial condition, in lambda, and wall vs. no wall).

enum class Scheduler {
  uniformized_rate2,  // heat-bath with or without wall
  plain_rate1,        // rate-1 corner flips; free dynamics only
};

struct DynamicsConfig {
  int L = 8;
  PinningParameter lambda = PinningParameter::finite(1.0);
  bool walled = true;
  double horizon = 1.0;                 // rescaled time T; microscopic horizon T*L^2
  std::vector<double> snapshot_times;   // rescaled, sorted, within [0, horizon]
  std::vector<double> observable_times; // rescaled; empty -> snapshot grid
  std::uint64_t seed = 0;
  Scheduler scheduler = Scheduler::uniformized_rate2;
  bool record_martingale = false;  // integrate (L A) and F along the run (timed mode)
  bool validate_each_sample = false;  // debug: validate at every sample time
};

struct ObservableSample {
  double t = 0;  // rescaled
  double area = 0;
  double fourier = 0;
  int contacts = 0;
  int min_height = 0;
  double drift_integral = 0;    // int_0^{tL^2} (L A)(eta_s) ds, microscopic time
  double bracket_integral = 0;  // int_0^{tL^2} F(eta_s) ds
};

struct TrajectoryRecord {
  DynamicsConfig config;
  std::vector<std::pair<double, LatticePath>> snapshots;  // (rescaled time, path)
  std::vector<ObservableSample> series;
  std::optional<double> termination_time;  // microscopic hitting time of eta_min
};

namespace detail {

struct StepRule {
  bool walled = true;
  bool lambda_zero = false;
  bool lambda_inf = false;
  std::uint32_t thr_contact = 0;  // accept-high threshold when the low candidate is a contact
};

inline StepRule make_rule(PinningParameter lambda, bool walled) {
  StepRule r;
  r.walled = walled;
  if (!walled) return r;
  if (lambda.is_infinite()) {
    r.lambda_inf = true;
    r.thr_contact = 0;
  } else if (lambda.value() == 0.0) {
    r.lambda_zero = true;
  } else {
    const double p_high = 1.0 / (1.0 + lambda.value());
    r.thr_contact = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(0xffffffffull, static_cast<std::uint64_t>(std::llround(p_high * 4294967296.0))));
  }
  return r;
}

// One ring of site index i (1..2L-1 in the height array). Returns the site's
// new height, applying the shared-uniform heat-bath rule.
inline void apply_ring(std::vector<int>& h, int i, std::uint32_t u, const StepRule& rule, int& zeros) {
  const int hm = h[static_cast<std::size_t>(i) - 1];
  const int hp = h[static_cast<std::size_t>(i) + 1];
  if (hm != hp) return;
  const int lo = hm - 1, hi = hm + 1;
  const int cur = h[static_cast<std::size_t>(i)];
  int next;
  if (rule.walled && lo < 0) {
    next = hi;
  } else if (rule.walled && lo == 0) {
    if (rule.lambda_zero) next = hi;
    else next = (u < rule.thr_contact) ? hi : lo;
  } else {
    next = (u < 0x80000000u) ? hi : lo;
  }
  if (next == cur) return;
  h[static_cast<std::size_t>(i)] = next;
  if (next == 0) ++zeros;
  else if (cur == 0) --zeros;
}

// Deterministic corner flip (rate-1 free dynamics).
inline void apply_corner_flip(std::vector<int>& h, int i, int& zeros) {
  const int hm = h[static_cast<std::size_t>(i) - 1];
  const int hp = h[static_cast<std::size_t>(i) + 1];
  if (hm != hp) return;
  const int cur = h[static_cast<std::size_t>(i)];
  const int next = (cur == hm - 1) ? hm + 1 : hm - 1;
  h[static_cast<std::size_t>(i)] = next;
  if (next == 0) ++zeros;
  else if (cur == 0) --zeros;
}

inline int count_interior_zeros(const std::vector<int>& h) {
  int n = 0;
  for (std::size_t i = 1; i + 1 < h.size(); ++i)
    if (h[i] == 0) ++n;
  return n;
}

// Incrementally maintained generator totals for the martingale integrals.
struct GeneratorTotals {
  std::vector<double> drift_c, bracket_c;  // per-site contributions
  double drift = 0, bracket = 0;
  PinningParameter lambda;
  bool active = false;

  void init(const std::vector<int>& h, PinningParameter lam) {
    lambda = lam;
    active = true;
    const int n = static_cast<int>(h.size());
    drift_c.assign(static_cast<std::size_t>(n), 0.0);
    bracket_c.assign(static_cast<std::size_t>(n), 0.0);
    drift = bracket = 0;
    for (int i = 1; i + 1 < n; ++i) refresh(h, i);
  }

  void refresh(const std::vector<int>& h, int i) {
    drift -= drift_c[static_cast<std::size_t>(i)];
    bracket -= bracket_c[static_cast<std::size_t>(i)];
    const FlipTerm t = site_flip_term(h[static_cast<std::size_t>(i) - 1], h[static_cast<std::size_t>(i)],
                                      h[static_cast<std::size_t>(i) + 1], lambda, true);
    drift_c[static_cast<std::size_t>(i)] = t.rate * t.dA;
    bracket_c[static_cast<std::size_t>(i)] = t.rate * t.dA * t.dA;
    drift += drift_c[static_cast<std::size_t>(i)];
    bracket += bracket_c[static_cast<std::size_t>(i)];
  }

  void on_flip(const std::vector<int>& h, int i) {
    const int n = static_cast<int>(h.size());
    for (int j = std::max(1, i - 1); j <= std::min(n - 2, i + 1); ++j) refresh(h, j);
  }
};

struct SampleView {
  std::size_t index = 0;
  double t_micro = 0;
  const std::vector<int>* heights = nullptr;
  int contacts = 0;
  bool absorbed = false;
  double drift_integral = 0;
  double bracket_integral = 0;
};

struct KernelResult {
  bool absorbed = false;
  double absorption_time = 0;  // microscopic
};

// Batched scheduler: per sample interval draw the Poisson ring count, then
// replay rings keyed by the global ring counter. Exact in law for anything
// observed on the sample grid; event times are never needed.
template <typename OnSample>
KernelResult run_untimed(const DynamicsConfig& cfg, std::vector<int>& h,
                         const std::vector<double>& micro_times, OnSample&& on_sample) {
  const int L = cfg.L;
  const int n_sites = 2 * L - 1;
  const bool plain = cfg.scheduler == Scheduler::plain_rate1;
  const double total_rate = plain ? 1.0 * n_sites : 2.0 * n_sites;
  const StepRule rule = make_rule(cfg.lambda, cfg.walled);
  const bool absorbing = cfg.walled && cfg.lambda.is_infinite();

  const rng::Key clock = rng::stream_key(cfg.seed, rng::Stream::clock);
  int zeros = count_interior_zeros(h);
  std::uint64_t w = 0;
  KernelResult res;
  res.absorbed = absorbing && zeros == L - 1;

  double t_prev = 0;
  for (std::size_t si = 0; si < micro_times.size(); ++si) {
    const double dt = micro_times[si] - t_prev;
    if (dt > 0 && !res.absorbed) {
      rng::CounterEngine eng(rng::stream_key(cfg.seed, rng::Stream::poisson, si));
      std::poisson_distribution<long long> pois(total_rate * dt);
      long long n = pois(eng);
      for (long long j = 0; j < n; ++j) {
        const std::uint64_t r = rng::at(clock, w++);
        const int i = 1 + static_cast<int>(rng::bounded(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(n_sites)));
        if (plain) apply_corner_flip(h, i, zeros);
        else apply_ring(h, i, static_cast<std::uint32_t>(r >> 32), rule, zeros);
        if (absorbing && zeros == L - 1) {
          res.absorbed = true;
          break;
        }
      }
    }
    t_prev = micro_times[si];
    on_sample(SampleView{si, micro_times[si], &h, zeros, res.absorbed, 0, 0});
  }
  return res;
}

// Event-timed scheduler: exponential waiting times, exact event clock;
// needed for hitting times and for the compensator integrals.
template <typename OnSample>
KernelResult run_timed(const DynamicsConfig& cfg, std::vector<int>& h,
                       const std::vector<double>& micro_times, OnSample&& on_sample) {
  const int L = cfg.L;
  const int n_sites = 2 * L - 1;
  const bool plain = cfg.scheduler == Scheduler::plain_rate1;
  const double total_rate = plain ? 1.0 * n_sites : 2.0 * n_sites;
  const StepRule rule = make_rule(cfg.lambda, cfg.walled);
  const bool absorbing = cfg.walled && cfg.lambda.is_infinite();

  const rng::Key clock = rng::stream_key(cfg.seed, rng::Stream::clock);
  const rng::Key times_key = rng::stream_key(cfg.seed, rng::Stream::event_time);

  GeneratorTotals gen;
  if (cfg.record_martingale) gen.init(h, cfg.lambda);

  int zeros = count_interior_zeros(h);
  std::uint64_t w = 0;
  double t_cur = 0;            // time of the last applied event
  double drift_int = 0, bracket_int = 0;
  std::size_t si = 0;
  KernelResult res;
  res.absorbed = absorbing && zeros == L - 1;
  if (res.absorbed) res.absorption_time = 0;

  auto emit_until = [&](double t_limit) {
    while (si < micro_times.size() && micro_times[si] <= t_limit) {
      const double ts = micro_times[si];
      const double di = gen.active ? drift_int + gen.drift * (ts - t_cur) : 0;
      const double bi = gen.active ? bracket_int + gen.bracket * (ts - t_cur) : 0;
      on_sample(SampleView{si, ts, &h, zeros, res.absorbed, di, bi});
      ++si;
    }
  };

  const double t_end = micro_times.empty() ? 0 : micro_times.back();
  while (si < micro_times.size()) {
    if (res.absorbed) {
      emit_until(t_end);
      break;
    }
    const double dt = -std::log(rng::u01_open(rng::at(times_key, w))) / total_rate;
    const double t_next = t_cur + dt;
    emit_until(std::min(t_next, t_end));
    if (si >= micro_times.size()) break;

    // advance integrals to the event, then apply it
    if (gen.active) {
      drift_int += gen.drift * (t_next - t_cur);
      bracket_int += gen.bracket * (t_next - t_cur);
    }
    const std::uint64_t r = rng::at(clock, w);
    const int i = 1 + static_cast<int>(rng::bounded(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(n_sites)));
    const int before = h[static_cast<std::size_t>(i)];
    if (plain) apply_corner_flip(h, i, zeros);
    else apply_ring(h, i, static_cast<std::uint32_t>(r >> 32), rule, zeros);
    if (h[static_cast<std::size_t>(i)] != before && gen.active) gen.on_flip(h, i);
    t_cur = t_next;
    ++w;
    if (absorbing && zeros == L - 1 && !res.absorbed) {
      res.absorbed = true;
      res.absorption_time = t_cur;
    }
  }
  return res;
}

}  // namespace detail

inline void check_config(const DynamicsConfig& cfg) {
  if (cfg.L < 1) throw std::invalid_argument("DynamicsConfig: L >= 1 required");
  if (!(cfg.horizon >= 0)) throw std::invalid_argument("DynamicsConfig: horizon >= 0 required");
  for (double t : cfg.snapshot_times)
    if (t < 0 || t > cfg.horizon + 1e-12)
      throw std::invalid_argument("DynamicsConfig: snapshot times must lie in [0, horizon]");
  if (cfg.scheduler == Scheduler::plain_rate1 && cfg.walled)
    throw std::invalid_argument("DynamicsConfig: plain rate-1 clocks are for the free dynamics only");
  if (cfg.record_martingale && !cfg.walled)
    throw std::invalid_argument("DynamicsConfig: martingale recording needs the walled dynamics");
}

/// Exact-law trajectory of the chain up to the microscopic horizon.
inline TrajectoryRecord simulate(const DynamicsConfig& cfg, const LatticePath& eta0) {
  check_config(cfg);
  const ValidationReport v = validate(eta0);
  if (!v.ok) throw std::invalid_argument("simulate: invalid initial path: " + v.violation);
  if (eta0.half_length != cfg.L) throw std::invalid_argument("simulate: initial path has wrong L");
  if (eta0.walled != cfg.walled) throw std::invalid_argument("simulate: walled flag mismatch");

  const double scale = static_cast<double>(cfg.L) * cfg.L;
  std::vector<double> obs_times = cfg.observable_times.empty() ? cfg.snapshot_times : cfg.observable_times;

  // merged microscopic sample grid (horizon always included)
  std::vector<double> grid;
  for (double t : cfg.snapshot_times) grid.push_back(t * scale);
  for (double t : obs_times) grid.push_back(t * scale);
  grid.push_back(cfg.horizon * scale);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             grid.end());

  // which grid entries are snapshots / observable samples
  auto wants = [&](const std::vector<double>& list, double t_micro) {
    for (double t : list)
      if (std::abs(t * scale - t_micro) < 1e-9) return true;
    return false;
  };

  TrajectoryRecord rec;
  rec.config = cfg;
  std::vector<int> h = eta0.heights;

  std::vector<double> cos_table(static_cast<std::size_t>(2 * cfg.L + 1));
  for (int x = -cfg.L; x <= cfg.L; ++x)
    cos_table[static_cast<std::size_t>(x + cfg.L)] = std::cos(x * std::numbers::pi / (2.0 * cfg.L));

  auto on_sample = [&](const detail::SampleView& s) {
    const double t_rescaled = s.t_micro / scale;
    if (wants(obs_times, s.t_micro)) {
      ObservableSample o;
      o.t = t_rescaled;
      o.contacts = s.contacts;
      LatticePath tmp{cfg.L, *s.heights, cfg.walled};
      o.area = area(tmp);
      double phi = 0;
      int mn = (*s.heights)[0];
      for (std::size_t i = 0; i < s.heights->size(); ++i) {
        phi += cos_table[i] * (*s.heights)[i];
        mn = std::min(mn, (*s.heights)[i]);
      }
      o.fourier = phi;
      o.min_height = mn;
      o.drift_integral = s.drift_integral;
      o.bracket_integral = s.bracket_integral;
      rec.series.push_back(o);
    }
    if (wants(cfg.snapshot_times, s.t_micro))
      rec.snapshots.emplace_back(t_rescaled, LatticePath{cfg.L, *s.heights, cfg.walled});
    if (cfg.validate_each_sample) {
      const ValidationReport r = validate(LatticePath{cfg.L, *s.heights, cfg.walled});
      if (!r.ok) throw std::logic_error("simulate: invariant broken mid-run: " + r.violation);
    }
  };

  const bool timed = cfg.lambda.is_infinite() || cfg.record_martingale;
  detail::KernelResult kr = timed ? detail::run_timed(cfg, h, grid, on_sample)
                                  : detail::run_untimed(cfg, h, grid, on_sample);
  if (kr.absorbed) rec.termination_time = kr.absorption_time;
  return rec;
}

/// Low-level sampling hook: runs the chain and calls
/// fn(sample_index, t_micro, heights, contacts) at each requested
/// microscopic time. Used where full TrajectoryRecords would be wasteful
/// (large ensembles observing a single site).
template <typename Fn>
void run_with_sampler(const DynamicsConfig& cfg, const LatticePath& eta0,
                      const std::vector<double>& micro_times, Fn&& fn) {
  check_config(cfg);
  const ValidationReport v = validate(eta0);
  if (!v.ok) throw std::invalid_argument("run_with_sampler: invalid initial path: " + v.violation);
  if (eta0.half_length != cfg.L || eta0.walled != cfg.walled)
    throw std::invalid_argument("run_with_sampler: initial path incompatible with config");
  std::vector<int> h = eta0.heights;
  auto on_sample = [&](const detail::SampleView& s) {
    fn(s.index, s.t_micro, *s.heights, s.contacts);
  };
  if (cfg.lambda.is_infinite() || cfg.record_martingale)
    detail::run_timed(cfg, h, micro_times, on_sample);
  else
    detail::run_untimed(cfg, h, micro_times, on_sample);
}

/// One run of a shared-randomness coupling.
struct CoupledRun {
  LatticePath eta0;
  PinningParameter lambda = PinningParameter::finite(1.0);
  bool walled = true;
};

/// Drives all runs with one clock/uniform stream (graphical construction);
/// stochastic-domination statements then hold pathwise, not just in law.
inline std::vector<TrajectoryRecord> coupled_simulate(const DynamicsConfig& cfg,
                                                      const std::vector<CoupledRun>& runs) {
  check_config(cfg);
  if (cfg.scheduler != Scheduler::uniformized_rate2)
    throw std::invalid_argument("coupled_simulate: coupling requires the uniformized scheduler");
  if (runs.empty()) return {};
  for (const CoupledRun& r : runs) {
    const ValidationReport v = validate(r.eta0);
    if (!v.ok) throw std::invalid_argument("coupled_simulate: invalid initial path: " + v.violation);
    if (r.eta0.half_length != cfg.L) throw std::invalid_argument("coupled_simulate: mismatched L");
    if (r.eta0.walled != r.walled) throw std::invalid_argument("coupled_simulate: walled flag mismatch");
  }

  const int L = cfg.L;
  const int n_sites = 2 * L - 1;
  const double scale = static_cast<double>(L) * L;
  const rng::Key clock = rng::stream_key(cfg.seed, rng::Stream::clock);
  const rng::Key times_key = rng::stream_key(cfg.seed, rng::Stream::event_time);

  struct State {
    std::vector<int> h;
    detail::StepRule rule;
    int zeros = 0;
    bool absorbing = false;
    bool absorbed = false;
    double absorption_time = 0;
  };
  std::vector<State> st(runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    st[k].h = runs[k].eta0.heights;
    st[k].rule = detail::make_rule(runs[k].lambda, runs[k].walled);
    st[k].zeros = detail::count_interior_zeros(st[k].h);
    st[k].absorbing = runs[k].walled && runs[k].lambda.is_infinite();
    st[k].absorbed = st[k].absorbing && st[k].zeros == L - 1;
  }

  std::vector<double> grid;
  for (double t : cfg.snapshot_times) grid.push_back(t * scale);
  grid.push_back(cfg.horizon * scale);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             grid.end());

  std::vector<TrajectoryRecord> out(runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) out[k].config = cfg;

  auto emit = [&](double t_micro) {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      bool is_snap = false;
      for (double t : cfg.snapshot_times)
        if (std::abs(t * scale - t_micro) < 1e-9) is_snap = true;
      if (is_snap)
        out[k].snapshots.emplace_back(t_micro / scale,
                                      LatticePath{L, st[k].h, runs[k].walled});
    }
  };

  double t_cur = 0;
  std::size_t si = 0;
  std::uint64_t w = 0;
  const double t_end = grid.back();
  while (si < grid.size()) {
    const double dt = -std::log(rng::u01_open(rng::at(times_key, w))) / (2.0 * n_sites);
    const double t_next = t_cur + dt;
    while (si < grid.size() && grid[si] <= std::min(t_next, t_end)) {
      emit(grid[si]);
      ++si;
    }
    if (si >= grid.size()) break;
    const std::uint64_t r = rng::at(clock, w);
    const int i = 1 + static_cast<int>(rng::bounded(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(n_sites)));
    const std::uint32_t u = static_cast<std::uint32_t>(r >> 32);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      if (st[k].absorbed) continue;
      detail::apply_ring(st[k].h, i, u, st[k].rule, st[k].zeros);
      if (st[k].absorbing && st[k].zeros == L - 1) {
        st[k].absorbed = true;
        st[k].absorption_time = t_next;
      }
    }
    t_cur = t_next;
    ++w;
  }
  for (std::size_t k = 0; k < runs.size(); ++k)
    if (st[k].absorbed) out[k].termination_time = st[k].absorption_time;
  return out;
}

struct TerminationSample {
  double t_rescaled = 0;
  bool absorbed = false;  // false: horizon exhausted, flagged
};

/// i.i.d. samples of the rescaled hitting time of eta_min (lambda = inf).
inline std::vector<TerminationSample> termination_time_ensemble(const DynamicsConfig& cfg,
                                                                const LatticePath& eta0,
                                                                int n_seeds, int threads = 1) {
  if (!cfg.lambda.is_infinite() || !cfg.walled)
    throw std::invalid_argument("termination_time_ensemble: walled lambda=inf dynamics required");
  const double a0 = area(eta0) / (static_cast<double>(cfg.L) * cfg.L);
  if (cfg.horizon < a0)
    throw std::invalid_argument("termination_time_ensemble: horizon below a(f0) guard");
  std::vector<TerminationSample> out(static_cast<std::size_t>(n_seeds));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    DynamicsConfig c = cfg;
    c.seed = cfg.seed + i;
    c.snapshot_times.clear();
    c.observable_times.clear();
    TrajectoryRecord rec = simulate(c, eta0);
    if (rec.termination_time) {
      out[i] = {*rec.termination_time / (static_cast<double>(cfg.L) * cfg.L), true};
    } else {
      out[i] = {cfg.horizon, false};
    }
  });
  return out;
}

/// Observable series CSV: (t_rescaled, area_rescaled, fourier_rescaled,
/// contacts, min_height).
inline void write_observables_csv(const TrajectoryRecord& rec, std::ostream& os) {
  const double scale = static_cast<double>(rec.config.L) * rec.config.L;
  os << "t_rescaled,area_rescaled,fourier_rescaled,contacts,min_height\n";
  for (const ObservableSample& s : rec.series)
    os << detail::format_double(s.t) << ',' << detail::format_double(s.area / scale) << ','
       << detail::format_double(s.fourier / scale) << ',' << s.contacts << ',' << s.min_height
       << '\n';
}

}  // namespace pinning
