#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "pinning/dynamics.hpp"
#include "pinning/equilibrium.hpp"
#include "pinning/observables.hpp"
#include "pinning/parallel.hpp"
#include "pinning/shapes.hpp"

using namespace pinning;

namespace {
const Profile& cosine_profile() {
  static const Profile f0 = make_profile("cosine", 2048);
  return f0;
}
}  // namespace

TEST_CASE("flip rates follow the heat-bath table", "[dynamics]") {
  // contact-creating crest and contact-removing valley
  const LatticePath crest{2, {0, 1, 2, 1, 0}, true};
  const LatticePath valley = eta_min(2);
  CHECK(flip_rate(crest, 0, PinningParameter::finite(3.0)) == Catch::Approx(1.5));
  CHECK(flip_rate(valley, 0, PinningParameter::finite(3.0)) == Catch::Approx(0.5));
  CHECK(flip_rate(valley, 0, PinningParameter::infinite()) == 0.0);
  CHECK(flip_rate(crest, 0, PinningParameter::infinite()) == Catch::Approx(2.0));
  CHECK(flip_rate(crest, 1, PinningParameter::finite(1.0)) == 0.0);  // not an extremum
  CHECK(flip_rate(valley, 1, PinningParameter::finite(1.0)) == 0.0); // through the wall
  CHECK_THROWS_AS(flip_rate(crest, 2, PinningParameter::finite(1.0)), std::out_of_range);

  const LatticePath free_path{2, {0, -1, 0, 1, 0}, false};
  CHECK(flip_rate(free_path, -1, PinningParameter::finite(7.0)) == 1.0);
}

TEST_CASE("starting at eta_min under lambda=inf is absorbing", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 6;
  cfg.lambda = PinningParameter::infinite();
  cfg.horizon = 0.5;
  cfg.snapshot_times = {0.1, 0.3, 0.5};
  const TrajectoryRecord rec = simulate(cfg, eta_min(6));
  REQUIRE(rec.termination_time.has_value());
  CHECK(*rec.termination_time == 0.0);
  for (const auto& [t, p] : rec.snapshots) CHECK(p.heights == eta_min(6).heights);
}

TEST_CASE("every event preserves path validity", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 16;
  cfg.lambda = PinningParameter::finite(1.3);
  cfg.horizon = 0.8;
  cfg.validate_each_sample = true;
  for (double t = 0.002; t < 0.8; t += 0.002) cfg.snapshot_times.push_back(t);
  cfg.seed = 5;
  CHECK_NOTHROW(simulate(cfg, discretize(cosine_profile(), 16, true)));
}

TEST_CASE("under lambda=inf the zero set only grows", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 24;
  cfg.lambda = PinningParameter::infinite();
  cfg.horizon = 1.2;
  for (double t = 0.01; t <= 1.2; t += 0.01) cfg.snapshot_times.push_back(t);
  cfg.seed = 11;
  const TrajectoryRecord rec = simulate(cfg, discretize(cosine_profile(), 24, true));
  std::set<int> zeros;
  for (const auto& [t, p] : rec.snapshots) {
    std::set<int> now;
    for (int x = -23; x < 24; ++x)
      if (p.at(x) == 0) now.insert(x);
    for (int z : zeros) CHECK(now.count(z) == 1);
    zeros = now;
  }
}

TEST_CASE("lambda=0 never creates a contact", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 16;
  cfg.lambda = PinningParameter::finite(0.0);
  cfg.horizon = 2.0;
  for (double t = 0.05; t <= 2.0; t += 0.05) cfg.snapshot_times.push_back(t);
  cfg.seed = 3;
  const Profile tent = Profile::sampled(-1, 1, 128, [](double x) { return 1.0 - std::abs(x); });
  const TrajectoryRecord rec = simulate(cfg, discretize(tent, 16, true));
  for (const auto& [t, p] : rec.snapshots) CHECK(contacts(p) == 0);
}

TEST_CASE("fixed seed means identical trajectories", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 20;
  cfg.lambda = PinningParameter::finite(1.7);
  cfg.horizon = 0.6;
  cfg.snapshot_times = {0.2, 0.4, 0.6};
  cfg.observable_times = {0.1, 0.3, 0.5};
  cfg.seed = 99;
  const LatticePath eta0 = discretize(cosine_profile(), 20, true);
  const TrajectoryRecord a = simulate(cfg, eta0);
  const TrajectoryRecord b = simulate(cfg, eta0);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    CHECK(a.snapshots[i].second.heights == b.snapshots[i].second.heights);
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].area == b.series[i].area);
    CHECK(a.series[i].fourier == b.series[i].fourier);
  }
}

TEST_CASE("plain rate-1 clocks reject walls and run the free dynamics", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 12;
  cfg.scheduler = Scheduler::plain_rate1;
  cfg.walled = true;
  cfg.horizon = 0.1;
  CHECK_THROWS_AS(simulate(cfg, eta_min(12)), std::invalid_argument);
  cfg.walled = false;
  cfg.snapshot_times = {0.1};
  cfg.seed = 4;
  LatticePath eta0 = eta_min(12);
  eta0.walled = false;
  const TrajectoryRecord rec = simulate(cfg, eta0);
  CHECK(validate(rec.snapshots[0].second).ok);
}

TEST_CASE("coupled runs: ordered data and ordered lambda stay ordered", "[dynamics]") {
  const int L = 24;
  DynamicsConfig cfg;
  cfg.L = L;
  cfg.horizon = 1.0;
  for (double t = 0.1; t <= 1.0; t += 0.1) cfg.snapshot_times.push_back(t);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    LatticePath a = equilibrium_sample(L, 1.0, 2 * seed);
    LatticePath b = equilibrium_sample(L, 1.0, 2 * seed + 1);
    LatticePath hi = a, lo = b;
    for (int i = 0; i < hi.size(); ++i) {
      hi.heights[i] = std::max(a.heights[i], b.heights[i]);
      lo.heights[i] = std::min(a.heights[i], b.heights[i]);
    }
    const auto recs = coupled_simulate(
        cfg, {{hi, PinningParameter::finite(0.5), true}, {lo, PinningParameter::finite(2.0), true}});
    for (std::size_t j = 0; j < recs[0].snapshots.size(); ++j)
      for (int i = 0; i < 2 * L + 1; ++i)
        CHECK(recs[0].snapshots[j].second.heights[i] >= recs[1].snapshots[j].second.heights[i]);
  }
}

TEST_CASE("coupled runs: identical inputs give identical trajectories", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 16;
  cfg.horizon = 0.5;
  cfg.snapshot_times = {0.25, 0.5};
  cfg.seed = 13;
  const LatticePath eta0 = discretize(cosine_profile(), 16, true);
  const auto recs = coupled_simulate(cfg, {{eta0, PinningParameter::finite(1.0), true},
                                           {eta0, PinningParameter::finite(1.0), true}});
  for (std::size_t j = 0; j < recs[0].snapshots.size(); ++j)
    CHECK(recs[0].snapshots[j].second.heights == recs[1].snapshots[j].second.heights);
}

TEST_CASE("walled lambda=1 dominates the free dynamics", "[dynamics]") {
  const int L = 20;
  DynamicsConfig cfg;
  cfg.L = L;
  cfg.horizon = 1.0;
  for (double t = 0.1; t <= 1.0; t += 0.1) cfg.snapshot_times.push_back(t);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = 1000 + seed;
    LatticePath walled = equilibrium_sample(L, 1.0, seed);
    LatticePath free_start = walled;
    free_start.walled = false;
    const auto recs = coupled_simulate(cfg, {{walled, PinningParameter::finite(1.0), true},
                                             {free_start, PinningParameter::finite(1.0), false}});
    for (std::size_t j = 0; j < recs[0].snapshots.size(); ++j)
      for (int i = 0; i < 2 * L + 1; ++i)
        CHECK(recs[0].snapshots[j].second.heights[i] >= recs[1].snapshots[j].second.heights[i]);
  }
}

TEST_CASE("small-scale exactness: L=2 occupation matches pi", "[dynamics]") {
  const double lambda = 2.0;
  const int n = 100000;
  std::vector<int> hits(n, 0);
  parallel_for(n, 2, [&](std::size_t i) {
    DynamicsConfig cfg;
    cfg.L = 2;
    cfg.lambda = PinningParameter::finite(lambda);
    cfg.horizon = 1.5;  // microscopic time 6, far past mixing
    cfg.seed = 50000 + i;
    std::vector<double> one{6.0};
    run_with_sampler(cfg, eta_min(2), one,
                     [&](std::size_t, double, const std::vector<int>& h, int) {
                       if (h[2] == 0) hits[i] = 1;  // UDUD has a zero at the midpoint
                     });
  });
  int c = 0;
  for (int v : hits) c += v;
  const double p = lambda / (1.0 + lambda);
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(double(c) / n - p) <= 3.0 * sigma);
}

TEST_CASE("termination times from eta_min are zero", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 8;
  cfg.lambda = PinningParameter::infinite();
  cfg.horizon = 3.0;
  const auto samples = termination_time_ensemble(cfg, eta_min(8), 10);
  for (const auto& s : samples) {
    CHECK(s.absorbed);
    CHECK(s.t_rescaled == 0.0);
  }
}

TEST_CASE("termination guard rejects short horizons", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 32;
  cfg.lambda = PinningParameter::infinite();
  cfg.horizon = 0.3;  // below a(f0) ~ 0.81
  const LatticePath eta0 = discretize(cosine_profile(), 32, true);
  CHECK_THROWS_AS(termination_time_ensemble(cfg, eta0, 4), std::invalid_argument);
}

TEST_CASE("mean rescaled termination time approaches half the area", "[dynamics]") {
  DynamicsConfig cfg;
  cfg.L = 128;
  cfg.lambda = PinningParameter::infinite();
  cfg.horizon = 1.0;
  cfg.seed = 1;
  const LatticePath eta0 = discretize(cosine_profile(), 128, true);
  const auto samples = termination_time_ensemble(cfg, eta0, 50, 2);
  std::vector<double> vals;
  for (const auto& s : samples) {
    REQUIRE(s.absorbed);
    CHECK(s.t_rescaled >= 0.0);
    vals.push_back(s.t_rescaled);
  }
  const double target = 4.0 / (std::numbers::pi * std::numbers::pi);
  CHECK(std::abs(testers::mean(vals) - target) <= 0.10 * target);
}

TEST_CASE("area decays at the drift rate from a single excursion", "[dynamics]") {
  const int L = 64, n_seeds = 100;
  const LatticePath eta0 = discretize(cosine_profile(), L, true);
  std::vector<double> slopes(n_seeds);
  parallel_for(n_seeds, 2, [&](std::size_t s) {
    DynamicsConfig cfg;
    cfg.L = L;
    cfg.lambda = PinningParameter::infinite();
    cfg.horizon = 0.1;
    cfg.observable_times = {0.1};
    cfg.seed = 100 + s;
    const TrajectoryRecord rec = simulate(cfg, eta0);
    slopes[s] = (rec.series[0].area - area(eta0)) / (double(L) * L) / 0.1;
  });
  const double m = testers::mean(slopes);
  CHECK(m >= -2.5);
  CHECK(m <= -1.5);
}

TEST_CASE("compensated area is a mean-zero martingale with the stated bracket", "[dynamics]") {
  const int L = 64, n_seeds = 100;
  const LatticePath eta0 = discretize(cosine_profile(), L, true);
  std::vector<double> m_end(n_seeds), qv_ratio(n_seeds), m_max(n_seeds);
  parallel_for(n_seeds, 2, [&](std::size_t s) {
    DynamicsConfig cfg;
    cfg.L = L;
    cfg.lambda = PinningParameter::infinite();
    cfg.horizon = 1.0;  // microscopic horizon L^2
    cfg.record_martingale = true;
    for (double t = 1.0 / 256; t <= 1.0; t += 1.0 / 256) cfg.observable_times.push_back(t);
    cfg.seed = 777 + s;
    const TrajectoryRecord rec = simulate(cfg, eta0);
    std::vector<double> t, a, d;
    double bracket_end = 0;
    for (const ObservableSample& o : rec.series) {
      t.push_back(o.t);
      a.push_back(o.area);
      d.push_back(o.drift_integral);
      bracket_end = o.bracket_integral;
    }
    // series starts after t=0; prepend the initial state
    t.insert(t.begin(), 0.0);
    a.insert(a.begin(), area(eta0));
    d.insert(d.begin(), 0.0);
    const MartingaleSeries ms = martingale_residual(t, a, d);
    m_end[s] = ms.m.back();
    m_max[s] = ms.max_abs;
    qv_ratio[s] = bracket_end > 0 ? ms.quadratic_variation / bracket_end : 1.0;
  });
  const double m = testers::mean(m_end);
  const double se = testers::stderr_of_mean(m_end);
  CHECK(std::abs(m) <= 3.0 * se);

  const double qv = testers::mean(qv_ratio);
  CHECK(qv >= 0.7);
  CHECK(qv <= 1.4);

  const double bound = std::pow(double(L), 1.75);
  int ok = 0;
  for (double v : m_max)
    if (v <= bound) ++ok;
  CHECK(ok >= static_cast<int>(0.95 * n_seeds));
}

TEST_CASE("fourier observable decays at rate kappa_L microscopically", "[dynamics]") {
  const int L = 64, n_seeds = 100;
  const LatticePath eta0 = discretize(cosine_profile(), L, true);
  const double phi0 = fourier(eta0);
  const double decay = std::exp(-kappa(L) * double(L) * L);
  std::vector<double> gap(n_seeds);
  parallel_for(n_seeds, 2, [&](std::size_t s) {
    DynamicsConfig cfg;
    cfg.L = L;
    cfg.lambda = PinningParameter::finite(1.5);
    cfg.horizon = 1.0;
    cfg.observable_times = {1.0};
    cfg.seed = 31000 + s;
    const TrajectoryRecord rec = simulate(cfg, eta0);
    gap[s] = std::abs(rec.series[0].fourier - decay * phi0);
  });
  const double bound = std::pow(double(L), 1.75);
  int ok = 0;
  for (double v : gap)
    if (v <= bound) ++ok;
  CHECK(ok >= static_cast<int>(0.95 * n_seeds));
}

TEST_CASE("long-run moments match the exact equilibrium measure", "[dynamics]") {
  // strong scale check: at 25+ e-foldings of the slowest mode the chain must
  // reproduce the transfer-matrix moments, fluctuations included
  const int L = 32, n_seeds = 300;
  const double lambda = 1.5;
  PartitionTable table(L, lambda);
  std::vector<double> h0(n_seeds), phi(n_seeds);
  parallel_for(n_seeds, 2, [&](std::size_t s) {
    DynamicsConfig cfg;
    cfg.L = L;
    cfg.lambda = PinningParameter::finite(lambda);
    cfg.walled = true;
    cfg.horizon = 10.0;
    cfg.seed = 42000 + s;
    std::vector<double> one{10.0 * L * L};
    run_with_sampler(cfg, eta_min(L), one,
                     [&](std::size_t, double, const std::vector<int>& h, int) {
                       h0[s] = h[L];
                       double p = 0;
                       for (int x = -L; x <= L; ++x)
                         p += std::cos(x * std::numbers::pi / (2.0 * L)) * h[x + L];
                       phi[s] = p;
                     });
  });
  const double m_h = testers::mean(h0), se_h = testers::stderr_of_mean(h0);
  const double m_p = testers::mean(phi), se_p = testers::stderr_of_mean(phi);
  CHECK(std::abs(m_h - table.site_height_mean(0)) <= 4.0 * se_h);
  CHECK(std::abs(m_p - table.fourier_mean()) <= 4.0 * se_p);
}

TEST_CASE("plain rate-1 clocks agree in law with the uniformized scheduler", "[dynamics]") {
  // free dynamics from a tent: the Fourier mode at a fixed time must match
  // in distribution between the two schedulers
  const int L = 32, n_seeds = 400;
  const Profile tent = Profile::sampled(-1, 1, 256, [](double x) { return 1.0 - std::abs(x); });
  LatticePath eta0 = discretize(tent, L, false);
  eta0.walled = false;
  std::vector<double> phi_plain(n_seeds), phi_unif(n_seeds);
  std::vector<int> min_h(n_seeds, 1);
  parallel_for(n_seeds, 2, [&](std::size_t s) {
    for (int mode = 0; mode < 2; ++mode) {
      DynamicsConfig cfg;
      cfg.L = L;
      cfg.walled = false;
      cfg.scheduler = mode ? Scheduler::plain_rate1 : Scheduler::uniformized_rate2;
      cfg.horizon = 0.3;
      cfg.observable_times = {0.3};
      cfg.seed = 61000 + s;
      const TrajectoryRecord rec = simulate(cfg, eta0);
      (mode ? phi_plain : phi_unif)[s] = rec.series[0].fourier / (double(L) * L);
      if (mode) min_h[s] = rec.series[0].min_height;
    }
  });
  const double m1 = testers::mean(phi_plain), m2 = testers::mean(phi_unif);
  const double se =
      std::hypot(testers::stderr_of_mean(phi_plain), testers::stderr_of_mean(phi_unif));
  CHECK(std::abs(m1 - m2) <= 3.5 * se);
  for (int v : min_h) CHECK(v <= 0);  // the free path always carries its boundary zeros
}
