#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "pinning/equilibrium.hpp"
#include "pinning/lattice_path.hpp"
#include "pinning/observables.hpp"
#include "pinning/shapes.hpp"

using namespace pinning;

namespace {
LatticePath tent_path(int L) {
  const Profile tent = Profile::sampled(-1, 1, 256, [](double x) { return 1.0 - std::abs(x); });
  return discretize(tent, L, true);
}
}  // namespace

TEST_CASE("contacts", "[observables]") {
  CHECK(contacts(eta_min(3)) == 2);
  CHECK(contacts(tent_path(4)) == 0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    LatticePath p = equilibrium_sample(17, 1.2, s);
    LatticePath r = p;
    std::reverse(r.heights.begin(), r.heights.end());
    CHECK(contacts(p) == contacts(r));
  }
}

TEST_CASE("area of the named configurations", "[observables]") {
  CHECK(area(eta_min(5)) == Catch::Approx(10.0));
  const double tent_area = area(tent_path(4));
  CHECK(std::abs(tent_area - 16.0) <= 1.0);  // geometric area L^2 up to the floor term
  for (std::uint64_t s = 0; s < 20; ++s) {
    const LatticePath p = equilibrium_sample(24, 0.8, s);
    CHECK(area(p) >= 2.0 * 24 - 1e-12);
  }
}

TEST_CASE("windowed area", "[observables]") {
  const LatticePath p = tent_path(6);
  CHECK(windowed_area(p, -6, 6) == Catch::Approx(area(p)));
  CHECK_THROWS_AS(windowed_area(p, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(windowed_area(p, -7, 0), std::invalid_argument);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const LatticePath q = equilibrium_sample(20, 1.0, s);
    const double split = windowed_area(q, -20, -3) + windowed_area(q, -3, 20);
    CHECK(std::abs(split - area(q)) <= 2.0);
  }
}

TEST_CASE("generator drift on the small examples", "[observables]") {
  CHECK(generator_drift_area(eta_min(7), PinningParameter::infinite()).value == 0.0);
  const DriftReport bump = generator_drift_area(LatticePath{2, {0, 1, 2, 1, 0}, true},
                                                PinningParameter::infinite());
  CHECK(bump.value == Catch::Approx(-2.0));
  CHECK(bump.excursion_count_ge4 == 1);
}

TEST_CASE("drift identity holds exhaustively for L <= 5", "[observables]") {
  for (int L = 1; L <= 5; ++L) {
    for (const LatticePath& p : enumerate_walled_paths(L)) {
      const DriftReport rep = generator_drift_area(p, PinningParameter::infinite());
      CHECK(rep.value == Catch::Approx(-2.0 * rep.excursion_count_ge4).margin(1e-12));
      if (contacts(p) < L - 1) CHECK(rep.value <= -2.0 + 1e-12);
    }
  }
}

TEST_CASE("finite-lambda drift is the exact rate-weighted sum", "[observables]") {
  // contact site: rate 2/(1+lambda) upward with dA = +1
  const DriftReport rep =
      generator_drift_area(eta_min(3), PinningParameter::finite(3.0));
  // eta_min(3): two interior contact sites, each flippable up at rate 1/2
  CHECK(rep.value == Catch::Approx(2 * (2.0 / 4.0) * 1.0));
}

TEST_CASE("martingale bracket rate", "[observables]") {
  CHECK(martingale_bracket_rate(eta_min(6)) == 0.0);
  CHECK(martingale_bracket_rate(tent_path(4)) == Catch::Approx(4.0));
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const LatticePath p = equilibrium_sample(40, 1.0, s);
    CHECK(martingale_bracket_rate(p) <= 8.0 * 40);
  }
}

TEST_CASE("fourier observable", "[observables]") {
  CHECK(fourier(eta_min(2)) == Catch::Approx(std::sqrt(2.0)));
  // linearity under a flip: Phi changes by +-2 cos(x pi / 2L)
  LatticePath p = tent_path(8);
  const double before = fourier(p);
  p.at(0) -= 2;  // flip the apex down
  CHECK(fourier(p) == Catch::Approx(before - 2.0 * std::cos(0.0)));
}

TEST_CASE("fourier Riemann sum approaches the integral", "[observables]") {
  const Profile f0 = make_profile("cosine", 4096);
  const int L = 1024;
  const LatticePath p = discretize(f0, L, true);
  // quadrature oracle for int f0 cos(pi x/2) dx
  double q = 0;
  for (int i = 0; i <= f0.n_cells(); ++i) {
    const double w = (i == 0 || i == f0.n_cells()) ? 0.5 : 1.0;
    q += w * f0.value(i) * std::cos(std::numbers::pi * f0.node(i) / 2.0);
  }
  q *= f0.dx();
  CHECK(std::abs(fourier(p) / (double(L) * L) - q) <= 0.01 * std::abs(q));
}

TEST_CASE("kappa and the discrete eigenrelation", "[observables]") {
  CHECK(kappa(1) == Catch::Approx(2.0));
  const double limit = std::numbers::pi * std::numbers::pi / 4.0;
  CHECK(std::abs(kappa(10000) * 1e8 - limit) <= 1e-6 * limit);
  const int L = 8;
  for (int x = -L + 1; x < L; ++x) {
    auto g = [&](int y) { return std::cos(y * std::numbers::pi / (2.0 * L)); };
    const double lap = g(x + 1) + g(x - 1) - 2.0 * g(x);
    CHECK(std::abs(lap + kappa(L) * g(x)) <= 1e-12);
  }
}

TEST_CASE("martingale residual of a frozen series is zero", "[observables]") {
  std::vector<double> t(100), a(100, 12.0), d(100, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * double(i);
  const MartingaleSeries m = martingale_residual(t, a, d);
  CHECK(m.max_abs == 0.0);
  CHECK(m.quadratic_variation == 0.0);
  std::vector<double> too_short(10, 0.0);
  CHECK_THROWS_AS(martingale_residual(too_short, too_short, too_short), std::invalid_argument);
}

TEST_CASE("drift report emits per-site csv", "[observables]") {
  const DriftReport rep = generator_drift_area(LatticePath{2, {0, 1, 2, 1, 0}, true},
                                               PinningParameter::infinite());
  std::ostringstream os;
  write_drift_csv(rep, os);
  const std::string s = os.str();
  CHECK(s.rfind("site,rate,dA,contribution\n", 0) == 0);
  CHECK(s.find("0,2,-1,-2") != std::string::npos);  // the crest flip
}
