#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "pinning/lattice_path.hpp"
#include "pinning/rng.hpp"

using namespace pinning;

TEST_CASE("validate accepts and rejects the basic cases", "[lattice]") {
  CHECK(validate(eta_min(2)).ok);
  CHECK(validate(LatticePath{2, {0, 1, 2, 1, 0}, true}).ok);

  const ValidationReport endpoint = validate(LatticePath{2, {1, 0, 1, 0, 1}, true});
  CHECK_FALSE(endpoint.ok);
  CHECK(endpoint.violation.find("endpoint") != std::string::npos);

  CHECK_FALSE(validate(LatticePath{2, {0, 1, 3, 1, 0}, true}).ok);   // bad increment
  CHECK_FALSE(validate(LatticePath{2, {0, -1, 0, 1, 0}, true}).ok);  // below the wall
  CHECK(validate(LatticePath{2, {0, -1, 0, 1, 0}, false}).ok);       // fine without wall
}

TEST_CASE("eta_min is the sawtooth with maximal contacts", "[lattice]") {
  CHECK(eta_min(1).heights == std::vector<int>{0, 1, 0});
  CHECK(eta_min(2).heights == std::vector<int>{0, 1, 0, 1, 0});
  int zeros = 0;
  for (int x = -2; x <= 2; ++x)
    if (eta_min(3).at(x) == 0 && x != -3 && x != 3) ++zeros;
  CHECK(zeros == 2);  // L-1 interior zeros at L=3
}

TEST_CASE("discretize matches the flat and tent examples exactly", "[lattice]") {
  const Profile zero = Profile::sampled(-1, 1, 64, [](double) { return 0.0; });
  CHECK(discretize(zero, 2, true).heights == eta_min(2).heights);

  const Profile tent = Profile::sampled(-1, 1, 64, [](double x) { return 1.0 - std::abs(x); });
  CHECK(discretize(tent, 4, true).heights == std::vector<int>{0, 1, 2, 3, 4, 3, 2, 1, 0});
}

TEST_CASE("discretize respects the 2/L sup bound", "[lattice]") {
  const Profile cosine =
      Profile::sampled(-1, 1, 2048, [](double x) { return 2.0 / std::numbers::pi * std::cos(std::numbers::pi * x / 2); });
  const int L = 128;
  const LatticePath p = discretize(cosine, L, true);
  REQUIRE(validate(p).ok);
  for (int x = -L; x <= L; ++x)
    CHECK(std::abs(p.at(x) / double(L) - cosine(double(x) / L)) <= 2.0 / L + 1e-12);
}

TEST_CASE("discretize 2/L bound holds on random Lipschitz profiles", "[lattice]") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const bool walled = seed % 2 == 0;
    const Profile f0 = testers::random_lipschitz_profile(seed, walled);
    for (int L : {8, 33, 128}) {
      const LatticePath p = discretize(f0, L, walled);
      REQUIRE(validate(p).ok);
      double worst = 0;
      for (int x = -L; x <= L; ++x)
        worst = std::max(worst, std::abs(p.at(x) / double(L) - f0(double(x) / L)));
      CHECK(worst <= 2.0 / L + 1e-12);
    }
  }
}

TEST_CASE("discretize rejects inadmissible input", "[lattice]") {
  const Profile steep = Profile(-1, 1, {0.0, 1.9, 0.0});  // slope 1.9
  CHECK_THROWS_AS(discretize(steep, 8, true), std::invalid_argument);
  const Profile neg = Profile::sampled(-1, 1, 32, [](double x) { return -0.3 * (1 - x * x); });
  CHECK_THROWS_AS(discretize(neg, 8, true), std::invalid_argument);
  CHECK_NOTHROW(discretize(neg, 8, false));
}

TEST_CASE("rescale properties", "[lattice]") {
  CHECK(rescale(eta_min(16)).max_abs() == Catch::Approx(1.0 / 16));
  const Profile f0 = testers::random_lipschitz_profile(7, true);
  const int L = 64;
  const Profile back = rescale(discretize(f0, L, true));
  CHECK(back.is_lipschitz(1.0));
  CHECK(sup_distance(back, Profile::sampled(-1, 1, 2 * L, [&](double x) { return f0(x); })) <=
        2.0 / L + 1e-12);
}

TEST_CASE("excursions on the named examples", "[lattice]") {
  const auto two = excursions(LatticePath{2, {0, 1, 0, 1, 0}, true});
  REQUIRE(two.size() == 2);
  CHECK(two[0].length() == 2);
  CHECK(two[1].length() == 2);

  const auto one = excursions(LatticePath{2, {0, 1, 2, 1, 0}, true});
  REQUIRE(one.size() == 1);
  CHECK(one[0].length() == 4);

  const Profile tent = Profile::sampled(-1, 1, 64, [](double x) { return 1.0 - std::abs(x); });
  const auto big = excursions(discretize(tent, 4, true));
  REQUIRE(big.size() == 1);
  CHECK(big[0].length() == 8);
}

TEST_CASE("excursions partition the positive stretches", "[lattice]") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const LatticePath p = discretize(testers::random_lipschitz_profile(seed, true), 48, true);
    const auto exc = excursions(p);
    // reconstruct the sign pattern: inside an excursion heights are positive,
    // outside (between consecutive excursions) every even site is a zero
    std::vector<bool> inside(static_cast<std::size_t>(p.size()), false);
    for (const Excursion& e : exc) {
      CHECK(p.at(e.left) == 0);
      CHECK(p.at(e.right) == 0);
      for (int x = e.left + 1; x < e.right; ++x) {
        CHECK(p.at(x) > 0);
        inside[static_cast<std::size_t>(x + p.half_length)] = true;
      }
    }
    for (int x = -p.half_length; x <= p.half_length; ++x)
      if (!inside[static_cast<std::size_t>(x + p.half_length)])
        CHECK(p.at(x) == 0);  // everything outside the excursions is a contact
  }
}

TEST_CASE("a corner flip preserves validity", "[lattice]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LatticePath p = discretize(testers::random_lipschitz_profile(seed, true), 32, true);
    for (int x = -31; x < 32; ++x) {
      if (p.at(x - 1) != p.at(x + 1)) continue;
      const int other = (p.at(x) == p.at(x - 1) - 1) ? p.at(x - 1) + 1 : p.at(x - 1) - 1;
      if (other < 0) continue;
      LatticePath q = p;
      q.at(x) = other;
      CHECK(validate(q).ok);
    }
  }
}

TEST_CASE("sup_distance basics", "[lattice]") {
  const Profile a = Profile::sampled(-1, 1, 64, [](double) { return 0.0; });
  const Profile b = Profile::sampled(-1, 1, 96, [](double) { return 0.25; });
  CHECK(sup_distance(a, a) == 0.0);
  CHECK(sup_distance(a, b) == Catch::Approx(0.25));
  CHECK(sup_distance(a, b) == sup_distance(b, a));
  const Profile other_domain = Profile::sampled(0, 1, 16, [](double) { return 0.0; });
  CHECK_THROWS_AS(sup_distance(a, other_domain), std::invalid_argument);
  // cross-grid: the coarse interpolant of a kink differs mid-cell
  const Profile kink = Profile::sampled(-1, 1, 3, [](double x) { return 1 - std::abs(x); });
  const Profile fine = Profile::sampled(-1, 1, 300, [](double x) { return 1 - std::abs(x); });
  CHECK(sup_distance(kink, fine) == Catch::Approx(1.0 / 3).epsilon(0.02));
}

TEST_CASE("path serialization round-trips", "[lattice]") {
  const LatticePath p = discretize(testers::random_lipschitz_profile(3, true), 21, true);
  std::stringstream ss;
  write_path(p, ss);
  const LatticePath q = read_path(ss, true);
  CHECK(q.heights == p.heights);
  CHECK(q.half_length == p.half_length);
}

TEST_CASE("profile csv round-trips", "[lattice]") {
  const Profile p = testers::random_lipschitz_profile(11, false, 9, 40);
  std::stringstream ss;
  p.write_csv(ss);
  const Profile q = Profile::read_csv(ss);
  REQUIRE(q.n_cells() == p.n_cells());
  CHECK(sup_distance(p, q) <= 1e-9);
}
