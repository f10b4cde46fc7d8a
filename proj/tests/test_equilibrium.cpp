#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "pinning/equilibrium.hpp"
#include "pinning/observables.hpp"

using namespace pinning;

TEST_CASE("partition function small cases", "[equilibrium]") {
  CHECK(partition_function(1, 1.0) == Catch::Approx(1.0));
  CHECK(partition_function(2, 0.7) == Catch::Approx(1.7));  // UUDD + lambda * UDUD
  CHECK(partition_function(3, 1.0) == Catch::Approx(5.0));  // Catalan
  CHECK(partition_function(4, 1.0) == Catch::Approx(14.0));
  CHECK(partition_function(5, 1.0) == Catch::Approx(42.0));
}

TEST_CASE("partition function agrees with enumeration for L <= 6", "[equilibrium]") {
  for (int L = 1; L <= 6; ++L) {
    const auto paths = enumerate_walled_paths(L);
    for (double lam : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      double z = 0;
      for (const LatticePath& p : paths) z += path_weight(p, lam);
      CHECK(partition_function(L, lam) == Catch::Approx(z).epsilon(1e-12));
    }
  }
}

TEST_CASE("column rescaling keeps long polymers finite", "[equilibrium]") {
  const double lz = log_partition_function(2000, 1.3);
  CHECK(std::isfinite(lz));
  CHECK(lz > 2000.0);  // ~ 2L log 2 minus polynomial corrections
  CHECK(lz < 4000.0 * std::log(2.0));
}

TEST_CASE("exact sampling matches the two-path law at L=2", "[equilibrium]") {
  const double lambda = 2.0;
  const int n = 100000;
  int udud = 0;
  PartitionTable table(2, lambda);
  for (int i = 0; i < n; ++i)
    if (table.sample(static_cast<std::uint64_t>(i)).at(0) == 0) ++udud;
  const double p = lambda / (1.0 + lambda);
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(double(udud) / n - p) <= 3.0 * sigma);
}

TEST_CASE("exact sampling matches pi on Omega_3 (chi-squared)", "[equilibrium]") {
  const double lambda = 1.5;
  const int n = 100000;
  const auto paths = enumerate_walled_paths(3);
  std::map<std::vector<int>, int> counts;
  PartitionTable table(3, lambda);
  for (int i = 0; i < n; ++i) ++counts[table.sample(static_cast<std::uint64_t>(i)).heights];
  const double z = partition_function(3, lambda);
  double chi2 = 0;
  for (const LatticePath& p : paths) {
    const double expectation = n * path_weight(p, lambda) / z;
    const double observed = counts[p.heights];
    chi2 += (observed - expectation) * (observed - expectation) / expectation;
  }
  CHECK(chi2 <= 13.28);  // 99% quantile, 4 degrees of freedom
}

TEST_CASE("sampled law is reflection symmetric", "[equilibrium]") {
  // two-sample KS on the height at +-L/2 over the same sample set
  const int L = 16, n = 10000;
  PartitionTable table(L, 1.5);
  std::vector<double> left, right;
  for (int i = 0; i < n; ++i) {
    const LatticePath p = table.sample(static_cast<std::uint64_t>(i));
    left.push_back(p.at(-L / 2));
    right.push_back(p.at(L / 2));
  }
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  double d = 0;
  for (int h = 0; h <= L; ++h) {
    const double fl = std::upper_bound(left.begin(), left.end(), h) - left.begin();
    const double fr = std::upper_bound(right.begin(), right.end(), h) - right.begin();
    d = std::max(d, std::abs(fl - fr) / n);
  }
  CHECK(d <= 1.63 * std::sqrt(2.0 / n));  // 1% KS critical value
}

TEST_CASE("expected contacts: DP equals enumeration and grows with lambda", "[equilibrium]") {
  for (double lam : {0.5, 1.3}) {
    double num = 0, den = 0;
    for (const LatticePath& p : enumerate_walled_paths(5)) {
      const double w = path_weight(p, lam);
      num += w * contacts(p);
      den += w;
    }
    CHECK(PartitionTable(5, lam).expected_contacts() == Catch::Approx(num / den).epsilon(1e-10));
  }
  double prev = -1;
  for (double lam : {1.0, 2.0, 4.0, 8.0}) {
    const double density = PartitionTable(32, lam).expected_contacts() / 31.0;
    CHECK(density > prev);
    prev = density;
  }
}

TEST_CASE("midpoint pin probability: exact small case and DP consistency", "[equilibrium]") {
  CHECK(midpoint_pin_probability(2, 1.0) == Catch::Approx(1.0));
  // enumeration oracle at l = 4
  for (double lam : {0.7, 1.5, 3.0}) {
    double hit = 0, z = 0;
    for (const LatticePath& p : enumerate_walled_paths(4)) {
      const double w = path_weight(p, lam);
      z += w;
      if (p.at(-1) == 1 && p.at(1) == 1) hit += w;
    }
    CHECK(midpoint_pin_probability(4, lam) == Catch::Approx(hit / z).epsilon(1e-12));
  }
  CHECK_THROWS_AS(midpoint_pin_probability(5, 1.0), std::invalid_argument);
}

TEST_CASE("midpoint pin probability decays with the stated exponent range", "[equilibrium]") {
  // log-log regression over l = 2^4 .. 2^10 at lambda = 1.5
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int l = 16; l <= 1024; l *= 2) {
    const double x = std::log(double(l));
    const double y = std::log(midpoint_pin_probability(l, 1.5));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= -1.8);
  CHECK(slope <= -1.2);
}

TEST_CASE("midpoint pin probability is monotone in lambda", "[equilibrium]") {
  double prev = 0;
  for (double lam : {0.5, 1.0, 1.5, 2.0, 4.0}) {
    const double p = midpoint_pin_probability(64, lam);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("sampling guards", "[equilibrium]") {
  CHECK_THROWS_AS(equilibrium_sample(4, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(PartitionTable(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(PartitionTable(4, -1.0), std::invalid_argument);
}

TEST_CASE("enumeration is deterministic and complete", "[equilibrium]") {
  const auto a = enumerate_walled_paths(4);
  const auto b = enumerate_walled_paths(4);
  REQUIRE(a.size() == 14);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].heights == b[i].heights);
  for (const LatticePath& p : a) CHECK(validate(p).ok);
}

TEST_CASE("general-site pin probability matches enumeration", "[equilibrium]") {
  const int L = 5;
  const double lam = 1.3;
  PartitionTable table(L, lam);
  for (int x : {-3, -1, 1, 3}) {  // contact-parity sites away from the ends
    double hit = 0, z = 0;
    for (const LatticePath& p : enumerate_walled_paths(L)) {
      const double w = path_weight(p, lam);
      z += w;
      if (p.at(x - 1) == 1 && p.at(x + 1) == 1) hit += w;
    }
    CHECK(table.pin_probability_at(x) == Catch::Approx(hit / z).epsilon(1e-12));
  }
  CHECK_THROWS_AS(table.pin_probability_at(2), std::invalid_argument);  // parity
  CHECK_THROWS_AS(table.pin_probability_at(-4), std::out_of_range);
}
