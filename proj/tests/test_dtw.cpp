#include <doctest.h>

#include <cmath>
#include <random>

#include "dpdtw/dtw.hpp"
#include "dpdtw/errors.hpp"
#include "oracles.hpp"

using namespace dpdtw;

namespace {

Alignment diagonal(std::size_t n) {
  Alignment a;
  for (std::size_t t = 0; t < n; ++t) a.push_back({t, t});
  return a;
}

}  // namespace

TEST_CASE("cost_matrix holds pairwise frame distances") {
  const auto c = cost_matrix(Sequence::from_values({0, 1}), Sequence::from_values({1}));
  REQUIRE(c.rows() == 2);
  REQUIRE(c.cols() == 1);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(1, 0) == 0.0);

  std::mt19937_64 rng(3);
  const auto a = oracle::random_sequence(rng, 3, 2);
  const auto same = cost_matrix(a, a);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same(i, i) == 0.0);

  const auto b = oracle::random_sequence(rng, 4, 2);
  const auto ab = cost_matrix(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(ab(i, j) == doctest::Approx(oracle::norm2(a, i, b, j)).epsilon(1e-15));
      CHECK(ab(i, j) >= 0.0);
    }
  }
  CHECK_THROWS_AS(cost_matrix(a, Sequence(2, 3)), InvalidArgument);
}

TEST_CASE("dtw on hand examples") {
  SUBCASE("identity gives the diagonal") {
    std::mt19937_64 rng(1);
    const auto s = oracle::random_sequence(rng, 7, 3);
    const auto r = dtw(s, s);
    CHECK(r.discrepancy == 0.0);
    CHECK(r.alignment == diagonal(7));
  }
  SUBCASE("single frame against a constant run") {
    const auto r = dtw(Sequence::from_values({0}), Sequence::from_values({0, 0, 0}));
    CHECK(r.discrepancy == 0.0);
    CHECK(r.alignment == Alignment{{0, 0}, {0, 1}, {0, 2}});
  }
  SUBCASE("repeated value is absorbed by a vertical step") {
    const auto r = dtw(Sequence::from_values({0, 3, 3}), Sequence::from_values({0, 3}));
    CHECK(r.discrepancy == 0.0);
    CHECK(r.alignment == Alignment{{0, 0}, {1, 1}, {2, 1}});
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(dtw(Sequence(3, 1), Sequence(3, 2)), InvalidArgument);
  }
}

TEST_CASE("dtw matches exhaustive path enumeration on small integer sequences") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::uniform_int_distribution<std::size_t> dim(1, 2);
  for (int trial = 0; trial < 1500; ++trial) {
    const std::size_t m = dim(rng);
    const auto a = oracle::random_int_sequence(rng, len(rng), m, 3);
    const auto b = oracle::random_int_sequence(rng, len(rng), m, 3);
    const auto r = dtw(a, b);
    REQUIRE(r.discrepancy == oracle::brute_force_dtw(a, b));
    CHECK(dtw_discrepancy(a, b) == r.discrepancy);
  }
}

TEST_CASE("dtw invariants") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + trial % 3;
    const auto a = oracle::random_sequence(rng, len(rng), m);
    const auto b = oracle::random_sequence(rng, len(rng), m);
    const auto ab = dtw(a, b);
    const auto ba = dtw(b, a);

    CHECK(ab.discrepancy == doctest::Approx(ba.discrepancy).epsilon(1e-12));
    CHECK_NOTHROW(validate_alignment(ab.alignment, a.length(), b.length()));
    CHECK(ab.alignment.size() >= std::max(a.length(), b.length()));
    CHECK(ab.alignment.size() <= a.length() + b.length() - 1);
    CHECK(alignment_cost(a, b, ab.alignment) == doctest::Approx(ab.discrepancy).epsilon(1e-9));
    CHECK(dtw(a, a).discrepancy == 0.0);
  }
}

TEST_CASE("dtw is deterministic under ties") {
  // every path through a constant pair costs the same; the preferred order
  // diagonal > vertical > horizontal picks the diagonal then a vertical run
  const auto r = dtw(Sequence(4, 1, 0.0), Sequence(2, 1, 1.0));
  CHECK(r.alignment == Alignment{{0, 0}, {1, 0}, {2, 0}, {3, 1}});
  CHECK(r.alignment == dtw(Sequence(4, 1, 0.0), Sequence(2, 1, 1.0)).alignment);
}

TEST_CASE("Sakoe-Chiba band") {
  std::mt19937_64 rng(17);

  SUBCASE("banded dtw equals brute force restricted to admitted cells") {
    std::uniform_int_distribution<std::size_t> len(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
      const auto a = oracle::random_int_sequence(rng, len(rng), 1, 3);
      const auto b = oracle::random_int_sequence(rng, len(rng), 1, 3);
      const std::size_t w = static_cast<std::size_t>(trial % 4);
      const auto band = BandConstraint::sakoe_chiba(w);
      const double expected = oracle::brute_force_dtw(
          a, b, [&](std::size_t i, std::size_t j) { return band.admits(i, j, a.length(), b.length()); });
      CHECK(band_feasible(a.length(), b.length(), band) == std::isfinite(expected));
      if (std::isfinite(expected)) {
        CHECK(dtw(a, b, band).discrepancy == expected);
        CHECK(dtw_discrepancy(a, b, band) == expected);
      } else {
        CHECK_THROWS_AS(dtw(a, b, band), InvalidArgument);
      }
    }
  }

  SUBCASE("widening never increases the discrepancy") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = oracle::random_sequence(rng, 20, 1);
      const auto b = oracle::random_sequence(rng, 14 + trial % 10, 1);
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t w = min_feasible_width(a.length(), b.length()); w <= 25; ++w) {
        const double d = dtw_discrepancy(a, b, BandConstraint::sakoe_chiba(w));
        CHECK(d <= prev);
        prev = d;
      }
      CHECK(prev == doctest::Approx(dtw_discrepancy(a, b)).epsilon(1e-12));
    }
  }

  SUBCASE("width at least the length difference is always feasible") {
    for (std::size_t n1 = 1; n1 <= 12; ++n1) {
      for (std::size_t n2 = 1; n2 <= 12; ++n2) {
        const std::size_t diff = n1 > n2 ? n1 - n2 : n2 - n1;
        CHECK(band_feasible(n1, n2, BandConstraint::sakoe_chiba(diff)));
        CHECK(min_feasible_width(n1, n2) <= diff);
      }
    }
  }

  SUBCASE("zero width on equal lengths is the diagonal") {
    const auto a = oracle::random_sequence(rng, 9, 2);
    const auto b = oracle::random_sequence(rng, 9, 2);
    const auto r = dtw(a, b, BandConstraint::sakoe_chiba(0));
    CHECK(r.alignment == diagonal(9));
    CHECK(r.discrepancy == doctest::Approx(alignment_cost(a, b, diagonal(9))));
  }

  SUBCASE("infeasible band names the minimum width") {
    // 1-based: row 1 of a 2 x 8 table is centred on column 4
    const auto a = Sequence(2, 1);
    const auto b = Sequence(8, 1);
    REQUIRE_FALSE(band_feasible(2, 8, BandConstraint::sakoe_chiba(1)));
    const std::size_t need = min_feasible_width(2, 8);
    try {
      dtw(a, b, BandConstraint::sakoe_chiba(1));
      FAIL("expected an error");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("minimum required width is " + std::to_string(need)) != std::string::npos);
    }
  }
}

TEST_CASE("alignment validation") {
  CHECK_THROWS_AS(validate_alignment({}, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_alignment({{0, 0}, {2, 1}}, 3, 2), InvalidArgument);
  CHECK_THROWS_AS(validate_alignment({{0, 0}, {1, 1}, {1, 1}}, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(validate_alignment({{0, 0}, {1, 1}}, 3, 2), InvalidArgument);
  CHECK_NOTHROW(validate_alignment({{0, 0}, {1, 0}, {1, 1}}, 2, 2));
}

TEST_CASE("dtw_subgradient") {
  SUBCASE("identical sequences on the diagonal have zero gradient") {
    std::mt19937_64 rng(2);
    const auto s = oracle::random_sequence(rng, 5, 2);
    const auto g = dtw_subgradient(s, s, diagonal(5));
    for (double v : g.first.values()) CHECK(v == 0.0);
    for (double v : g.second.values()) CHECK(v == 0.0);
  }
  SUBCASE("unit gradient of |x| at x = 2") {
    const auto g = dtw_subgradient(Sequence::from_values({2}), Sequence::from_values({0}), {{0, 0}});
    CHECK(g.first.at(0, 0) == 1.0);
    CHECK(g.second.at(0, 0) == -1.0);
  }
  SUBCASE("rejects inconsistent alignments") {
    CHECK_THROWS_AS(dtw_subgradient(Sequence(3, 1), Sequence(2, 1), diagonal(2)), InvalidArgument);
  }
  SUBCASE("matches central differences at path-stable points") {
    std::mt19937_64 rng(23);
    const double eps = 1e-5;
    std::size_t probed = 0;
    std::size_t agreed = 0;
    for (int trial = 0; trial < 20; ++trial) {
      auto a = oracle::random_sequence(rng, 6 + trial % 5, 2);
      const auto b = oracle::random_sequence(rng, 8, 2);
      const auto base = dtw(a, b);
      const auto g = dtw_subgradient(a, b, base.alignment);
      for (std::size_t k = 0; k < a.values().size(); ++k) {
        const double orig = a.values()[k];
        a.values()[k] = orig + eps;
        const auto plus = dtw(a, b);
        a.values()[k] = orig - eps;
        const auto minus = dtw(a, b);
        a.values()[k] = orig;
        if (plus.alignment != base.alignment || minus.alignment != base.alignment) continue;
        const double numeric = (plus.discrepancy - minus.discrepancy) / (2 * eps);
        const double analytic = g.first.values()[k];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
        ++probed;
        if (std::abs(numeric - analytic) / scale <= 1e-4) ++agreed;
      }
    }
    CHECK(probed > 100);
    CHECK(agreed == probed);
  }
}

TEST_CASE("euclidean") {
  std::mt19937_64 rng(9);
  const auto a = oracle::random_sequence(rng, 12, 3);
  const auto b = oracle::random_sequence(rng, 12, 3);
  CHECK(euclidean(a, a) == 0.0);
  CHECK(euclidean(Sequence::from_values({0, 0}), Sequence::from_values({3, 4})) == 5.0);
  double flat = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) flat += std::pow(a.values()[k] - b.values()[k], 2);
  CHECK(euclidean(a, b) == doctest::Approx(std::sqrt(flat)).epsilon(1e-14));
  CHECK_THROWS_AS(euclidean(a, oracle::random_sequence(rng, 11, 3)), InvalidArgument);
}
