#include <doctest.h>

#include <random>

#include "dpdtw/errors.hpp"
#include "dpdtw/prototypes.hpp"
#include "oracles.hpp"

using namespace dpdtw;

TEST_CASE("init_medoid_prototypes") {
  SUBCASE("single member is used as is") {
    const auto s = Sequence::from_values({1, 2, 3});
    const std::vector<Sequence> seqs{s};
    const std::vector<std::size_t> labels{0};
    const auto p = init_medoid_prototypes(seqs, labels, 1, 3);
    CHECK(p[0] == s);
  }
  SUBCASE("majority-identical medoid") {
    const std::vector<Sequence> seqs{Sequence::from_values({0, 0}), Sequence::from_values({0, 0}),
                                     Sequence::from_values({9, 9})};
    const std::vector<std::size_t> labels{0, 0, 0};
    CHECK(init_medoid_prototypes(seqs, labels, 1, 2)[0] == Sequence::from_values({0, 0}));
  }
  SUBCASE("empty class is named in the error") {
    const std::vector<Sequence> seqs{Sequence::from_values({0, 0})};
    const std::vector<std::size_t> labels{0};
    try {
      init_medoid_prototypes(seqs, labels, 2, 2);
      FAIL("expected an error");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("class 2") != std::string::npos);
    }
  }
  SUBCASE("matches the exhaustive pairwise-sum argmin") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Sequence> seqs;
      std::vector<std::size_t> labels;
      for (std::size_t k = 0; k < 3; ++k) {
        for (int n = 0; n < 5; ++n) {
          seqs.push_back(oracle::random_sequence(rng, 5, 1));
          labels.push_back(k);
        }
      }
      const auto p = init_medoid_prototypes(seqs, labels, 3, 5);
      for (std::size_t k = 0; k < 3; ++k) {
        std::size_t best = 0;
        double best_sum = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < 5; ++a) {
          double sum = 0.0;
          for (std::size_t b = 0; b < 5; ++b) sum += oracle::brute_force_dtw(seqs[5 * k + a], seqs[5 * k + b]);
          if (sum < best_sum) {
            best_sum = sum;
            best = a;
          }
        }
        // medoid is an actual member
        CHECK(p[k] == seqs[5 * k + best]);
      }
    }
  }
  SUBCASE("resamples to the prototype length") {
    const std::vector<Sequence> seqs{Sequence::from_values({0, 1, 2, 3, 4})};
    const std::vector<std::size_t> labels{0};
    const auto p = init_medoid_prototypes(seqs, labels, 1, 3);
    CHECK(p[0] == Sequence::from_values({0, 2, 4}));
  }
}

TEST_CASE("medoid ties go to the earliest member") {
  const std::vector<Sequence> seqs{Sequence::from_values({1}), Sequence::from_values({1})};
  CHECK(medoid_index(seqs) == 0);
}

TEST_CASE("temp_cat and position_to_action") {
  const PrototypeSet ps({Sequence::from_values({1, 2}), Sequence::from_values({3, 4})});
  SUBCASE("single entry is the prototype verbatim") {
    const auto o = temp_cat({1}, ps);
    CHECK(o.data == ps[1]);
    CHECK(o.data.length() == 2);
  }
  SUBCASE("direct concatenation") {
    CHECK(temp_cat({0, 1}, ps).data == Sequence::from_values({1, 2, 3, 4}));
  }
  SUBCASE("length law") {
    const PrototypeSet p8({Sequence(8, 2), Sequence(8, 2), Sequence(8, 2)});
    CHECK(temp_cat({0, 2, 1}, p8).data.length() == 24);
  }
  SUBCASE("unknown class") { CHECK_THROWS_AS(temp_cat({2}, ps), InvalidArgument); }
  SUBCASE("boundaries") {
    const Transcript tr{2, 0, 1};
    CHECK(position_to_action(0, tr, 4) == 2);
    CHECK(position_to_action(3, tr, 4) == 2);
    CHECK(position_to_action(4, tr, 4) == 0);
    CHECK_THROWS_AS(position_to_action(12, tr, 4), InvalidArgument);
  }
  SUBCASE("round trip over random transcripts") {
    std::mt19937_64 rng(8);
    std::vector<Sequence> protos;
    for (std::size_t k = 0; k < 5; ++k) protos.push_back(oracle::random_sequence(rng, 3, 2));
    const PrototypeSet p5(protos);
    std::uniform_int_distribution<std::size_t> cls(0, 4);
    for (int trial = 0; trial < 100; ++trial) {
      Transcript tr(1 + trial % 7);
      for (auto& c : tr) c = cls(rng);
      const auto o = temp_cat(tr, p5);
      REQUIRE(o.data.length() == tr.size() * 3);
      for (std::size_t t = 0; t < o.data.length(); ++t) {
        const std::size_t k = position_to_action(t, tr, 3);
        for (std::size_t d = 0; d < 2; ++d) CHECK(o.data.at(t, d) == p5[k].at(t % 3, d));
      }
    }
  }
}

TEST_CASE("PrototypeSet rejects mixed shapes") {
  CHECK_THROWS_AS(PrototypeSet({Sequence(3, 1), Sequence(4, 1)}), InvalidArgument);
  CHECK_THROWS_AS(PrototypeSet({Sequence(3, 1), Sequence(3, 2)}), InvalidArgument);
}

TEST_CASE("dba") {
  SUBCASE("single sequence is a fixed point") {
    const auto s = Sequence::from_values({0, 1, 5, 2});
    const std::vector<Sequence> seqs{s};
    const auto r = dba(seqs, s);
    CHECK(r.barycenter == s);
    CHECK(r.objective.front() == 0.0);
  }
  SUBCASE("identical sequences") {
    const auto s = Sequence::from_values({3, 1, 4, 1, 5});
    const std::vector<Sequence> seqs{s, s};
    const auto r = dba(seqs, Sequence::from_values({0, 0, 0, 0, 0}));
    CHECK(r.barycenter == s);
    double total = 0.0;
    for (const auto& x : seqs) total += dtw(x, r.barycenter).discrepancy;
    CHECK(total == 0.0);
  }
  SUBCASE("objective is non-increasing and matches recomputation") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<Sequence> seqs;
      for (int n = 0; n < 3; ++n) seqs.push_back(oracle::random_sequence(rng, 6 + n, 1 + trial % 2));
      const auto init = resample_linear(seqs[0], 6);
      auto r = dba(seqs, init, {20, 1e-9});
      REQUIRE(!r.objective.empty());
      for (std::size_t i = 1; i < r.objective.size(); ++i) CHECK(r.objective[i] <= r.objective[i - 1]);
      double total = 0.0;
      for (const auto& x : seqs) total += dtw(x, r.barycenter).discrepancy;
      CHECK(total == doctest::Approx(r.objective.back()).epsilon(1e-12));
      double at_init = 0.0;
      for (const auto& x : seqs) at_init += dtw(x, init).discrepancy;
      CHECK(r.objective.front() == doctest::Approx(at_init).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(dba({}, Sequence(2, 1)), InvalidArgument);
    const std::vector<Sequence> seqs{Sequence(3, 2)};
    CHECK_THROWS_AS(dba(seqs, Sequence(3, 1)), InvalidArgument);
  }
}
