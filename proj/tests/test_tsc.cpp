#include <doctest.h>

#include <cmath>
#include <random>

#include "dpdtw/errors.hpp"
#include "dpdtw/io.hpp"
#include "dpdtw/tsc.hpp"
#include "oracles.hpp"

using namespace dpdtw;

namespace {

PrototypeSet random_prototypes(std::mt19937_64& rng, std::size_t k, std::size_t len, std::size_t dim) {
  std::vector<Sequence> p;
  for (std::size_t i = 0; i < k; ++i) p.push_back(oracle::random_sequence(rng, len, dim));
  return PrototypeSet(std::move(p));
}

TscDataset two_constant_classes(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  TscDataset d;
  d.name = "constants";
  d.class_names = {"a", "b"};
  for (std::size_t n = 0; n < 2 * per_class; ++n) {
    const std::size_t y = n % 2;
    Sequence s(16, 1);
    for (double& v : s.values()) v = static_cast<double>(y) + noise(rng);
    d.sequences.push_back(std::move(s));
    d.labels.push_back(y);
  }
  return d;
}

double flat_loss(std::span<const double> p, const Sequence& s, std::size_t y, const PrototypeSet& shape,
                 const TscConfig& cfg, std::vector<Alignment>* paths = nullptr) {
  std::vector<Sequence> protos = shape.prototypes();
  std::size_t off = 0;
  for (auto& q : protos) {
    std::copy(p.begin() + off, p.begin() + off + q.values().size(), q.values().begin());
    off += q.values().size();
  }
  const auto l = tsc_loss(s, y, PrototypeSet(protos), cfg);
  if (paths) *paths = l.alignments;
  return l.total;
}

}  // namespace

TEST_CASE("class_discrepancies") {
  std::mt19937_64 rng(1);
  const auto ps = random_prototypes(rng, 3, 6, 2);
  SUBCASE("exact prototype gives zero") { CHECK(class_discrepancies(ps[1], ps)[1].discrepancy == 0.0); }
  SUBCASE("each entry is an independent dtw call") {
    const auto s = oracle::random_sequence(rng, 9, 2);
    const auto r = class_discrepancies(s, ps);
    REQUIRE(r.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r[k].discrepancy == dtw(ps[k], s).discrepancy);
  }
  SUBCASE("single class") {
    const PrototypeSet one({ps[0]});
    const auto s = oracle::random_sequence(rng, 4, 2);
    CHECK(class_discrepancies(s, one)[0].discrepancy == dtw(ps[0], s).discrepancy);
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(class_discrepancies(Sequence(4, 3), ps), InvalidArgument); }
}

TEST_CASE("softmax_neg") {
  const std::vector<double> eq{2.5, 2.5};
  CHECK(softmax_neg(eq) == std::vector<double>{0.5, 0.5});
  const std::vector<double> far{0.0, 1e6};
  const auto p = softmax_neg(far);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(0.0));
  const std::vector<double> l3{0.0, std::log(3.0)};
  const auto q = softmax_neg(l3);
  CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-15));

  SUBCASE("valid distribution that reverses order, at any temperature") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (double temp : {1e-2, 1.0, 37.0, 1e4}) {
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> d(5);
        for (double& v : d) v = u(rng);
        const auto s = softmax_neg(d, temp);
        double sum = 0.0;
        for (double v : s) {
          CHECK(v >= 0.0);
          sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t a = 0; a < 5; ++a) {
          for (std::size_t b = 0; b < 5; ++b) {
            if (d[a] < d[b]) CHECK(s[a] >= s[b]);
          }
        }
      }
    }
  }
  SUBCASE("strictly order-reversing when not saturated") {
    const std::vector<double> d{0.3, 0.1, 0.7};
    const auto s = softmax_neg(d, 1.0);
    CHECK(s[1] > s[0]);
    CHECK(s[0] > s[2]);
  }
  CHECK_THROWS_AS(softmax_neg(eq, 0.0), InvalidArgument);
}

TEST_CASE("tsc_loss") {
  std::mt19937_64 rng(3);
  TscConfig cfg;

  SUBCASE("equal discrepancies with lambda 0 give ln 2") {
    cfg.lambda = 0.0;
    const auto s = Sequence::from_values({0, 0, 0});
    const PrototypeSet ps({Sequence::from_values({1, 1, 1}), Sequence::from_values({-1, -1, -1})});
    const auto l = tsc_loss(s, 0, ps, cfg);
    CHECK(l.total == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(l.cross_entropy == l.total);
  }
  SUBCASE("exact match with a far rival") {
    const auto s = Sequence::from_values({0, 1, 0});
    const PrototypeSet ps({s, Sequence::from_values({100, 100, 100})});
    const auto l = tsc_loss(s, 0, ps, cfg);
    CHECK(l.distance == 0.0);
    CHECK(l.cross_entropy == doctest::Approx(0.0));
  }
  SUBCASE("lambda 0 is exactly the cross-entropy; large temperature tends to ln K") {
    const auto ps = random_prototypes(rng, 4, 5, 2);
    const auto s = oracle::random_sequence(rng, 7, 2);
    cfg.lambda = 0.0;
    const auto l = tsc_loss(s, 2, ps, cfg);
    CHECK(l.total == l.cross_entropy);
    const auto scores = class_scores(s, ps, cfg);
    CHECK(l.cross_entropy == doctest::Approx(-std::log(scores.probabilities[2])).epsilon(1e-14));
    cfg.temperature = 1e9;
    CHECK(tsc_loss(s, 2, ps, cfg).cross_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-8));
  }
  SUBCASE("total combines the parts") {
    cfg.lambda = 0.7;
    const auto ps = random_prototypes(rng, 3, 5, 1);
    const auto s = oracle::random_sequence(rng, 6, 1);
    const auto l = tsc_loss(s, 1, ps, cfg);
    CHECK(l.distance == dtw(ps[1], s).discrepancy);
    CHECK(l.total == doctest::Approx(l.cross_entropy + 0.7 * l.distance).epsilon(1e-15));
  }
  SUBCASE("invalid label") {
    const auto ps = random_prototypes(rng, 2, 3, 1);
    CHECK_THROWS_AS(tsc_loss(Sequence(3, 1), 2, ps, cfg), InvalidArgument);
  }
  SUBCASE("gradient matches finite differences at path-stable points") {
    std::size_t probed = 0;
    for (int trial = 0; trial < 15; ++trial) {
      cfg.lambda = 0.1 * trial;
      cfg.temperature = 0.5 + 0.25 * (trial % 4);
      const auto ps = random_prototypes(rng, 3, 5, 2);
      const auto s = oracle::random_sequence(rng, 8, 2);
      const std::size_t y = trial % 3;
      const auto l = tsc_loss(s, y, ps, cfg);
      std::vector<double> params, grads;
      for (std::size_t k = 0; k < 3; ++k) {
        params.insert(params.end(), ps[k].values().begin(), ps[k].values().end());
        grads.insert(grads.end(), l.gradients[k].values().begin(), l.gradients[k].values().end());
      }
      const GradCheckObjective obj{[&](std::span<const double> p) { return flat_loss(p, s, y, ps, cfg); },
                                   [&](std::span<const double> p) {
                                     std::vector<Alignment> paths;
                                     flat_loss(p, s, y, ps, cfg, &paths);
                                     return oracle::path_signature(paths);
                                   }};
      const auto r = grad_check(obj, params, grads);
      probed += r.probed;
      CHECK(r.flagged.empty());
    }
    CHECK(probed > 300);
  }
}

TEST_CASE("predict") {
  std::mt19937_64 rng(5);
  const auto ps = random_prototypes(rng, 4, 6, 1);
  CHECK(predict(ps[2], ps) == 2);
  const PrototypeSet one({ps[0]});
  CHECK(predict(oracle::random_sequence(rng, 3, 1), one) == 0);
  const PrototypeSet dup({ps[1], ps[1]});
  CHECK(predict(ps[0], dup) == 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_sequence(rng, 4 + trial % 5, 1);
    const auto r = class_discrepancies(s, ps);
    std::size_t best = 0;
    for (std::size_t k = 1; k < r.size(); ++k) {
      if (r[k].discrepancy < r[best].discrepancy) best = k;
    }
    CHECK(predict(s, ps) == best);
  }
}

TEST_CASE("argmin is invariant to a common shift of all discrepancies") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(4), shifted(4);
    const double c = u(rng);
    for (std::size_t k = 0; k < 4; ++k) {
      d[k] = u(rng);
      shifted[k] = d[k] + c;
    }
    const auto a = softmax_neg(d);
    const auto b = softmax_neg(shifted);
    const auto am = std::max_element(a.begin(), a.end()) - a.begin();
    CHECK(am == std::max_element(b.begin(), b.end()) - b.begin());
    CHECK(am == std::min_element(d.begin(), d.end()) - d.begin());
    for (std::size_t k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }
}

TEST_CASE("train_tsc") {
  const auto train = two_constant_classes(10, 1);
  const auto test = two_constant_classes(10, 2);
  TscConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 7;

  const auto model = train_tsc(train, cfg);
  REQUIRE(model.history.size() == cfg.epochs + 1);
  CHECK(model.history.back().total <= model.history.front().total);
  CHECK(tsc_accuracy(model.prototypes, test) == 1.0);
  CHECK(model.learning_rate > 0.0);
  CHECK(model.class_names == train.class_names);

  SUBCASE("same seed gives identical bytes") {
    CHECK(serialize_model(train_tsc(train, cfg)) == serialize_model(model));
  }
  SUBCASE("fixed rate skips the grid") {
    cfg.learning_rate = 0.05;
    cfg.lambda_grid.clear();
    cfg.relative_learning_rate = false;
    const auto fixed = train_tsc(train, cfg);
    CHECK(fixed.learning_rate == 0.05);
    CHECK(std::get<TscConfig>(fixed.config).lambda == cfg.lambda);
  }
  SUBCASE("grid choices are recorded in the model config") {
    const auto& chosen = std::get<TscConfig>(model.config);
    CHECK(chosen.lambda_grid.empty());
    CHECK(std::find(cfg.learning_rate_grid.begin(), cfg.learning_rate_grid.end(), chosen.learning_rate) !=
          cfg.learning_rate_grid.end());
    CHECK((chosen.lambda == 0.1 || chosen.lambda == 1.0));
  }
  SUBCASE("invalid config") {
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(train_tsc(train, cfg), InvalidArgument);
  }
}

TEST_CASE("knn1_baseline") {
  std::mt19937_64 rng(9);
  TscDataset train;
  train.class_names = {"x", "y", "z"};
  for (int n = 0; n < 12; ++n) {
    train.sequences.push_back(oracle::random_sequence(rng, 10, 1));
    train.labels.push_back(n % 3);
  }
  std::vector<Sequence> test;
  for (int n = 0; n < 8; ++n) test.push_back(oracle::random_sequence(rng, 10, 1));

  SUBCASE("a copy of a training item takes its label") {
    const std::vector<Sequence> copy{train.sequences[4]};
    for (auto m : {NnMetric::euclidean, NnMetric::dtw, NnMetric::dtw_windowed}) {
      CHECK(knn1_baseline(copy, train, m).predictions[0] == train.labels[4]);
    }
  }
  SUBCASE("full-width band equals unwindowed dtw") {
    CHECK(knn1_baseline(test, train, NnMetric::dtw_windowed, 10).predictions ==
          knn1_baseline(test, train, NnMetric::dtw).predictions);
  }
  SUBCASE("matches a brute-force scan") {
    for (auto m : {NnMetric::euclidean, NnMetric::dtw}) {
      const auto got = knn1_baseline(test, train, m).predictions;
      for (std::size_t i = 0; i < test.size(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < train.size(); ++j) {
          double d = 0.0;
          if (m == NnMetric::euclidean) {
            for (std::size_t t = 0; t < 10; ++t) d += std::pow(test[i].at(t, 0) - train.sequences[j].at(t, 0), 2);
          } else {
            d = dtw(test[i], train.sequences[j]).discrepancy;
          }
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
        CHECK(got[i] == train.labels[best]);
      }
    }
  }
  SUBCASE("window search stays in range and prefers small widths on ties") {
    CHECK(default_max_window(10) == 1);
    CHECK(default_max_window(128) == 13);
    const auto r = knn1_baseline(test, train, NnMetric::dtw_windowed);
    CHECK(r.window <= 1);
    TscDataset same = train;
    for (auto& s : same.sequences) s = Sequence(10, 1, 1.0);
    CHECK(select_window(same, 5) == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(knn1_baseline(test, TscDataset{}, NnMetric::dtw), InvalidArgument);
    const std::vector<Sequence> short_test{Sequence(9, 1)};
    CHECK_THROWS_AS(knn1_baseline(short_test, train, NnMetric::euclidean), InvalidArgument);
  }
}

TEST_CASE("dba_prototypes are per-class barycenters") {
  const auto train = two_constant_classes(5, 3);
  const auto ps = dba_prototypes(train);
  REQUIRE(ps.num_classes() == 2);
  CHECK(tsc_accuracy(ps, two_constant_classes(5, 4)) == 1.0);
}

TEST_CASE("comparison_report") {
  SUBCASE("identical methods tie") {
    const AccuracyTable t{{"a", "b"}, {"d1", "d2", "d3"}, {{0.5, 0.5}, {0.9, 0.9}, {0.1, 0.1}}};
    const auto r = comparison_report(t);
    CHECK(r.mean_ranks == std::vector<double>{1.5, 1.5});
    CHECK(r.no_worse[0][1] == 1.0);
    CHECK(r.no_worse[1][0] == 1.0);
  }
  SUBCASE("domination") {
    const AccuracyTable t{{"a", "b"}, {"d1", "d2"}, {{0.9, 0.5}, {0.8, 0.7}}};
    const auto r = comparison_report(t);
    CHECK(r.mean_ranks == std::vector<double>{1.0, 2.0});
    CHECK(r.no_worse[0][1] == 1.0);
    CHECK(r.no_worse[1][0] == 0.0);
  }
  SUBCASE("hand table") {
    // d1: b > a = c      -> ranks a 2.5, b 1, c 2.5
    // d2: a > c > b      -> a 1, b 3, c 2
    // d3: all equal      -> 2, 2, 2
    // d4: c > b > a      -> a 3, b 2, c 1
    const AccuracyTable t{{"a", "b", "c"},
                          {"d1", "d2", "d3", "d4"},
                          {{0.7, 0.8, 0.7}, {0.9, 0.6, 0.8}, {0.5, 0.5, 0.5}, {0.2, 0.3, 0.4}}};
    const auto r = comparison_report(t);
    CHECK(r.ranks[0] == std::vector<double>{2.5, 1.0, 2.5});
    CHECK(r.ranks[1] == std::vector<double>{1.0, 3.0, 2.0});
    CHECK(r.ranks[2] == std::vector<double>{2.0, 2.0, 2.0});
    CHECK(r.ranks[3] == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(r.mean_ranks[0] == doctest::Approx(8.5 / 4));
    CHECK(r.mean_ranks[1] == doctest::Approx(8.0 / 4));
    CHECK(r.mean_ranks[2] == doctest::Approx(7.5 / 4));
    CHECK(r.no_worse[0][2] == 0.75);  // d1 tie, d2 win, d3 tie, d4 loss
    CHECK(r.no_worse[2][0] == 0.75);
    CHECK(r.no_worse[1][0] == 0.75);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(comparison_report({{"a"}, {"d"}, {{0.5}}}), InvalidArgument);
    CHECK_THROWS_AS(comparison_report({{"a", "b"}, {"d"}, {{0.5}}}), InvalidArgument);
  }
}
