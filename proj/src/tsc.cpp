#include "dpdtw/tsc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dpdtw/errors.hpp"
#include "dpdtw/optim.hpp"

namespace dpdtw {

void TscConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  for (double l : lambda_grid) {
    if (!(l >= 0.0)) throw InvalidArgument("lambda grid entries must be >= 0");
  }
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw InvalidArgument("batch fraction must be in (0, 1]");
  }
  if (learning_rate <= 0.0 && learning_rate_grid.empty()) {
    throw InvalidArgument("no learning rate and an empty learning-rate grid");
  }
  for (double lr : learning_rate_grid) {
    if (!(lr > 0.0)) throw InvalidArgument("learning-rate grid entries must be > 0");
  }
  if (cv_folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
}

std::size_t TscDataset::max_length() const {
  std::size_t len = 0;
  for (const auto& s : sequences) len = std::max(len, s.length());
  return len;
}

TscDataset TscDataset::subset(std::span<const std::size_t> indices) const {
  TscDataset out{name, {}, {}, class_names};
  out.sequences.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.sequences.push_back(sequences[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

void TscDataset::validate() const {
  if (sequences.empty()) throw InvalidArgument("dataset '" + name + "' is empty");
  if (labels.size() != sequences.size()) throw InvalidArgument("dataset '" + name + "': label count mismatch");
  const std::size_t dim = sequences.front().dim();
  for (std::size_t n = 0; n < sequences.size(); ++n) {
    sequences[n].validate("series");
    if (sequences[n].dim() != dim) throw InvalidArgument("dataset '" + name + "': mixed feature dimensions");
    if (labels[n] >= class_names.size()) {
      throw InvalidArgument("dataset '" + name + "': label index out of range at item " + std::to_string(n));
    }
  }
}

std::vector<DtwResult> class_discrepancies(const Sequence& s, const PrototypeSet& prototypes,
                                           const BandConstraint& band) {
  if (s.dim() != prototypes.dim()) {
    throw InvalidArgument("input has " + std::to_string(s.dim()) + " features, prototypes have " +
                          std::to_string(prototypes.dim()));
  }
  std::vector<DtwResult> out;
  out.reserve(prototypes.num_classes());
  for (std::size_t k = 0; k < prototypes.num_classes(); ++k) out.push_back(dtw(prototypes[k], s, band));
  return out;
}

std::vector<double> softmax_neg(std::span<const double> discrepancies, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  if (discrepancies.empty()) return {};
  const double lo = *std::min_element(discrepancies.begin(), discrepancies.end());
  std::vector<double> p(discrepancies.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(-(discrepancies[k] - lo) / temperature);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

ClassScores class_scores(const Sequence& s, const PrototypeSet& prototypes, const TscConfig& config) {
  ClassScores scores;
  for (const auto& r : class_discrepancies(s, prototypes, config.band)) {
    scores.discrepancies.push_back(r.discrepancy);
  }
  scores.probabilities = softmax_neg(scores.discrepancies, config.temperature);
  return scores;
}

namespace {

// -log softmax(-d/T)[y] without forming the probabilities.
double cross_entropy(std::span<const double> d, std::size_t y, double temperature) {
  const double lo = *std::min_element(d.begin(), d.end());
  double z = 0.0;
  for (double v : d) z += std::exp(-(v - lo) / temperature);
  return (d[y] - lo) / temperature + std::log(z);
}

void require_label(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw InvalidArgument("label " + std::to_string(label + 1) + " outside 1.." + std::to_string(num_classes));
  }
}

}  // namespace

TscLoss tsc_loss(const Sequence& s, std::size_t label, const PrototypeSet& prototypes,
                 const TscConfig& config) {
  require_label(label, prototypes.num_classes());
  const auto results = class_discrepancies(s, prototypes, config.band);
  std::vector<double> d;
  d.reserve(results.size());
  for (const auto& r : results) d.push_back(r.discrepancy);
  const auto sigma = softmax_neg(d, config.temperature);

  TscLoss loss;
  loss.cross_entropy = cross_entropy(d, label, config.temperature);
  loss.distance = d[label];
  loss.total = loss.cross_entropy + config.lambda * loss.distance;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const double indicator = k == label ? 1.0 : 0.0;
    const double coef = (indicator - sigma[k]) / config.temperature + config.lambda * indicator;
    Sequence g = dtw_subgradient(prototypes[k], s, results[k].alignment).first;
    for (double& v : g.values()) v *= coef;
    loss.gradients.push_back(std::move(g));
    loss.alignments.push_back(results[k].alignment);
  }
  return loss;
}

LossRecord tsc_evaluate(const TscDataset& data, const PrototypeSet& prototypes, const TscConfig& config) {
  const std::size_t n = data.size();
  std::vector<LossRecord> per(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> d(prototypes.num_classes());
    for (std::size_t k = 0; k < d.size(); ++k) {
      d[k] = dtw_discrepancy(prototypes[k], data.sequences[i], config.band);
    }
    const std::size_t y = data.labels[i];
    per[i].primary = cross_entropy(d, y, config.temperature);
    per[i].distance = d[y];
    per[i].total = per[i].primary + config.lambda * per[i].distance;
  });
  LossRecord mean;
  for (const auto& r : per) {
    mean.total += r.total;
    mean.primary += r.primary;
    mean.distance += r.distance;
  }
  const double inv = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  mean.total *= inv;
  mean.primary *= inv;
  mean.distance *= inv;
  if (!std::isfinite(mean.total)) throw NumericError("training loss is not finite");
  return mean;
}

namespace {

struct FitResult {
  PrototypeSet prototypes;
  std::vector<LossRecord> history;
};

FitResult fit_tsc(const TscDataset& train, const TscConfig& config, double learning_rate,
                  bool record_history = true) {
  PrototypeSet protos = init_medoid_prototypes(train.sequences, train.labels, train.num_classes(),
                                               train.max_length());
  const std::size_t num_classes = protos.num_classes();
  std::vector<std::size_t> sizes(num_classes, protos.length() * protos.dim());
  AdamState adam(AdamOptions{learning_rate}, sizes);

  FitResult fit;
  if (record_history) fit.history.push_back(tsc_evaluate(train, protos, config));
  const BatchSpec spec = BatchSpec::of_fraction(config.batch_fraction, config.seed);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const auto& batch : minibatch_iter(train.size(), spec, epoch)) {
      std::vector<TscLoss> losses(batch.size());
      parallel_for(batch.size(), [&](std::size_t b) {
        const std::size_t i = batch[b];
        losses[b] = tsc_loss(train.sequences[i], train.labels[i], protos, config);
      });
      std::vector<std::vector<double>> grads(num_classes, std::vector<double>(sizes[0], 0.0));
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (const auto& l : losses) {
        for (std::size_t k = 0; k < num_classes; ++k) {
          const auto g = l.gradients[k].values();
          for (std::size_t j = 0; j < g.size(); ++j) grads[k][j] += g[j] * inv;
        }
      }
      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grad_views;
      for (std::size_t k = 0; k < num_classes; ++k) {
        params.push_back(protos.parameters(k));
        grad_views.emplace_back(grads[k]);
      }
      adam_step(params, grad_views, adam);
    }
    if (!record_history) continue;
    LossRecord rec = tsc_evaluate(train, protos, config);
    rec.step = epoch;
    fit.history.push_back(rec);
  }
  fit.prototypes = std::move(protos);
  return fit;
}

// Stratified fold assignment: each class is shuffled and dealt round-robin,
// starting where the previous class stopped. Classes with a single member
// never leave the fitting part (fold index `folds`).
std::vector<std::size_t> assign_folds(const TscDataset& data, std::size_t folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<std::size_t> fold(data.size(), folds);
  auto rng = make_stream(seed, 0x666f6c64ULL);
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    if (members.size() < 2) continue;
    for (std::size_t i : members) fold[i] = next++ % folds;
  }
  return fold;
}

double value_scale(const TscDataset& data) {
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : data.sequences) {
    for (double v : s.values()) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
  return var > 0.0 ? std::sqrt(var) : 1.0;
}

// Joint cross-validated search over the learning-rate and lambda grids.
// Candidates are ranked by held-out accuracy, then held-out cross-entropy;
// earlier grid entries win exact ties.
TscConfig select_hyperparameters(const TscDataset& train, const TscConfig& config, double scale) {
  std::vector<double> rates{config.learning_rate};
  if (config.learning_rate <= 0.0) rates = config.learning_rate_grid;
  std::vector<double> lambdas{config.lambda};
  if (!config.lambda_grid.empty()) lambdas = config.lambda_grid;

  TscConfig best = config;
  best.learning_rate = rates.front();
  best.lambda = lambdas.front();
  best.lambda_grid.clear();
  if (rates.size() == 1 && lambdas.size() == 1) return best;

  const std::vector<std::size_t> fold = assign_folds(train, config.cv_folds, config.seed);
  std::vector<TscDataset> fit_parts;
  std::vector<TscDataset> held_parts;
  for (std::size_t f = 0; f < config.cv_folds; ++f) {
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> held_idx;
    for (std::size_t i = 0; i < train.size(); ++i) (fold[i] == f ? held_idx : fit_idx).push_back(i);
    if (held_idx.empty()) continue;
    fit_parts.push_back(train.subset(fit_idx));
    held_parts.push_back(train.subset(held_idx));
  }

  double best_acc = -1.0;
  double best_ce = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    for (double lr : rates) {
      TscConfig cand = best;
      cand.lambda = lambda;
      cand.learning_rate = lr;
      double correct = 0.0;
      double ce = 0.0;
      for (std::size_t f = 0; f < fit_parts.size(); ++f) {
        const FitResult r = fit_tsc(fit_parts[f], cand, lr * scale, false);
        const double n = static_cast<double>(held_parts[f].size());
        correct += tsc_accuracy(r.prototypes, held_parts[f], config.band) * n;
        ce += tsc_evaluate(held_parts[f], r.prototypes, cand).primary * n;
      }
      if (correct > best_acc || (correct == best_acc && ce < best_ce)) {
        best = cand;
        best_acc = correct;
        best_ce = ce;
      }
    }
  }
  return best;
}

}  // namespace

Model train_tsc(const TscDataset& train, const TscConfig& config) {
  config.validate();
  train.validate();
  const double scale = config.relative_learning_rate ? value_scale(train) : 1.0;
  const TscConfig chosen = select_hyperparameters(train, config, scale);
  FitResult fit = fit_tsc(train, chosen, chosen.learning_rate * scale);

  Model model;
  model.mode = ModelMode::tsc;
  model.class_names = train.class_names;
  model.encoder = Encoder::identity(fit.prototypes.dim());
  model.config = chosen;
  model.history = std::move(fit.history);
  model.prototypes = std::move(fit.prototypes);
  model.learning_rate = chosen.learning_rate * scale;
  return model;
}

std::size_t predict(const Sequence& s, const PrototypeSet& prototypes, const BandConstraint& band) {
  if (s.dim() != prototypes.dim()) throw InvalidArgument("predict: feature dimension mismatch");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < prototypes.num_classes(); ++k) {
    const double d = dtw_discrepancy(prototypes[k], s, band);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double tsc_accuracy(const PrototypeSet& prototypes, const TscDataset& data, const BandConstraint& band) {
  std::vector<std::size_t> pred(data.size());
  parallel_for(data.size(), [&](std::size_t i) { pred[i] = predict(data.sequences[i], prototypes, band); });
  return accuracy(pred, data.labels);
}

PrototypeSet dba_prototypes(const TscDataset& train, const DbaOptions& options) {
  train.validate();
  const PrototypeSet medoids =
      init_medoid_prototypes(train.sequences, train.labels, train.num_classes(), train.max_length());
  std::vector<Sequence> out;
  for (std::size_t k = 0; k < medoids.num_classes(); ++k) {
    std::vector<Sequence> members;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.labels[i] == k) members.push_back(train.sequences[i]);
    }
    out.push_back(dba(members, medoids[k], options).barycenter);
  }
  return PrototypeSet(std::move(out));
}

std::size_t default_max_window(std::size_t length) {
  return static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(length)));
}

namespace {

double nn_distance(const Sequence& a, const Sequence& b, NnMetric metric, std::size_t window) {
  switch (metric) {
    case NnMetric::euclidean:
      return euclidean(a, b);
    case NnMetric::dtw:
      return dtw_discrepancy(a, b);
    case NnMetric::dtw_windowed:
      return dtw_discrepancy(a, b, BandConstraint::sakoe_chiba(window));
  }
  return 0.0;
}

}  // namespace

std::size_t select_window(const TscDataset& train, std::size_t max_window) {
  train.validate();
  const std::size_t n = train.size();
  std::size_t best_w = 0;
  std::size_t best_hits = 0;
  for (std::size_t w = 0; w <= max_window; ++w) {
    std::vector<std::size_t> hit(n, 0);
    parallel_for(n, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t label = train.labels[i] + 1;  // no neighbour -> miss
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = nn_distance(train.sequences[i], train.sequences[j], NnMetric::dtw_windowed, w);
        if (d < best) {
          best = d;
          label = train.labels[j];
        }
      }
      hit[i] = label == train.labels[i] ? 1 : 0;
    });
    const std::size_t hits = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
    if (w == 0 || hits > best_hits) {
      best_hits = hits;
      best_w = w;
    }
  }
  return best_w;
}

KnnResult knn1_baseline(std::span<const Sequence> test, const TscDataset& train, NnMetric metric,
                        std::optional<std::size_t> window) {
  if (train.size() == 0) throw InvalidArgument("1-NN baseline needs a nonempty training set");
  KnnResult result;
  if (metric == NnMetric::dtw_windowed) {
    result.window = window ? *window : select_window(train, default_max_window(train.max_length()));
  }
  result.predictions.resize(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t label = 0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      const double d = nn_distance(test[i], train.sequences[j], metric, result.window);
      if (d < best) {
        best = d;
        label = train.labels[j];
      }
    }
    result.predictions[i] = label;
  });
  return result;
}

ComparisonReport comparison_report(const AccuracyTable& table) {
  const std::size_t num_methods = table.methods.size();
  if (num_methods < 2) throw InvalidArgument("comparison needs at least two methods");
  if (table.accuracy.size() != table.datasets.size() || table.datasets.empty()) {
    throw InvalidArgument("comparison table needs one row per dataset");
  }
  ComparisonReport report;
  report.methods = table.methods;
  report.mean_ranks.assign(num_methods, 0.0);
  report.no_worse.assign(num_methods, std::vector<double>(num_methods, 0.0));
  for (std::size_t r = 0; r < table.datasets.size(); ++r) {
    const auto& row = table.accuracy[r];
    if (row.size() != num_methods) {
      throw InvalidArgument("dataset '" + table.datasets[r] + "' is missing method results");
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("dataset '" + table.datasets[r] + "' has a missing cell");
    }
    std::vector<std::size_t> order(num_methods);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    std::vector<double> ranks(num_methods);
    for (std::size_t i = 0; i < num_methods;) {
      std::size_t j = i;
      while (j + 1 < num_methods && row[order[j + 1]] == row[order[i]]) ++j;
      const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
      i = j + 1;
    }
    for (std::size_t m = 0; m < num_methods; ++m) report.mean_ranks[m] += ranks[m];
    for (std::size_t a = 0; a < num_methods; ++a) {
      for (std::size_t b = 0; b < num_methods; ++b) report.no_worse[a][b] += row[a] >= row[b] ? 1.0 : 0.0;
    }
    report.ranks.push_back(std::move(ranks));
  }
  const double inv = 1.0 / static_cast<double>(table.datasets.size());
  for (double& v : report.mean_ranks) v *= inv;
  for (auto& row : report.no_worse) {
    for (double& v : row) v *= inv;
  }
  return report;
}

}  // namespace dpdtw
