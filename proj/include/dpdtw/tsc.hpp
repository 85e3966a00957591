#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpdtw/dtw.hpp"
#include "dpdtw/model.hpp"
#include "dpdtw/prototypes.hpp"

namespace dpdtw {

/// Labelled single-class sequences. Labels are 0-based indices into
/// `class_names`.
struct TscDataset {
  std::string name;
  std::vector<Sequence> sequences;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return sequences.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::size_t max_length() const;
  /// Subset by index; keeps the vocabulary.
  TscDataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

/// Per-class DTW results of one input against every prototype.
std::vector<DtwResult> class_discrepancies(const Sequence& s, const PrototypeSet& prototypes,
                                           const BandConstraint& band = {});

/// softmax(-d / temperature), stabilised by shifting with min(d).
std::vector<double> softmax_neg(std::span<const double> discrepancies, double temperature = 1.0);

struct ClassScores {
  std::vector<double> discrepancies;
  std::vector<double> probabilities;
};

ClassScores class_scores(const Sequence& s, const PrototypeSet& prototypes, const TscConfig& config);

struct TscLoss {
  double total = 0.0;
  double cross_entropy = 0.0;
  double distance = 0.0;
  /// d total / d prototype k, shaped like the prototypes.
  std::vector<Sequence> gradients;
  /// Per-class alignments the gradient was taken through.
  std::vector<Alignment> alignments;
};

/// Cross-entropy over negated discrepancies plus lambda times the
/// discrepancy to the true class, with its envelope gradient.
TscLoss tsc_loss(const Sequence& s, std::size_t label, const PrototypeSet& prototypes,
                 const TscConfig& config);

/// Loss value only (no paths), used for full-data evaluation.
LossRecord tsc_evaluate(const TscDataset& data, const PrototypeSet& prototypes, const TscConfig& config);

/// Medoid initialisation followed by mini-batch Adam on the mean batch loss.
/// history[0] is the full-data loss at initialisation, history[e] after epoch e.
Model train_tsc(const TscDataset& train, const TscConfig& config);

/// argmin_k d(p_k, s); ties go to the smaller class index.
std::size_t predict(const Sequence& s, const PrototypeSet& prototypes, const BandConstraint& band = {});

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

double tsc_accuracy(const PrototypeSet& prototypes, const TscDataset& data, const BandConstraint& band = {});

/// Nearest-centroid accuracy of per-class DBA barycenters started from the
/// class medoids.
PrototypeSet dba_prototypes(const TscDataset& train, const DbaOptions& options = {});

enum class NnMetric { euclidean, dtw, dtw_windowed };

struct KnnResult {
  std::vector<std::size_t> predictions;
  /// Band width used for dtw_windowed.
  std::size_t window = 0;
};

/// Largest width searched for dtw_windowed: ceil(0.1 * length).
std::size_t default_max_window(std::size_t length);

/// Leave-one-out 1-NN accuracy over widths 0..max_window; ties to the
/// smaller width.
std::size_t select_window(const TscDataset& train, std::size_t max_window);

/// 1-NN labels for `test` against `train`. For dtw_windowed a missing
/// `window` is chosen by select_window(). Nearest-neighbour ties go to the
/// earlier training item.
KnnResult knn1_baseline(std::span<const Sequence> test, const TscDataset& train, NnMetric metric,
                        std::optional<std::size_t> window = std::nullopt);

/// Accuracy table: rows are datasets, columns methods.
struct AccuracyTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> accuracy;  // [dataset][method]
};

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> ranks;  // [dataset][method], 1 = best, ties averaged
  std::vector<double> mean_ranks;
  /// no_worse[a][b]: fraction of datasets where method a >= method b.
  std::vector<std::vector<double>> no_worse;
};

ComparisonReport comparison_report(const AccuracyTable& table);

}  // namespace dpdtw
