#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dpdtw/dtw.hpp"
#include "dpdtw/encoder.hpp"
#include "dpdtw/prototypes.hpp"

namespace dpdtw {

struct TscConfig {
  double lambda = 0.1;
  /// When nonempty, lambda is cross-validated from these together with the
  /// learning rate, and `lambda` is ignored.
  std::vector<double> lambda_grid{0.1, 1.0};
  double temperature = 1.0;
  std::size_t epochs = 60;
  double batch_fraction = 0.2;
  /// Values <= 0 select the rate from `learning_rate_grid` by stratified
  /// cross-validation on the training split.
  double learning_rate = 0.0;
  std::vector<double> learning_rate_grid{1e-3, 1e-2, 1e-1};
  /// Multiply the learning rate by the standard deviation of the training
  /// values, so rates mean the same on raw and normalised series.
  bool relative_learning_rate = true;
  std::size_t cv_folds = 5;
  std::uint64_t seed = 0;
  BandConstraint band;

  void validate() const;
  bool operator==(const TscConfig&) const = default;
};

struct SegConfig {
  double delta = 1.0;
  double lambda = 0.1;
  std::size_t negatives = 50;
  std::size_t prototype_length = 8;
  std::size_t steps = 10000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Encoder::Kind encoder = Encoder::Kind::identity;
  std::size_t encoder_window = 1;
  /// Output width for linear encoders; 0 keeps the input width.
  std::size_t encoder_dim = 0;
  /// Evaluate the full training loss every this many steps (and at 0 and the end).
  std::size_t log_every = 100;

  void validate() const;
  bool operator==(const SegConfig&) const = default;
};

/// One point of a training curve. For TSC `primary` is the cross-entropy,
/// for segmentation the hinge term; `distance` is the positive discrepancy.
struct LossRecord {
  std::size_t step = 0;
  double total = 0.0;
  double primary = 0.0;
  double distance = 0.0;
  bool operator==(const LossRecord&) const = default;
};

enum class ModelMode { tsc, segmentation };

struct Model {
  static constexpr int kFormatVersion = 1;

  int version = kFormatVersion;
  ModelMode mode = ModelMode::tsc;
  /// External class names; class index k is named class_names[k].
  std::vector<std::string> class_names;
  PrototypeSet prototypes;
  Encoder encoder;
  std::variant<TscConfig, SegConfig> config;
  /// Unique training transcripts (segmentation only).
  std::vector<Transcript> references;
  std::vector<LossRecord> history;
  /// Step size actually used by Adam (after grid selection and scaling).
  /// For TSC models `config` also records the selected rate and lambda.
  double learning_rate = 0.0;

  void validate() const;
  bool operator==(const Model&) const = default;
};

}  // namespace dpdtw
