#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpdtw/encoder.hpp"
#include "dpdtw/model.hpp"
#include "dpdtw/prototypes.hpp"

namespace dpdtw {

/// A video-like sample: raw feature frames plus its ordered transcript.
/// `labels` (0-based, one per frame) are only for evaluation and may be empty.
struct SegSample {
  std::string id;
  Sequence frames;
  Transcript transcript;
  std::vector<std::size_t> labels;

  /// Throws InvalidArgument when the sample is malformed or, if labels are
  /// present, when they do not follow the transcript order after collapsing
  /// repeats. Frames labelled `background` are exempt.
  void validate(std::optional<std::size_t> background = std::nullopt) const;
};

/// Unique transcripts of a training split in first-seen order.
using ReferenceSet = std::vector<Transcript>;

ReferenceSet build_reference_set(std::span<const SegSample> train);

/// Up to `count` distinct transcripts drawn uniformly without replacement
/// from references minus `positive`.
std::vector<Transcript> sample_negatives(const ReferenceSet& references, const Transcript& positive,
                                         std::size_t count, std::mt19937_64& rng);

struct SegLoss {
  double total = 0.0;
  double hinge = 0.0;
  double distance = 0.0;
  std::size_t active = 0;  // negatives violating the margin
  std::vector<Sequence> prototype_gradients;
  std::vector<double> encoder_gradient;
  /// Fingerprint of all alignments and active hinge terms.
  std::uint64_t signature = 0;
};

/// Hinge loss on positive-vs-negative ordering discrepancies plus lambda
/// times the positive discrepancy. With no negatives only the distance term
/// remains.
SegLoss seg_loss(const Sequence& frames, const Transcript& positive,
                 std::span<const Transcript> negatives, const PrototypeSet& prototypes,
                 const Encoder& encoder, const SegConfig& config);

/// Largest class index in the corpus plus one.
std::size_t corpus_num_classes(std::span<const SegSample> samples);

/// Equal-duration split of each sample along its transcript; each class
/// prototype is the medoid of its pieces resampled to prototype_length.
PrototypeSet init_segment_prototypes(std::span<const Sequence> encoded,
                                     std::span<const SegSample> samples, std::size_t num_classes,
                                     std::size_t prototype_length);

/// Joint Adam training of prototypes and encoder parameters.
/// history[0] is the loss at initialisation (fixed evaluation negatives).
Model train_seg(std::span<const SegSample> train, const SegConfig& config);

struct Retrieval {
  std::size_t index = 0;  // into the reference set
  double discrepancy = 0.0;
};

/// Exhaustive best-matching transcript; ties go to the earliest reference.
Retrieval retrieve_transcript(const Sequence& s, const ReferenceSet& references,
                              const PrototypeSet& prototypes);

struct FrameLabels {
  std::vector<std::size_t> labels;
  /// Chosen ordering-sequence position per frame.
  std::vector<std::size_t> positions;
};

/// Aligns s to the transcript's ordering sequence; each frame takes the
/// action of its nearest aligned prototype position (ties to the earliest).
FrameLabels label_frames(const Sequence& s, const Transcript& transcript, const PrototypeSet& prototypes);

struct SegPrediction {
  Transcript transcript;
  FrameLabels frames;
  double discrepancy = 0.0;
};

/// Encodes raw frames and labels them. With `given` this is the alignment
/// setting; without it the transcript is retrieved from the model's
/// reference set (segmentation setting).
SegPrediction infer(const Model& model, const Sequence& frames, const Transcript* given = nullptr);

struct SegMetrics {
  double f_acc = 0.0;
  double iou = 0.0;
  double iod = 0.0;
};

/// Frame accuracy over all frames; IoU and IoD averaged over the
/// non-background classes present in `truth`.
SegMetrics evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                    std::optional<std::size_t> background = std::nullopt);

/// Corpus-level metrics: F-acc pooled over frames, IoU/IoD averaged over
/// every (video, class) pair.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::optional<std::size_t> background = std::nullopt) : background_(background) {}
  void add(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);
  SegMetrics result() const;
  std::size_t videos() const { return videos_; }

 private:
  std::optional<std::size_t> background_;
  std::size_t videos_ = 0;
  std::size_t frames_ = 0;
  std::size_t correct_ = 0;
  std::size_t pairs_ = 0;
  double iou_sum_ = 0.0;
  double iod_sum_ = 0.0;
};

/// One key frame per ordering-sequence position: the nearest of the frames
/// aligned with it (ties to the earliest). Non-decreasing.
std::vector<std::size_t> summarize(const Sequence& s, const Transcript& transcript,
                                   const PrototypeSet& prototypes);

/// `count` evenly spaced frame indices (bin centres) of a `length`-frame video.
std::vector<std::size_t> uniform_summary(std::size_t length, std::size_t count);

/// Fraction of key frames whose true label is the action of their block.
double summary_accuracy(std::span<const std::size_t> key_frames, std::span<const std::size_t> truth,
                        const Transcript& transcript, std::size_t prototype_length);

}  // namespace dpdtw
