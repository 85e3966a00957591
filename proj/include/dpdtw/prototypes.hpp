#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpdtw/dtw.hpp"
#include "dpdtw/sequence.hpp"

namespace dpdtw {

/// Ordered action list; entries are 0-based class indices.
using Transcript = std::vector<std::size_t>;

/// One prototype sequence per class, all sharing (length, dim).
class PrototypeSet {
 public:
  PrototypeSet() = default;
  explicit PrototypeSet(std::vector<Sequence> prototypes);

  std::size_t num_classes() const { return prototypes_.size(); }
  std::size_t length() const { return prototypes_.empty() ? 0 : prototypes_.front().length(); }
  std::size_t dim() const { return prototypes_.empty() ? 0 : prototypes_.front().dim(); }
  bool empty() const { return prototypes_.empty(); }

  const Sequence& operator[](std::size_t k) const { return prototypes_[k]; }
  /// Mutable view of one prototype's values; the shape cannot change.
  std::span<double> parameters(std::size_t k) { return prototypes_[k].values(); }
  const std::vector<Sequence>& prototypes() const { return prototypes_; }

  bool operator==(const PrototypeSet&) const = default;

 private:
  std::vector<Sequence> prototypes_;
};

/// Index of the member minimising the summed DTW discrepancy to all others.
/// Ties go to the earliest member.
std::size_t medoid_index(std::span<const Sequence> members, const BandConstraint& band = {});

/// Medoid of each class, resampled to `length` frames.
PrototypeSet init_medoid_prototypes(std::span<const Sequence> sequences,
                                    std::span<const std::size_t> labels, std::size_t num_classes,
                                    std::size_t length);

/// Concatenation of prototypes along a transcript.
struct OrderingSequence {
  Sequence data;
  Transcript source;
  std::size_t prototype_length = 0;
};

OrderingSequence temp_cat(const Transcript& transcript, const PrototypeSet& prototypes);

/// Class of position `t` (0-based) in an ordering sequence.
std::size_t position_to_action(std::size_t t, const Transcript& transcript,
                               std::size_t prototype_length);

struct DbaOptions {
  std::size_t max_iters = 10;
  double tol = 1e-6;  // on the max absolute change of the barycenter
};

struct DbaResult {
  Sequence barycenter;
  /// Summed discrepancy before the first update and after each accepted one.
  std::vector<double> objective;
  std::size_t iterations = 0;
};

/// DTW barycenter averaging. Each iteration aligns every member to the
/// current barycenter and replaces each barycenter frame by the mean of the
/// frames aligned to it. An update that would raise the summed discrepancy
/// is rejected and the iteration stops.
DbaResult dba(std::span<const Sequence> sequences, const Sequence& init, const DbaOptions& options = {});

}  // namespace dpdtw
