#pragma once

#include <compare>
#include <cstddef>
#include <vector>

#include "dpdtw/sequence.hpp"

namespace dpdtw {

/// One aligned pair of time indices (0-based): `first` indexes the first
/// argument of dtw(), `second` the second.
struct IndexPair {
  std::size_t first = 0;
  std::size_t second = 0;
  auto operator<=>(const IndexPair&) const = default;
};

/// Monotone, continuous warping path from (0, 0) to (n1 - 1, n2 - 1).
using Alignment = std::vector<IndexPair>;

struct DtwResult {
  Alignment alignment;
  double discrepancy = 0.0;
};

/// Sakoe-Chiba band normalised for unequal lengths: with 1-based indices a
/// cell (i, j) is admitted iff |i * n2 / n1 - j| <= width.
struct BandConstraint {
  enum class Kind { none, sakoe_chiba };

  Kind kind = Kind::none;
  std::size_t width = 0;

  static BandConstraint none() { return {}; }
  static BandConstraint sakoe_chiba(std::size_t width) { return {Kind::sakoe_chiba, width}; }

  bool admits(std::size_t i, std::size_t j, std::size_t n1, std::size_t n2) const;

  bool operator==(const BandConstraint&) const = default;
};

/// Whether some warping path of an n1 x n2 table stays inside the band.
bool band_feasible(std::size_t n1, std::size_t n2, const BandConstraint& band);
/// Smallest Sakoe-Chiba width that admits a path for these lengths.
std::size_t min_feasible_width(std::size_t n1, std::size_t n2);

/// Pairwise frame distances, entry (i, j) = ||a[i] - b[j]||.
Matrix cost_matrix(const Sequence& a, const Sequence& b);

/// Exact DTW with backtracking over the full table.
///
/// Recurrence D(i,j) = c(i,j) + min(D(i-1,j-1), D(i-1,j), D(i,j-1)); equal
/// predecessors resolve diagonal, then vertical (advance in `a`), then
/// horizontal, so the returned path is deterministic.
DtwResult dtw(const Sequence& a, const Sequence& b, const BandConstraint& band = {});

/// Same discrepancy as dtw() with two rolling rows and no path. Used by the
/// nearest-neighbour scans where only the value matters.
double dtw_discrepancy(const Sequence& a, const Sequence& b, const BandConstraint& band = {});

/// Throws InvalidArgument unless `alignment` is a valid warping path for
/// lengths (n1, n2).
void validate_alignment(const Alignment& alignment, std::size_t n1, std::size_t n2);

/// Sum of frame distances along `alignment`.
double alignment_cost(const Sequence& a, const Sequence& b, const Alignment& alignment);

struct DtwGradient {
  Sequence first;   // shaped like a
  Sequence second;  // shaped like b
};

/// Subgradient of alignment_cost() with the alignment held fixed. Pairs at
/// zero distance contribute nothing.
DtwGradient dtw_subgradient(const Sequence& a, const Sequence& b, const Alignment& alignment);

/// Lock-step Euclidean distance over all frames; lengths must match.
double euclidean(const Sequence& a, const Sequence& b);

}  // namespace dpdtw
