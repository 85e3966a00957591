#include "dpdtw/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "dpdtw/errors.hpp"

namespace dpdtw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Step : std::uint8_t { start, diagonal, vertical, horizontal };

void require_same_dim(const Sequence& a, const Sequence& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("dtw: empty sequence");
  if (a.dim() != b.dim()) {
    throw InvalidArgument("dtw: feature dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()) + ")");
  }
}

// Admitted column range [lo, hi] (0-based, inclusive) for row i.
struct ColumnRange {
  std::size_t lo;
  std::size_t hi;
  bool empty() const { return lo > hi; }
};

ColumnRange band_columns(std::size_t i, std::size_t n1, std::size_t n2, const BandConstraint& band) {
  if (band.kind == BandConstraint::Kind::none) return {0, n2 - 1};
  // 1-based: |I*n2 - J*n1| <= w*n1  <=>  (I*n2 - w*n1)/n1 <= J <= (I*n2 + w*n1)/n1
  const auto big_i = static_cast<std::int64_t>(i + 1);
  const auto len1 = static_cast<std::int64_t>(n1);
  const auto len2 = static_cast<std::int64_t>(n2);
  const auto w = static_cast<std::int64_t>(band.width);
  const std::int64_t center = big_i * len2;
  const std::int64_t lo_num = center - w * len1;
  const std::int64_t hi_num = center + w * len1;
  // ceil / floor division for possibly negative numerators
  std::int64_t lo = lo_num >= 0 ? (lo_num + len1 - 1) / len1 : -((-lo_num) / len1);
  std::int64_t hi = hi_num >= 0 ? hi_num / len1 : -((-hi_num + len1 - 1) / len1);
  lo = std::max<std::int64_t>(lo, 1);
  hi = std::min<std::int64_t>(hi, len2);
  if (lo > hi) return {1, 0};
  return {static_cast<std::size_t>(lo - 1), static_cast<std::size_t>(hi - 1)};
}

void require_feasible(std::size_t n1, std::size_t n2, const BandConstraint& band) {
  if (!band_feasible(n1, n2, band)) {
    throw InvalidArgument("dtw: Sakoe-Chiba width " + std::to_string(band.width) +
                          " admits no warping path for lengths " + std::to_string(n1) + " and " +
                          std::to_string(n2) + "; minimum required width is " +
                          std::to_string(min_feasible_width(n1, n2)));
  }
}

}  // namespace

bool BandConstraint::admits(std::size_t i, std::size_t j, std::size_t n1, std::size_t n2) const {
  if (kind == Kind::none) return true;
  const ColumnRange r = band_columns(i, n1, n2, *this);
  return !r.empty() && j >= r.lo && j <= r.hi;
}

bool band_feasible(std::size_t n1, std::size_t n2, const BandConstraint& band) {
  if (n1 == 0 || n2 == 0) return false;
  if (band.kind == BandConstraint::Kind::none) return true;
  // Track the first reachable column per row; every admitted column to its
  // right in the same row is then reachable via horizontal steps.
  ColumnRange row = band_columns(0, n1, n2, band);
  if (row.empty() || row.lo != 0) return false;
  std::size_t first = 0;
  std::size_t prev_hi = row.hi;
  for (std::size_t i = 1; i < n1; ++i) {
    row = band_columns(i, n1, n2, band);
    if (row.empty()) return false;
    first = std::max(first, row.lo);
    if (first > row.hi || first > prev_hi + 1) return false;
    prev_hi = row.hi;
  }
  return prev_hi == n2 - 1;
}

std::size_t min_feasible_width(std::size_t n1, std::size_t n2) {
  std::size_t w = 0;
  while (!band_feasible(n1, n2, BandConstraint::sakoe_chiba(w))) ++w;
  return w;
}

Matrix cost_matrix(const Sequence& a, const Sequence& b) {
  require_same_dim(a, b);
  Matrix cost(a.length(), b.length());
  for (std::size_t i = 0; i < a.length(); ++i) {
    for (std::size_t j = 0; j < b.length(); ++j) cost(i, j) = frame_distance(a.frame(i), b.frame(j));
  }
  return cost;
}

DtwResult dtw(const Sequence& a, const Sequence& b, const BandConstraint& band) {
  require_same_dim(a, b);
  const std::size_t n1 = a.length();
  const std::size_t n2 = b.length();
  require_feasible(n1, n2, band);

  std::vector<double> acc(n1 * n2, kInf);
  std::vector<Step> from(n1 * n2, Step::start);
  auto idx = [n2](std::size_t i, std::size_t j) { return i * n2 + j; };

  for (std::size_t i = 0; i < n1; ++i) {
    const ColumnRange cols = band_columns(i, n1, n2, band);
    for (std::size_t j = cols.lo; j <= cols.hi; ++j) {
      const double c = frame_distance(a.frame(i), b.frame(j));
      if (i == 0 && j == 0) {
        acc[0] = c;
        continue;
      }
      double best = kInf;
      Step step = Step::start;
      if (i > 0 && j > 0 && acc[idx(i - 1, j - 1)] < best) {
        best = acc[idx(i - 1, j - 1)];
        step = Step::diagonal;
      }
      if (i > 0 && acc[idx(i - 1, j)] < best) {
        best = acc[idx(i - 1, j)];
        step = Step::vertical;
      }
      if (j > 0 && acc[idx(i, j - 1)] < best) {
        best = acc[idx(i, j - 1)];
        step = Step::horizontal;
      }
      if (step == Step::start) continue;  // unreachable inside the band
      acc[idx(i, j)] = best + c;
      from[idx(i, j)] = step;
    }
  }

  DtwResult result;
  result.discrepancy = acc[idx(n1 - 1, n2 - 1)];
  std::size_t i = n1 - 1;
  std::size_t j = n2 - 1;
  result.alignment.reserve(n1 + n2 - 1);
  result.alignment.push_back({i, j});
  while (i != 0 || j != 0) {
    switch (from[idx(i, j)]) {
      case Step::diagonal:
        --i;
        --j;
        break;
      case Step::vertical:
        --i;
        break;
      case Step::horizontal:
        --j;
        break;
      case Step::start:
        throw NumericError("dtw: broken backtracking table");
    }
    result.alignment.push_back({i, j});
  }
  std::reverse(result.alignment.begin(), result.alignment.end());
  return result;
}

double dtw_discrepancy(const Sequence& a, const Sequence& b, const BandConstraint& band) {
  require_same_dim(a, b);
  const std::size_t n1 = a.length();
  const std::size_t n2 = b.length();
  require_feasible(n1, n2, band);

  std::vector<double> prev(n2, kInf);
  std::vector<double> cur(n2, kInf);
  for (std::size_t i = 0; i < n1; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    const ColumnRange cols = band_columns(i, n1, n2, band);
    for (std::size_t j = cols.lo; j <= cols.hi; ++j) {
      const double c = frame_distance(a.frame(i), b.frame(j));
      if (i == 0 && j == 0) {
        cur[0] = c;
        continue;
      }
      double best = kInf;
      if (i > 0 && j > 0) best = prev[j - 1];
      if (i > 0) best = std::min(best, prev[j]);
      if (j > 0) best = std::min(best, cur[j - 1]);
      cur[j] = best + c;
    }
    std::swap(prev, cur);
  }
  return prev[n2 - 1];
}

void validate_alignment(const Alignment& alignment, std::size_t n1, std::size_t n2) {
  if (alignment.empty()) throw InvalidArgument("alignment is empty");
  if (alignment.front() != IndexPair{0, 0}) throw InvalidArgument("alignment must start at (0, 0)");
  if (alignment.back() != IndexPair{n1 - 1, n2 - 1}) {
    throw InvalidArgument("alignment must end at (" + std::to_string(n1 - 1) + ", " +
                          std::to_string(n2 - 1) + ")");
  }
  for (std::size_t k = 1; k < alignment.size(); ++k) {
    const auto [pi, pj] = alignment[k - 1];
    const auto [i, j] = alignment[k];
    const bool ok = i >= pi && j >= pj && i - pi <= 1 && j - pj <= 1 && (i != pi || j != pj);
    if (!ok) throw InvalidArgument("alignment step " + std::to_string(k) + " is not monotone and continuous");
  }
}

double alignment_cost(const Sequence& a, const Sequence& b, const Alignment& alignment) {
  require_same_dim(a, b);
  validate_alignment(alignment, a.length(), b.length());
  double total = 0.0;
  for (const auto& [i, j] : alignment) total += frame_distance(a.frame(i), b.frame(j));
  return total;
}

DtwGradient dtw_subgradient(const Sequence& a, const Sequence& b, const Alignment& alignment) {
  require_same_dim(a, b);
  validate_alignment(alignment, a.length(), b.length());
  DtwGradient g{Sequence(a.length(), a.dim()), Sequence(b.length(), b.dim())};
  for (const auto& [i, j] : alignment) {
    const auto fa = a.frame(i);
    const auto fb = b.frame(j);
    const double dist = frame_distance(fa, fb);
    if (dist == 0.0) continue;
    auto ga = g.first.frame(i);
    auto gb = g.second.frame(j);
    for (std::size_t d = 0; d < fa.size(); ++d) {
      const double u = (fa[d] - fb[d]) / dist;
      ga[d] += u;
      gb[d] -= u;
    }
  }
  return g;
}

double euclidean(const Sequence& a, const Sequence& b) {
  require_same_dim(a, b);
  if (a.length() != b.length()) {
    throw InvalidArgument("euclidean: lengths differ (" + std::to_string(a.length()) + " vs " +
                          std::to_string(b.length()) + ")");
  }
  double sum = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k) {
    const double diff = va[k] - vb[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

}  // namespace dpdtw
