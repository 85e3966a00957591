#include "dpdtw/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpdtw/errors.hpp"

namespace dpdtw {

PrototypeSet::PrototypeSet(std::vector<Sequence> prototypes) : prototypes_(std::move(prototypes)) {
  for (const auto& p : prototypes_) {
    p.validate("prototype");
    if (p.length() != length() || p.dim() != dim()) {
      throw InvalidArgument("prototypes must share length and feature dimension");
    }
  }
}

std::size_t medoid_index(std::span<const Sequence> members, const BandConstraint& band) {
  if (members.empty()) throw InvalidArgument("medoid of an empty collection");
  const std::size_t n = members.size();
  std::vector<double> sums(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = dtw_discrepancy(members[a], members[b], band);
      sums[a] += d;
      sums[b] += d;
    }
  }
  return static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
}

PrototypeSet init_medoid_prototypes(std::span<const Sequence> sequences,
                                    std::span<const std::size_t> labels, std::size_t num_classes,
                                    std::size_t length) {
  if (sequences.size() != labels.size()) throw InvalidArgument("one label per sequence required");
  if (length == 0) throw InvalidArgument("prototype length must be positive");
  std::vector<std::vector<Sequence>> by_class(num_classes);
  for (std::size_t n = 0; n < sequences.size(); ++n) {
    if (labels[n] >= num_classes) {
      throw InvalidArgument("label " + std::to_string(labels[n] + 1) + " outside 1.." +
                            std::to_string(num_classes));
    }
    by_class[labels[n]].push_back(sequences[n]);
  }
  std::vector<Sequence> protos;
  protos.reserve(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (by_class[k].empty()) {
      throw InvalidArgument("class " + std::to_string(k + 1) + " has no training sequences");
    }
    const std::size_t m = medoid_index(by_class[k]);
    protos.push_back(resample_linear(by_class[k][m], length));
  }
  return PrototypeSet(std::move(protos));
}

OrderingSequence temp_cat(const Transcript& transcript, const PrototypeSet& prototypes) {
  if (transcript.empty()) throw InvalidArgument("transcript is empty");
  const std::size_t len = prototypes.length();
  OrderingSequence out{Sequence(transcript.size() * len, prototypes.dim()), transcript, len};
  auto dst = out.data.values();
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const std::size_t k = transcript[i];
    if (k >= prototypes.num_classes()) {
      throw InvalidArgument("transcript entry " + std::to_string(k + 1) + " is not a known class");
    }
    const auto src = prototypes[k].values();
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * src.size()));
  }
  return out;
}

std::size_t position_to_action(std::size_t t, const Transcript& transcript,
                               std::size_t prototype_length) {
  if (prototype_length == 0 || t >= transcript.size() * prototype_length) {
    throw InvalidArgument("position " + std::to_string(t) + " outside the ordering sequence");
  }
  return transcript[t / prototype_length];
}

namespace {

double summed_discrepancy(std::span<const Sequence> sequences, const Sequence& center) {
  double total = 0.0;
  for (const auto& s : sequences) total += dtw_discrepancy(center, s);
  return total;
}

}  // namespace

DbaResult dba(std::span<const Sequence> sequences, const Sequence& init, const DbaOptions& options) {
  if (sequences.empty()) throw InvalidArgument("dba: empty collection");
  for (const auto& s : sequences) {
    if (s.dim() != init.dim()) throw InvalidArgument("dba: feature dimension mismatch");
  }
  DbaResult result{init, {summed_discrepancy(sequences, init)}, 0};
  const std::size_t len = init.length();
  const std::size_t dim = init.dim();

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    Sequence sums(len, dim);
    std::vector<std::size_t> counts(len, 0);
    double objective = 0.0;
    for (const auto& s : sequences) {
      const DtwResult r = dtw(result.barycenter, s);
      objective += r.discrepancy;
      for (const auto& [i, j] : r.alignment) {
        auto acc = sums.frame(i);
        const auto f = s.frame(j);
        for (std::size_t d = 0; d < dim; ++d) acc[d] += f[d];
        ++counts[i];
      }
    }
    Sequence next(len, dim);
    double change = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        next.at(i, d) = sums.at(i, d) / static_cast<double>(counts[i]);
        change = std::max(change, std::abs(next.at(i, d) - result.barycenter.at(i, d)));
      }
    }
    const double next_objective = summed_discrepancy(sequences, next);
    // The mean minimises squared, not plain, distances, so an update can
    // overshoot the summed-norm objective.
    if (next_objective > objective) break;
    result.barycenter = std::move(next);
    result.objective.push_back(next_objective);
    result.iterations = it + 1;
    if (change < options.tol) break;
  }
  return result;
}

}  // namespace dpdtw
