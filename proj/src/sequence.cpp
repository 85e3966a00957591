#include "dpdtw/sequence.hpp"

#include <cmath>
#include <string>

#include "dpdtw/errors.hpp"

namespace dpdtw {

Sequence::Sequence(std::size_t length, std::size_t dim, double fill)
    : length_(length), dim_(dim), data_(length * dim, fill) {}

Sequence Sequence::from_values(std::span<const double> values) {
  Sequence s(values.size(), 1);
  std::copy(values.begin(), values.end(), s.data_.begin());
  return s;
}

Sequence Sequence::from_values(std::initializer_list<double> values) {
  return from_values(std::span<const double>(values.begin(), values.size()));
}

Sequence Sequence::from_frames(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) return {};
  const std::size_t dim = frames.front().size();
  Sequence s(frames.size(), dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != dim) {
      throw InvalidArgument("frame " + std::to_string(t) + " has width " +
                            std::to_string(frames[t].size()) + ", expected " +
                            std::to_string(dim));
    }
    std::copy(frames[t].begin(), frames[t].end(), s.frame(t).begin());
  }
  return s;
}

bool Sequence::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Sequence::validate(const char* what) const {
  if (length_ == 0 || dim_ == 0) {
    throw InvalidArgument(std::string(what) + " must have at least one frame and one feature");
  }
  if (!all_finite()) throw InvalidArgument(std::string(what) + " contains non-finite values");
}

double frame_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

Sequence resample_linear(const Sequence& s, std::size_t length) {
  if (s.empty() || length == 0) throw InvalidArgument("cannot resample an empty sequence");
  if (length == s.length()) return s;
  Sequence out(length, s.dim());
  const double last = static_cast<double>(s.length() - 1);
  for (std::size_t t = 0; t < length; ++t) {
    const double pos =
        length == 1 ? last / 2.0 : static_cast<double>(t) * last / static_cast<double>(length - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.length() - 1);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < s.dim(); ++d) {
      out.at(t, d) = (1.0 - w) * s.at(lo, d) + w * s.at(hi, d);
    }
  }
  return out;
}

}  // namespace dpdtw
