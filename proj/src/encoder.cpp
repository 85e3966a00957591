#include "dpdtw/encoder.hpp"

#include <cmath>
#include <random>

#include "dpdtw/errors.hpp"
#include "dpdtw/optim.hpp"

namespace dpdtw {

Encoder Encoder::identity(std::size_t dim) {
  if (dim == 0) throw InvalidArgument("encoder dimensions must be positive");
  Encoder e;
  e.kind_ = Kind::identity;
  e.input_dim_ = dim;
  e.output_dim_ = dim;
  return e;
}

Encoder Encoder::affine(std::size_t input_dim, std::size_t output_dim) {
  Encoder e = window_linear(input_dim, output_dim, 1);
  e.kind_ = Kind::affine;
  return e;
}

Encoder Encoder::window_linear(std::size_t input_dim, std::size_t output_dim, std::size_t window) {
  if (input_dim == 0 || output_dim == 0) throw InvalidArgument("encoder dimensions must be positive");
  if (window == 0) throw InvalidArgument("encoder window must be at least 1");
  Encoder e;
  e.kind_ = Kind::window_linear;
  e.input_dim_ = input_dim;
  e.output_dim_ = output_dim;
  e.window_ = window;
  e.params_.assign(output_dim * input_dim * window + output_dim, 0.0);
  return e;
}

Encoder Encoder::from_parts(Kind kind, std::size_t input_dim, std::size_t output_dim,
                            std::size_t window, std::vector<double> params) {
  Encoder e;
  switch (kind) {
    case Kind::identity:
      if (input_dim != output_dim) throw InvalidArgument("identity encoder needs equal dimensions");
      e = identity(input_dim);
      break;
    case Kind::affine:
      e = affine(input_dim, output_dim);
      break;
    case Kind::window_linear:
      e = window_linear(input_dim, output_dim, window);
      break;
  }
  if (params.size() != e.params_.size()) {
    throw InvalidArgument("encoder expects " + std::to_string(e.params_.size()) +
                          " parameters, got " + std::to_string(params.size()));
  }
  e.params_ = std::move(params);
  return e;
}

void Encoder::initialize(std::uint64_t seed) {
  if (kind_ == Kind::identity) return;
  std::fill(params_.begin(), params_.end(), 0.0);
  if (input_dim_ == output_dim_) {
    const std::size_t centre = window_ / 2;
    for (std::size_t r = 0; r < output_dim_; ++r) weight(r, centre * input_dim_ + r) = 1.0;
    return;
  }
  auto rng = make_stream(seed, 0x656e63ULL);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(weight_cols())));
  for (std::size_t r = 0; r < output_dim_; ++r) {
    for (std::size_t c = 0; c < weight_cols(); ++c) weight(r, c) = normal(rng);
  }
}

std::string to_string(Encoder::Kind kind) {
  switch (kind) {
    case Encoder::Kind::identity:
      return "identity";
    case Encoder::Kind::affine:
      return "affine";
    case Encoder::Kind::window_linear:
      return "window_linear";
  }
  return "identity";
}

Encoder::Kind encoder_kind_from_string(const std::string& name) {
  if (name == "identity") return Encoder::Kind::identity;
  if (name == "affine") return Encoder::Kind::affine;
  if (name == "window_linear") return Encoder::Kind::window_linear;
  throw InvalidArgument("unknown encoder kind '" + name + "'");
}

Sequence encode(const Sequence& x, const Encoder& encoder) {
  if (x.dim() != encoder.input_dim()) {
    throw InvalidArgument("encode: input has " + std::to_string(x.dim()) + " features, encoder expects " +
                          std::to_string(encoder.input_dim()));
  }
  if (encoder.kind() == Encoder::Kind::identity) return x;

  const std::size_t len = x.length();
  const std::size_t in = encoder.input_dim();
  const std::size_t half = encoder.window() / 2;
  Sequence s(len, encoder.output_dim());
  for (std::size_t t = 0; t < len; ++t) {
    auto out = s.frame(t);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = encoder.bias(r);
    for (std::size_t tap = 0; tap < encoder.window(); ++tap) {
      // source frame t + tap - half, zero outside [0, len)
      if (t + tap < half || t + tap - half >= len) continue;
      const auto src = x.frame(t + tap - half);
      for (std::size_t r = 0; r < out.size(); ++r) {
        double acc = 0.0;
        for (std::size_t d = 0; d < in; ++d) acc += encoder.weight(r, tap * in + d) * src[d];
        out[r] += acc;
      }
    }
  }
  return s;
}

std::vector<double> encoder_backward(const Sequence& x, const Encoder& encoder,
                                     const Sequence& upstream) {
  if (x.dim() != encoder.input_dim()) throw InvalidArgument("encoder_backward: input width mismatch");
  if (upstream.length() != x.length() || upstream.dim() != encoder.output_dim()) {
    throw InvalidArgument("encoder_backward: upstream gradient shape mismatch");
  }
  std::vector<double> grad(encoder.num_parameters(), 0.0);
  if (encoder.kind() == Encoder::Kind::identity) return grad;

  const std::size_t len = x.length();
  const std::size_t in = encoder.input_dim();
  const std::size_t cols = encoder.weight_cols();
  const std::size_t half = encoder.window() / 2;
  const std::size_t bias_offset = encoder.output_dim() * cols;
  for (std::size_t t = 0; t < len; ++t) {
    const auto g = upstream.frame(t);
    for (std::size_t r = 0; r < g.size(); ++r) grad[bias_offset + r] += g[r];
    for (std::size_t tap = 0; tap < encoder.window(); ++tap) {
      if (t + tap < half || t + tap - half >= len) continue;
      const auto src = x.frame(t + tap - half);
      for (std::size_t r = 0; r < g.size(); ++r) {
        if (g[r] == 0.0) continue;
        double* row = grad.data() + r * cols + tap * in;
        for (std::size_t d = 0; d < in; ++d) row[d] += g[r] * src[d];
      }
    }
  }
  return grad;
}

}  // namespace dpdtw
