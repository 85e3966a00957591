#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpdtw/sequence.hpp"

namespace dpdtw {

/// Frame-wise feature map. Output length always equals input length, so
/// frame t of the encoding corresponds exactly to input frame t.
///
/// - identity: s[t] = x[t]
/// - affine: s[t] = W x[t] + b
/// - window_linear(w): s[t] = W [x[t-h]; ...; x[t-h+w-1]] + b with h = w/2,
///   frames outside the sequence read as zeros.
///
/// Parameters are stored flat: W row-major (output_dim x input_dim*window),
/// then b.
class Encoder {
 public:
  enum class Kind { identity, affine, window_linear };

  Encoder() = default;
  static Encoder identity(std::size_t dim);
  /// Zero-initialised linear encoders.
  static Encoder affine(std::size_t input_dim, std::size_t output_dim);
  static Encoder window_linear(std::size_t input_dim, std::size_t output_dim, std::size_t window);
  /// Rebuild from persisted parts; validates the parameter count.
  static Encoder from_parts(Kind kind, std::size_t input_dim, std::size_t output_dim,
                            std::size_t window, std::vector<double> params);

  Kind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t window() const { return window_; }
  std::size_t weight_cols() const { return input_dim_ * window_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.size(); }

  double& weight(std::size_t r, std::size_t c) { return params_[r * weight_cols() + c]; }
  double weight(std::size_t r, std::size_t c) const { return params_[r * weight_cols() + c]; }
  double& bias(std::size_t r) { return params_[output_dim_ * weight_cols() + r]; }
  double bias(std::size_t r) const { return params_[output_dim_ * weight_cols() + r]; }

  /// Identity on the centre tap when dims match, otherwise small seeded
  /// random weights; bias zero. No-op for the identity kind.
  void initialize(std::uint64_t seed);

  bool operator==(const Encoder&) const = default;

 private:
  Kind kind_ = Kind::identity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::size_t window_ = 1;
  std::vector<double> params_;
};

std::string to_string(Encoder::Kind kind);
Encoder::Kind encoder_kind_from_string(const std::string& name);

Sequence encode(const Sequence& x, const Encoder& encoder);

/// Gradient w.r.t. the flat parameter vector given dLoss/d(encode(x)).
std::vector<double> encoder_backward(const Sequence& x, const Encoder& encoder,
                                     const Sequence& upstream);

}  // namespace dpdtw
