#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dpdtw {

/// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A multivariate time series: `length()` frames of `dim()` features each.
///
/// Frames are stored contiguously so `frame(t)` is a cheap view; this is the
/// transpose of the usual m x tau notation.
class Sequence {
 public:
  Sequence() = default;
  Sequence(std::size_t length, std::size_t dim, double fill = 0.0);

  /// Univariate series from a list of values.
  static Sequence from_values(std::span<const double> values);
  static Sequence from_values(std::initializer_list<double> values);
  /// Build from frames; every frame must have the same (nonzero) width.
  static Sequence from_frames(const std::vector<std::vector<double>>& frames);

  std::size_t length() const { return length_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return length_ == 0; }

  std::span<double> frame(std::size_t t) { return {data_.data() + t * dim_, dim_}; }
  std::span<const double> frame(std::size_t t) const { return {data_.data() + t * dim_, dim_}; }

  double& at(std::size_t t, std::size_t d) { return data_[t * dim_ + d]; }
  double at(std::size_t t, std::size_t d) const { return data_[t * dim_ + d]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;
  /// Throws InvalidArgument unless length >= 1, dim >= 1 and entries are finite.
  void validate(const char* what = "sequence") const;

  bool operator==(const Sequence&) const = default;

 private:
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Euclidean distance between two frames of equal width.
double frame_distance(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation resampling along time to `length` frames. Endpoints
/// are preserved; resampling to the same length returns the input.
Sequence resample_linear(const Sequence& s, std::size_t length);

}  // namespace dpdtw
