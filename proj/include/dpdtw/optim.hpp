#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace dpdtw {

// ---------------------------------------------------------------- Adam

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter tensors.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamOptions options, std::vector<std::size_t> tensor_sizes);

  const AdamOptions& options() const { return options_; }
  std::size_t steps() const { return steps_; }
  std::size_t num_tensors() const { return first_.size(); }
  std::span<const double> first_moment(std::size_t k) const { return first_[k]; }
  std::span<const double> second_moment(std::size_t k) const { return second_[k]; }

 private:
  friend void adam_step(std::span<const std::span<double>>, std::span<const std::span<const double>>,
                        AdamState&);

  AdamOptions options_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

// ---------------------------------------------------------------- batching

struct BatchSpec {
  enum class Mode { fraction, count };
  Mode mode = Mode::fraction;
  double fraction = 0.2;
  std::size_t count = 1;
  std::uint64_t seed = 0;

  static BatchSpec of_fraction(double f, std::uint64_t seed) { return {Mode::fraction, f, 1, seed}; }
  static BatchSpec of_count(std::size_t n, std::uint64_t seed) { return {Mode::count, 1.0, n, seed}; }
};

/// A seeded permutation of 0..size-1 for this epoch, cut into batches.
/// fraction mode yields ceil(1/f) near-equal batches (at most `size`),
/// count mode yields ceil(size/n) batches of n with a shorter tail.
std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t size, const BatchSpec& spec,
                                                     std::size_t epoch);

// ---------------------------------------------------------------- rng

/// Independent generator for the (seed, a, b) stream, e.g. (seed, step, sample).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

// ---------------------------------------------------------------- parallel

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). Each index must write only to its own slot; callers reduce
/// afterwards in index order, which keeps results bit-reproducible.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers = 0);

/// Default worker count used by the training loops.
unsigned default_workers();
void set_default_workers(unsigned workers);

// ---------------------------------------------------------------- gradient checking

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Coordinates whose analytic and numeric values are both below this are
  /// counted as matching.
  double zero_floor = 1e-7;
};

/// Loss to probe. `signature`, when set, fingerprints the discrete state the
/// analytic gradient depends on (DTW paths, active hinge terms); coordinates
/// whose perturbation changes it are skipped.
struct GradCheckObjective {
  std::function<double(std::span<const double>)> value;
  std::function<std::uint64_t(std::span<const double>)> signature;
};

struct GradCheckReport {
  std::size_t probed = 0;
  std::size_t skipped = 0;
  std::vector<std::size_t> flagged;
  std::vector<double> max_rel_error;  // per tensor, over probed coordinates

  std::size_t passed() const { return probed - flagged.size(); }
  double pass_fraction() const { return probed == 0 ? 1.0 : static_cast<double>(passed()) / probed; }
  double worst() const;
};

/// Central differences against `analytic` at every coordinate of `params`.
/// `tensor_sizes` partitions the flat vector for reporting (empty = one tensor).
GradCheckReport grad_check(const GradCheckObjective& objective, std::span<const double> params,
                           std::span<const double> analytic,
                           std::span<const std::size_t> tensor_sizes = {},
                           const GradCheckOptions& options = {});

/// FNV-1a style mixing, used to build path signatures.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

}  // namespace dpdtw
