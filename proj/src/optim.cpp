#include "dpdtw/optim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "dpdtw/errors.hpp"

namespace dpdtw {

AdamState::AdamState(AdamOptions options, std::vector<std::size_t> tensor_sizes) : options_(options) {
  for (std::size_t n : tensor_sizes) {
    first_.emplace_back(n, 0.0);
    second_.emplace_back(n, 0.0);
  }
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != state.num_tensors() || grads.size() != state.num_tensors()) {
    throw InvalidArgument("adam_step: tensor count does not match optimizer state");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != state.first_[k].size() || grads[k].size() != params[k].size()) {
      throw InvalidArgument("adam_step: shape mismatch in tensor " + std::to_string(k));
    }
  }
  const AdamOptions& o = state.options_;
  ++state.steps_;
  const double t = static_cast<double>(state.steps_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_[k];
    auto& v = state.second_[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[k][i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t size, const BatchSpec& spec,
                                                     std::size_t epoch) {
  if (size == 0) return {};
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_stream(spec.seed, 0x6261746368ULL, epoch);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  if (spec.mode == BatchSpec::Mode::fraction) {
    if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
      throw InvalidArgument("batch fraction must be in (0, 1]");
    }
    auto count = static_cast<std::size_t>(std::ceil(1.0 / spec.fraction - 1e-9));
    count = std::clamp<std::size_t>(count, 1, size);
    std::size_t begin = 0;
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t end = (b + 1) * size / count;
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
      begin = end;
    }
  } else {
    if (spec.count == 0) throw InvalidArgument("batch size must be positive");
    for (std::size_t begin = 0; begin < size; begin += spec.count) {
      const std::size_t end = std::min(size, begin + spec.count);
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::atomic<unsigned> g_workers{0};

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  x ^= a * 0xd1342543de82ef95ULL;
  h ^= splitmix64(x);
  x ^= b * 0xaf251af3b0f025b5ULL;
  h ^= splitmix64(x);
  return std::mt19937_64(h);
}

unsigned default_workers() {
  const unsigned w = g_workers.load();
  if (w != 0) return w;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_workers(unsigned workers) { g_workers.store(workers); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers) {
  if (workers == 0) workers = default_workers();
  const std::size_t threads = std::min<std::size_t>(workers, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          if (failed.load()) return;
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (double e : max_rel_error) w = std::max(w, e);
  return w;
}

GradCheckReport grad_check(const GradCheckObjective& objective, std::span<const double> params,
                           std::span<const double> analytic, std::span<const std::size_t> tensor_sizes,
                           const GradCheckOptions& options) {
  if (analytic.size() != params.size()) throw InvalidArgument("grad_check: gradient size mismatch");
  std::vector<std::size_t> sizes(tensor_sizes.begin(), tensor_sizes.end());
  if (sizes.empty()) sizes.push_back(params.size());
  if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != params.size()) {
    throw InvalidArgument("grad_check: tensor sizes do not cover the parameters");
  }

  GradCheckReport report;
  report.max_rel_error.assign(sizes.size(), 0.0);
  std::vector<double> x(params.begin(), params.end());
  const std::uint64_t base_sig = objective.signature ? objective.signature(x) : 0;
  auto eval = [&](std::span<const double> p) {
    const double v = objective.value(p);
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
  };
  eval(x);

  std::size_t tensor = 0;
  std::size_t tensor_end = sizes[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    while (i >= tensor_end) tensor_end += sizes[++tensor];
    const double orig = x[i];
    x[i] = orig + options.epsilon;
    const bool plus_stable = !objective.signature || objective.signature(x) == base_sig;
    const double f_plus = eval(x);
    x[i] = orig - options.epsilon;
    const bool minus_stable = !objective.signature || objective.signature(x) == base_sig;
    const double f_minus = eval(x);
    x[i] = orig;
    if (!plus_stable || !minus_stable) {
      ++report.skipped;
      continue;
    }
    ++report.probed;
    const double numeric = (f_plus - f_minus) / (2.0 * options.epsilon);
    const double a = analytic[i];
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double rel = scale < options.zero_floor ? 0.0 : std::abs(a - numeric) / scale;
    report.max_rel_error[tensor] = std::max(report.max_rel_error[tensor], rel);
    if (rel > options.tolerance) report.flagged.push_back(i);
  }
  return report;
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  for (int byte = 0; byte < 8; ++byte) {
    h ^= (v >> (8 * byte)) & 0xffU;
    h *= kPrime;
  }
  return h;
}

}  // namespace dpdtw
