#include "pathcal/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace pathcal::kernels {

namespace serial {

double max_value(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  return m;
}

double log_sum_exp(std::span<const double> x) {
  const double m = max_value(x);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  return m + std::log(sum);
}

void softmax(std::span<const double> x, std::span<double> out) {
  assert(out.size() == x.size());
  const double m = max_value(x);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  const double inv = 1.0 / sum;
  for (double& v : out) v *= inv;
}

}  // namespace serial

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// Small rows stay on one thread; the fork/join costs more than the work.
bool use_threads(std::size_t n) { return n >= 2 * kBlock; }

}  // namespace

double max_value(std::span<const double> x) {
  if (!use_threads(x.size())) return serial::max_value(x);
  double m = -std::numeric_limits<double>::infinity();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

namespace {

// Sum of exp(x[i] - shift) (optionally stored to out) in block order.
double blocked_exp_sum(std::span<const double> x, double shift, double* out) {
  const std::size_t nb = block_count(x.size());
  std::vector<double> partial(nb, 0.0);
  const std::ptrdiff_t nbs = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) if (use_threads(x.size()))
  for (std::ptrdiff_t b = 0; b < nbs; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(x.size(), lo + kBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double e = std::exp(x[i] - shift);
      if (out) out[i] = e;
      s += e;
    }
    partial[b] = s;
  }
  double sum = 0.0;
  for (double s : partial) sum += s;
  return sum;
}

}  // namespace

double log_sum_exp(std::span<const double> x) {
  const double m = max_value(x);
  return m + std::log(blocked_exp_sum(x, m, nullptr));
}

void softmax(std::span<const double> x, std::span<double> out) {
  assert(out.size() == x.size());
  const double m = max_value(x);
  const double inv = 1.0 / blocked_exp_sum(x, m, out.data());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (use_threads(x.size()))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] *= inv;
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  softmax(x, out);
  return out;
}

void log_softmax(std::span<const double> x, std::span<double> out) {
  assert(out.size() == x.size());
  const double lse = log_sum_exp(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
}

}  // namespace pathcal::kernels
