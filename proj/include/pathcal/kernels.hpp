#pragma once

#include <span>
#include <vector>

// Vocabulary-wide numeric kernels. Each kernel has a plain serial reference
// (namespace `serial`) kept for testing and benchmarking, and an OpenMP
// version used by the library. The OpenMP reductions work over fixed-size
// blocks whose partials are combined in block order, so results do not depend
// on the thread count.
namespace pathcal::kernels {

inline constexpr std::size_t kBlock = 4096;

namespace serial {
double max_value(std::span<const double> x);
double log_sum_exp(std::span<const double> x);
void softmax(std::span<const double> x, std::span<double> out);
}  // namespace serial

double max_value(std::span<const double> x);
double log_sum_exp(std::span<const double> x);
// out[i] = exp(x[i] - max) / sum, with max subtraction for stability.
void softmax(std::span<const double> x, std::span<double> out);
std::vector<double> softmax(std::span<const double> x);
// out[i] = x[i] - log_sum_exp(x)
void log_softmax(std::span<const double> x, std::span<double> out);

}  // namespace pathcal::kernels
