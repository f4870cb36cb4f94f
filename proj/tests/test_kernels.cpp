#include <cmath>
#include <omp.h>
#include <random>

#include "doctest.h"
#include "pathcal/kernels.hpp"

using namespace pathcal;

namespace {

std::vector<double> random_row(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 4.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(gen);
  return x;
}

}  // namespace

TEST_CASE("softmax matches serial reference") {
  for (std::size_t n : {1UL, 7UL, 4096UL, 4097UL, 50000UL, 150001UL}) {
    auto x = random_row(n, static_cast<unsigned>(n));
    std::vector<double> a(n), b(n);
    kernels::serial::softmax(x, a);
    kernels::softmax(x, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
      sum += b[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernels::max_value(x) == kernels::serial::max_value(x));
    CHECK(kernels::log_sum_exp(x) == doctest::Approx(kernels::serial::log_sum_exp(x)).epsilon(1e-13));
  }
}

TEST_CASE("parallel softmax is independent of thread count") {
  auto x = random_row(100000, 3);
  std::vector<double> one(x.size()), many(x.size());
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  kernels::softmax(x, one);
  omp_set_num_threads(4);
  kernels::softmax(x, many);
  omp_set_num_threads(saved);
  CHECK(one == many);
}

TEST_CASE("softmax is stable for large logits") {
  std::vector<double> x = {1000.0, 1000.0, -1000.0};
  auto p = kernels::softmax(x);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
  std::vector<double> lp(3);
  kernels::log_softmax(x, lp);
  CHECK(lp[0] == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("empty and infinite inputs") {
  std::vector<double> x = {-INFINITY, 0.0};
  auto p = kernels::softmax(x);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
}
