#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rhoest/rng.hpp"

using namespace rhoest;

TEST_CASE("streams are reproducible and distinct") {
  Rng a(123, 1), b(123, 1), c(123, 2), d(124, 1);
  bool all_equal_c = true, all_equal_d = true;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    all_equal_c = all_equal_c && va == c.next_u64();
    all_equal_d = all_equal_d && va == d.next_u64();
  }
  CHECK_FALSE(all_equal_c);
  CHECK_FALSE(all_equal_d);
}

TEST_CASE("uniform01 stays inside the open interval") {
  Rng rng(7, 7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("inverse normal CDF hits tabulated quantiles") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::invalid_argument);
}

TEST_CASE("moment sanity for normal and exponential draws") {
  Rng rng(99, 3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::fabs(sum / n) <= 0.01);
  CHECK(std::fabs(sum2 / n - 1.0) <= 0.02);

  double esum = 0.0;
  for (int i = 0; i < n; ++i) esum += rng.exponential(2.0);
  CHECK(std::fabs(esum / n - 0.5) <= 0.01);
}

TEST_CASE("discrete sampling matches its weights") {
  Rng rng(5, 5);
  const std::vector<double> w{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.discrete(w)];
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(static_cast<double>(counts[k]) / n - w[k]) <= 0.01);
  CHECK_THROWS_AS(rng.discrete(std::vector<double>{0.0, 0.0}),
                  std::invalid_argument);
}
