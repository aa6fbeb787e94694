// Shared helpers for the test binaries.

#ifndef LIPEMBED_TESTS_TEST_UTIL_H_
#define LIPEMBED_TESTS_TEST_UTIL_H_

#include <random>

#include "diffgraph/array.h"

namespace lipembed {
namespace testing {

inline Array RandomArray(Shape shape, std::mt19937_64 *rng, double lo = -1.0,
                         double hi = 1.0) {
  Array a(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double &v : a.values()) v = d(*rng);
  return a;
}

/// sum_i w_i y_i; a generic scalar probe whose gradient w.r.t. y is w.
inline double Project(const Array &y, const Array &w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); i++) s += y[i] * w[i];
  return s;
}

}  // namespace testing
}  // namespace lipembed

#endif  // LIPEMBED_TESTS_TEST_UTIL_H_
