// diffgraph/array.h

// Copyright 2026  lipembed authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LIPEMBED_DIFFGRAPH_ARRAY_H_
#define LIPEMBED_DIFFGRAPH_ARRAY_H_

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "base/common.h"

namespace lipembed {

typedef std::vector<std::size_t> Shape;

std::string ShapeString(const Shape &shape);
std::size_t NumElements(const Shape &shape);

/// Dense row-major array of doubles.  Holds every activation, parameter and
/// gradient in the network.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double> &vec() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Multi-index access; bounds-checked, meant for tests and oracles.
  double &at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Same data, new shape with an equal element count.
  Array Reshaped(Shape shape) const;
  void Reshape(Shape shape);

  void Fill(double value);
  void SetZero() { Fill(0.0); }
  /// this += alpha * other (shapes must match).
  void AddScaled(const Array &other, double alpha = 1.0);
  void Scale(double alpha);

  bool AllFinite() const;
  double MaxAbs() const;
  double SumSquares() const;

  /// Rounds every entry to the nearest single-precision value.  Stored
  /// parameters live on this grid so float32 checkpoints are exact.
  void RoundToFloat();

  friend bool operator==(const Array &a, const Array &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t Offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

double MaxAbsDiff(const Array &a, const Array &b);

/// Fill with U(-bound, bound).
void FillUniform(Array *a, double bound, std::mt19937_64 *rng);
void FillNormal(Array *a, double stddev, std::mt19937_64 *rng);

}  // namespace lipembed

#endif  // LIPEMBED_DIFFGRAPH_ARRAY_H_
