// diffgraph/array.cc

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

#include "diffgraph/array.h"

#include <algorithm>
#include <cmath>

namespace lipembed {

std::string ShapeString(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); i++) {
    if (i > 0) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {
  for (std::size_t d : shape_)
    if (d == 0) LE_ERR << "Zero extent in shape " << ShapeString(shape_);
}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (NumElements(shape_) != data_.size())
    LE_ERR << "Shape " << ShapeString(shape_) << " does not match "
           << data_.size() << " values";
}

std::size_t Array::Offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size())
    LE_ERR << "Index of rank " << index.size() << " into array of shape "
           << ShapeString(shape_);
  std::size_t offset = 0, axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis])
      LE_ERR << "Index " << i << " out of range on axis " << axis
             << " of shape " << ShapeString(shape_);
    offset = offset * shape_[axis] + i;
    axis++;
  }
  return offset;
}

double &Array::at(std::initializer_list<std::size_t> index) {
  return data_[Offset(index)];
}

double Array::at(std::initializer_list<std::size_t> index) const {
  return data_[Offset(index)];
}

Array Array::Reshaped(Shape shape) const {
  Array out = *this;
  out.Reshape(std::move(shape));
  return out;
}

void Array::Reshape(Shape shape) {
  if (NumElements(shape) != data_.size())
    LE_ERR << "Cannot reshape " << ShapeString(shape_) << " to "
           << ShapeString(shape);
  shape_ = std::move(shape);
}

void Array::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Array::AddScaled(const Array &other, double alpha) {
  if (other.shape_ != shape_)
    LE_ERR << "Shape mismatch " << ShapeString(shape_) << " vs "
           << ShapeString(other.shape_);
  for (std::size_t i = 0; i < data_.size(); i++) data_[i] += alpha * other.data_[i];
}

void Array::Scale(double alpha) {
  for (double &v : data_) v *= alpha;
}

bool Array::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Array::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Array::SumSquares() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

void Array::RoundToFloat() {
  for (double &v : data_) v = static_cast<double>(static_cast<float>(v));
}

double MaxAbsDiff(const Array &a, const Array &b) {
  if (a.shape() != b.shape())
    LE_ERR << "Shape mismatch " << ShapeString(a.shape()) << " vs "
           << ShapeString(b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void FillUniform(Array *a, double bound, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double &v : a->values()) v = dist(*rng);
}

void FillNormal(Array *a, double stddev, std::mt19937_64 *rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double &v : a->values()) v = dist(*rng);
}

}  // namespace lipembed
