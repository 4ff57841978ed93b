#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "netgnn/error.hpp"

namespace netgnn::ad {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

// Dense row-major tensor of rank 0..2. A rank-1 tensor of length n behaves
// as an n x 1 column for row-wise ops.
template <typename Real>
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, Real fill = Real(0)) : shape_(std::move(shape)) {
    check_rank();
    values_.assign(count(shape_), fill);
  }
  Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), values_(std::move(values)) {
    check_rank();
    if (values_.size() != count(shape_)) {
      throw DataError("tensor value count does not match shape " + shape_str(shape_));
    }
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, Real fill = Real(0)) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  Real* data() { return values_.data(); }
  const Real* data() const { return values_.data(); }
  std::vector<Real>& values() { return values_; }
  const std::vector<Real>& values() const { return values_; }
  Real& operator[](std::size_t i) { return values_[i]; }
  Real operator[](std::size_t i) const { return values_[i]; }
  Real& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  void fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename To>
  Tensor<To> cast() const {
    return Tensor<To>(shape_, std::vector<To>(values_.begin(), values_.end()));
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }
  void check_rank() const {
    if (shape_.size() > 2) throw DataError("tensors of rank > 2 are not supported");
  }

  Shape shape_;
  std::vector<Real> values_;
};

}  // namespace netgnn::ad
