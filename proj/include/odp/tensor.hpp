#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace odp {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

inline std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major array with explicit shape. T is float (model outputs) or
// int64_t (labels).
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data);
  explicit Tensor(Shape shape) : Tensor(shape, std::vector<T>(shape_volume(shape))) {}

  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  // Row view of a 2-D tensor, or of the last axis of a 3-D tensor at [k, i].
  std::span<const T> row(std::size_t i) const {
    const std::size_t cols = shape_.back();
    return std::span<const T>(data_).subspan(i * cols, cols);
  }
  std::span<T> row(std::size_t i) {
    const std::size_t cols = shape_.back();
    return std::span<T>(data_).subspan(i * cols, cols);
  }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using TensorF32 = Tensor<float>;
using TensorI64 = Tensor<std::int64_t>;

extern template class Tensor<float>;
extern template class Tensor<std::int64_t>;

}  // namespace odp
