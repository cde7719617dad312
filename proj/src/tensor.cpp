#include "netdelay/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "netdelay/error.hpp"

namespace netdelay {

std::size_t element_count(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape_) : shape(std::move(shape_)) {
  if (shape.empty() || std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor dimensions must be positive");
  }
  data.assign(element_count(shape), 0.0);
}

MatrixView Tensor::matrix() const {
  return MatrixView(data.data(), static_cast<Eigen::Index>(rows()),
                    static_cast<Eigen::Index>(cols()));
}

MutableMatrixView Tensor::matrix() {
  return MutableMatrixView(data.data(), static_cast<Eigen::Index>(rows()),
                           static_cast<Eigen::Index>(cols()));
}

VectorView Tensor::vector() const {
  return VectorView(data.data(), static_cast<Eigen::Index>(data.size()));
}

MutableVectorView Tensor::vector() {
  return MutableVectorView(data.data(), static_cast<Eigen::Index>(data.size()));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

}  // namespace netdelay
