#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace netdelay {

using Vec = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<const RowMatrix>;
using MutableMatrixView = Eigen::Map<RowMatrix>;
using VectorView = Eigen::Map<const Vec>;
using MutableVectorView = Eigen::Map<Vec>;

/// Dense row-major array of 64-bit reals.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

  MatrixView matrix() const;
  MutableMatrixView matrix();
  VectorView vector() const;
  MutableVectorView vector();

  void fill(double v);

  bool operator==(const Tensor&) const = default;
};

std::size_t element_count(std::span<const std::size_t> shape);

}  // namespace netdelay
