#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dagsparse {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Image batch stored channels-by-pixels: column (n*height + y)*width + x
/// holds the channel vector of pixel (y, x) of image n. Convolutions
/// become a single GEMM over all pixels of the batch.
///
/// Parameter tensors reuse the type with batch = height = width = 0 and an
/// arbitrary matrix shape.
template <typename Scalar>
struct Tensor {
  Matrix<Scalar> data;
  int batch = 0;
  int height = 0;
  int width = 0;

  Tensor() = default;
  explicit Tensor(Matrix<Scalar> m) : data(std::move(m)) {}
  Tensor(Matrix<Scalar> m, int n, int h, int w) : data(std::move(m)), batch(n), height(h), width(w) {
    if (data.cols() != static_cast<Eigen::Index>(n) * h * w)
      throw std::invalid_argument("tensor data has " + std::to_string(data.cols()) +
                                  " columns, expected " + std::to_string(n * h * w));
  }

  static Tensor zeros(int channels, int n, int h, int w) {
    return Tensor(Matrix<Scalar>::Zero(channels, static_cast<Eigen::Index>(n) * h * w), n, h, w);
  }

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
  bool is_image() const { return batch > 0; }
  bool same_shape(const Tensor& o) const {
    return data.rows() == o.data.rows() && data.cols() == o.data.cols() && batch == o.batch &&
           height == o.height && width == o.width;
  }
};

}  // namespace dagsparse
