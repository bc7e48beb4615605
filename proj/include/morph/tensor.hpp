#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace morph {

using Shape = std::vector<std::size_t>;

/// Dense row-major n-dimensional array of doubles.
///
/// Every extent is positive and the data length always equals the product of
/// the extents. Operations in this header are pure and return new tensors.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, double fill);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Element access for rank-2 tensors.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  /// Element access for rank-3 tensors.
  double& at(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double at(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Shape& shape);

/// Per-channel mean and population standard deviation.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t channels() const { return mean.size(); }
  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

/// Statistics over the trailing spatial dims of a [C,H,W] tensor.
ChannelStats channel_stats(const Tensor& t);

/// (1-alpha)*a + alpha*b; alpha weights the second argument.
/// Exact at the endpoints and exact when a == b.
Tensor lerp(const Tensor& a, const Tensor& b, double alpha);
std::vector<double> lerp(std::span<const double> a, std::span<const double> b, double alpha);
double lerp(double a, double b, double alpha);

/// softmax(Q K^T / sqrt(d)) V with row-wise max subtraction.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

/// Row-stochastic weight matrix softmax(Q K^T / sqrt(d)).
Tensor attention_weights(const Tensor& q, const Tensor& k);

/// [n,k] x [k,m] -> [n,m].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// a*x + b*y element-wise.
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);

double l2_norm(const Tensor& t);
double l2_distance(const Tensor& a, const Tensor& b);
/// ||a-b|| / ||b||; falls back to ||a|| when b is zero.
double relative_l2(const Tensor& a, const Tensor& b);

/// Concatenate rank-2 tensors along rows; column counts must agree.
Tensor concat_rows(std::initializer_list<const Tensor*> parts);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace morph
