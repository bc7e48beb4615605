#include "morph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace morph {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void check_extents(const Shape& shape) {
  for (auto e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(shape));
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

ChannelStats channel_stats(const Tensor& t) {
  if (t.rank() != 3 || t.empty()) {
    throw std::invalid_argument("channel_stats expects a non-empty [C,H,W] tensor, got " + shape_str(t.shape()));
  }
  const std::size_t channels = t.dim(0);
  const std::size_t plane = t.dim(1) * t.dim(2);
  ChannelStats stats;
  stats.mean.resize(channels);
  stats.std.resize(channels);
  auto data = t.data();
  for (std::size_t c = 0; c < channels; ++c) {
    auto channel = data.subspan(c * plane, plane);
    double mean = 0.0;
    for (double x : channel) mean += x;
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (double x : channel) var += (x - mean) * (x - mean);
    var /= static_cast<double>(plane);
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(var);
  }
  return stats;
}

double lerp(double a, double b, double alpha) {
  // a + alpha*(b-a) keeps lerp(a,a,alpha) == a bitwise; alpha == 1 is pinned to b.
  if (alpha == 1.0) return b;
  return a + alpha * (b - a);
}

std::vector<double> lerp(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size()) throw std::invalid_argument("lerp: length mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("lerp: alpha outside [0,1]");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lerp(a[i], b[i], alpha);
  return out;
}

Tensor lerp(const Tensor& a, const Tensor& b, double alpha) {
  require_same_shape(a, b, "lerp");
  return Tensor(a.shape(), lerp(a.data(), b.data(), alpha));
}

Tensor attention_weights(const Tensor& q, const Tensor& k) {
  if (q.rank() != 2 || k.rank() != 2) throw std::invalid_argument("attention: Q and K must be rank 2");
  const std::size_t n = q.dim(0);
  const std::size_t d = q.dim(1);
  const std::size_t m = k.dim(0);
  if (k.dim(1) != d) {
    throw std::invalid_argument("attention: key width " + std::to_string(k.dim(1)) + " != query width " +
                                std::to_string(d));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor w({n, m});
  const double* qd = q.data().data();
  const double* kd = k.data().data();
  double* wd = w.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* qrow = qd + i * d;
    double* wrow = wd + i * m;
    double row_max = -INFINITY;
    for (std::size_t j = 0; j < m; ++j) {
      const double* krow = kd + j * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += qrow[c] * krow[c];
      wrow[j] = dot * inv_sqrt_d;
      row_max = std::max(row_max, wrow[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      wrow[j] = std::exp(wrow[j] - row_max);
      total += wrow[j];
    }
    const double inv_total = 1.0 / total;
    for (std::size_t j = 0; j < m; ++j) wrow[j] *= inv_total;
  }
  return w;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (v.rank() != 2) throw std::invalid_argument("attention: V must be rank 2");
  if (k.rank() == 2 && v.dim(0) != k.dim(0)) {
    throw std::invalid_argument("attention: V rows " + std::to_string(v.dim(0)) + " != K rows " +
                                std::to_string(k.dim(0)));
  }
  return matmul(attention_weights(q, k), v);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), inner = a.dim(1), m = b.dim(1);
  Tensor out({n, m});
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = od + i * m;
    for (std::size_t p = 0; p < inner; ++p) {
      const double s = ad[i * inner + p];
      const double* brow = bd + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += s * brow[j];
    }
  }
  return out;
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
  require_same_shape(x, y, "axpby");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

double l2_norm(const Tensor& t) {
  double acc = 0.0;
  for (double x : t.data()) acc += x * x;
  return std::sqrt(acc);
}

double l2_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l2_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double relative_l2(const Tensor& a, const Tensor& b) {
  const double denom = l2_norm(b);
  const double num = l2_distance(a, b);
  return denom > 0.0 ? num / denom : num;
}

Tensor concat_rows(std::initializer_list<const Tensor*> parts) {
  if (parts.size() == 0) throw std::invalid_argument("concat_rows: nothing to concatenate");
  const std::size_t cols = (*parts.begin())->dim(1);
  std::size_t rows = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != 2 || p->dim(1) != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p->dim(0);
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Tensor* p : parts) data.insert(data.end(), p->data().begin(), p->data().end());
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace morph
