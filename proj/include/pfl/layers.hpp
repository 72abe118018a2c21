#pragma once

// Batched layers with explicit backward passes. Activations are column
// matrices: one column per sample. Parameters live in one flat buffer and
// each layer only records its offsets into it.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pfl::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// One named tensor in the flat parameter buffer.
struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return std::size_t(rows) * std::size_t(cols); }
  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

struct Manifest {
  std::vector<TensorSpec> tensors;
  std::size_t total = 0;

  std::size_t add(const std::string& name, int rows, int cols) {
    tensors.push_back({name, rows, cols, total});
    total += std::size_t(rows) * std::size_t(cols);
    return tensors.back().offset;
  }
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

enum class Activation { Tanh, Relu };

template <class T>
void activate(Mat<T>& x, Activation a) {
  if (a == Activation::Tanh) {
    x = x.array().tanh().matrix();
  } else {
    x = x.cwiseMax(T(0));
  }
}

// dpre = dout * f'(pre), expressed through the activated output.
template <class T>
Mat<T> activation_backward(const Mat<T>& out, const Mat<T>& dout, Activation a) {
  if (a == Activation::Tanh) return (dout.array() * (T(1) - out.array().square())).matrix();
  return (dout.array() * (out.array() > T(0)).template cast<T>()).matrix();
}

struct Dense {
  int in = 0;
  int out = 0;
  std::size_t w = 0;  // out x in, column-major
  std::size_t b = 0;

  static Dense create(Manifest& m, const std::string& name, int in, int out) {
    Dense d;
    d.in = in;
    d.out = out;
    d.w = m.add(name + ".weight", out, in);
    d.b = m.add(name + ".bias", out, 1);
    return d;
  }

  template <class T>
  Mat<T> forward(const T* p, const Mat<T>& x) const {
    Eigen::Map<const Mat<T>> W(p + w, out, in);
    Eigen::Map<const Vec<T>> bias(p + b, out);
    Mat<T> y = W * x;
    y.colwise() += bias;
    return y;
  }

  // Accumulates into g; returns the input gradient when wanted.
  template <class T>
  Mat<T> backward(const T* p, T* g, const Mat<T>& x, const Mat<T>& dy, bool want_dx) const {
    Eigen::Map<Mat<T>> gW(g + w, out, in);
    Eigen::Map<Vec<T>> gb(g + b, out);
    gW.noalias() += dy * x.transpose();
    gb += dy.rowwise().sum();
    if (!want_dx) return {};
    Eigen::Map<const Mat<T>> W(p + w, out, in);
    return W.transpose() * dy;
  }
};

// 1D convolution along the ray axis with wrap-around padding. Input columns
// hold `length` positions of `channels` values each (position-major); output
// columns hold `length` positions of `filters` values each.
struct CircularConv {
  int channels = 0;
  int length = 0;
  int kernel = 0;
  int filters = 0;
  std::size_t w = 0;  // filters x (kernel * channels), tap-major columns
  std::size_t b = 0;

  static CircularConv create(Manifest& m, const std::string& name, int channels, int length,
                             int kernel, int filters) {
    CircularConv c;
    c.channels = channels;
    c.length = length;
    c.kernel = kernel;
    c.filters = filters;
    c.w = m.add(name + ".weight", filters, kernel * channels);
    c.b = m.add(name + ".bias", filters, 1);
    return c;
  }

  int out_size() const { return filters * length; }

  template <class T>
  Mat<T> im2col(const Mat<T>& x) const {
    const int batch = int(x.cols());
    const int half = kernel / 2;
    Mat<T> cols(kernel * channels, Eigen::Index(length) * batch);
    for (int s = 0; s < batch; ++s) {
      for (int p = 0; p < length; ++p) {
        for (int j = 0; j < kernel; ++j) {
          int src = (p + j - half) % length;
          if (src < 0) src += length;
          cols.block(j * channels, Eigen::Index(s) * length + p, channels, 1) =
              x.block(Eigen::Index(src) * channels, s, channels, 1);
        }
      }
    }
    return cols;
  }

  template <class T>
  Mat<T> forward(const T* p, const Mat<T>& cols, int batch) const {
    Eigen::Map<const Mat<T>> W(p + w, filters, kernel * channels);
    Eigen::Map<const Vec<T>> bias(p + b, filters);
    Mat<T> y = W * cols;  // filters x (length * batch)
    y.colwise() += bias;
    y.resize(Eigen::Index(filters) * length, batch);
    return y;
  }

  template <class T>
  Mat<T> backward(const T* p, T* g, const Mat<T>& cols, const Mat<T>& dy, bool want_dx) const {
    const int batch = int(dy.cols());
    Eigen::Map<const Mat<T>> dyv(dy.data(), filters, Eigen::Index(length) * batch);
    Eigen::Map<Mat<T>> gW(g + w, filters, kernel * channels);
    Eigen::Map<Vec<T>> gb(g + b, filters);
    gW.noalias() += dyv * cols.transpose();
    gb += dyv.rowwise().sum();
    if (!want_dx) return {};
    Eigen::Map<const Mat<T>> W(p + w, filters, kernel * channels);
    const Mat<T> dcols = W.transpose() * dyv;
    Mat<T> dx = Mat<T>::Zero(Eigen::Index(channels) * length, batch);
    const int half = kernel / 2;
    for (int s = 0; s < batch; ++s) {
      for (int q = 0; q < length; ++q) {
        for (int j = 0; j < kernel; ++j) {
          int src = (q + j - half) % length;
          if (src < 0) src += length;
          dx.block(Eigen::Index(src) * channels, s, channels, 1) +=
              dcols.block(j * channels, Eigen::Index(s) * length + q, channels, 1);
        }
      }
    }
    return dx;
  }
};

// Per-sample normalization over the feature axis with learned gain and shift.
struct LayerNorm {
  int size = 0;
  std::size_t gain = 0;
  std::size_t shift = 0;
  double eps = 1e-5;

  static LayerNorm create(Manifest& m, const std::string& name, int size) {
    LayerNorm l;
    l.size = size;
    l.gain = m.add(name + ".gain", size, 1);
    l.shift = m.add(name + ".shift", size, 1);
    return l;
  }

  template <class T>
  Mat<T> forward(const T* p, const Mat<T>& x, Mat<T>& xhat, RowVec<T>& inv_std) const {
    Eigen::Map<const Vec<T>> g(p + gain, size);
    Eigen::Map<const Vec<T>> s(p + shift, size);
    const RowVec<T> mean = x.colwise().mean();
    xhat = x.rowwise() - mean;
    const RowVec<T> var = xhat.array().square().colwise().mean().matrix();
    inv_std = (var.array() + T(eps)).rsqrt().matrix();
    xhat = xhat * inv_std.asDiagonal();
    Mat<T> y = g.asDiagonal() * xhat;
    y.colwise() += s;
    return y;
  }

  template <class T>
  Mat<T> backward(const T* p, T* grad, const Mat<T>& xhat, const RowVec<T>& inv_std,
                  const Mat<T>& dy) const {
    Eigen::Map<const Vec<T>> g(p + gain, size);
    Eigen::Map<Vec<T>> gg(grad + gain, size);
    Eigen::Map<Vec<T>> gs(grad + shift, size);
    gg += (dy.array() * xhat.array()).rowwise().sum().matrix();
    gs += dy.rowwise().sum();
    const Mat<T> dxhat = g.asDiagonal() * dy;
    const RowVec<T> sum_d = dxhat.colwise().sum();
    const RowVec<T> sum_dx = (dxhat.array() * xhat.array()).colwise().sum().matrix();
    const T n = T(size);
    Mat<T> dx = (dxhat * n).rowwise() - sum_d;
    dx -= xhat * sum_dx.asDiagonal();
    return dx * (inv_std / n).asDiagonal();
  }
};

}  // namespace pfl::nn
