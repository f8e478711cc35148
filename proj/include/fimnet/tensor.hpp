#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace fimnet {

// Dense row-major n-d array. Shapes are small (<= 4 dims) and fixed after
// construction; storage is a flat contiguous vector so Eigen can map it.
template <class Real>
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s)
      : shape(std::move(s)), data(count(shape), Real(0)) {}
  Tensor(std::vector<int> s, Real fill)
      : shape(std::move(s)), data(count(shape), fill) {}

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, Real v) { return Tensor(std::move(s), v); }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  Real& at(int i) {
    assert(ndim() == 1 && i >= 0 && i < shape[0]);
    return data[static_cast<std::size_t>(i)];
  }
  Real at(int i) const { return const_cast<Tensor*>(this)->at(i); }

  Real& at(int i, int j) {
    assert(ndim() == 2);
    assert(i >= 0 && i < shape[0] && j >= 0 && j < shape[1]);
    return data[static_cast<std::size_t>(i) * shape[1] + j];
  }
  Real at(int i, int j) const { return const_cast<Tensor*>(this)->at(i, j); }

  Real& at(int i, int j, int k) {
    assert(ndim() == 3);
    assert(i >= 0 && i < shape[0] && j >= 0 && j < shape[1] && k >= 0 && k < shape[2]);
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  Real at(int i, int j, int k) const { return const_cast<Tensor*>(this)->at(i, j, k); }

  void fill(Real v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  template <class Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

}  // namespace fimnet
