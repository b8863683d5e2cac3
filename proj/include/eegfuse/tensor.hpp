#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eegfuse/errors.hpp"

namespace eegfuse {

inline size_t shape_size(const std::vector<size_t>& dims) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  return n;
}

inline std::string shape_str(const std::vector<size_t>& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

// Dense row-major n-dimensional array. Rank and dims are dynamic; element
// type is double in the data pipeline and float or double in the network.
template <typename T>
struct TensorT {
  std::vector<size_t> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<size_t> dims, T fill = T(0))
      : shape(std::move(dims)), data(shape_size(shape), fill) {}

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  size_t dim(size_t i) const { return shape[i]; }

  T& operator[](size_t i) { return data[i]; }
  const T& operator[](size_t i) const { return data[i]; }

  T& operator()(size_t i, size_t j) { return data[i * shape[1] + j]; }
  const T& operator()(size_t i, size_t j) const { return data[i * shape[1] + j]; }

  T& operator()(size_t i, size_t j, size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  const T& operator()(size_t i, size_t j, size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  T* row(size_t i) { return data.data() + i * shape[1]; }
  const T* row(size_t i) const { return data.data() + i * shape[1]; }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

template <typename T>
void require_shape(const TensorT<T>& t, const std::vector<size_t>& dims, const char* what) {
  if (t.shape != dims)
    throw ValidationError(std::string(what) + ": expected shape " + shape_str(dims) +
                          ", got " + shape_str(t.shape));
}

}  // namespace eegfuse
