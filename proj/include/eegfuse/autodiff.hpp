#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "eegfuse/errors.hpp"
#include "eegfuse/gemm.hpp"
#include "eegfuse/tensor.hpp"

namespace eegfuse {

// Reference to a node on a Tape. Only meaningful together with the tape that
// produced it.
struct Var {
  int id{-1};
};

// Reverse-mode computation tape. Nodes are appended in forward execution
// order, so running the stored closures in reverse index order is a valid
// reverse topological sweep. The scalar type is double for gradient checks
// and float for training throughput.
template <typename T>
class Tape {
 public:
  Var push(TensorT<T> value) {
    values_.push_back(std::move(value));
    grads_.emplace_back(values_.back().shape);
    backwards_.emplace_back();
    return Var{static_cast<int>(values_.size()) - 1};
  }

  void set_backward(Var v, std::function<void(Tape&)> fn) {
    backwards_[static_cast<size_t>(v.id)] = std::move(fn);
  }

  TensorT<T>& value(Var v) { return values_[static_cast<size_t>(v.id)]; }
  const TensorT<T>& value(Var v) const { return values_[static_cast<size_t>(v.id)]; }
  TensorT<T>& grad(Var v) { return grads_[static_cast<size_t>(v.id)]; }
  const TensorT<T>& grad(Var v) const { return grads_[static_cast<size_t>(v.id)]; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards.
  void backward(Var loss) {
    if (value(loss).size() != 1)
      throw ValidationError("backward: loss must be a scalar, got " +
                            shape_str(value(loss).shape));
    grad(loss)[0] = T(1);
    for (int i = loss.id; i >= 0; --i)
      if (backwards_[static_cast<size_t>(i)]) backwards_[static_cast<size_t>(i)](*this);
  }

  size_t size() const { return values_.size(); }

 private:
  std::vector<TensorT<T>> values_;
  std::vector<TensorT<T>> grads_;
  std::vector<std::function<void(Tape&)>> backwards_;
};

template <typename T>
Var leaf(Tape<T>& t, TensorT<T> value) {
  return t.push(std::move(value));
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  if (!t.value(a).same_shape(t.value(b)))
    throw ValidationError("add: shape mismatch " + shape_str(t.value(a).shape) + " vs " +
                          shape_str(t.value(b).shape));
  TensorT<T> out = t.value(a);
  const TensorT<T>& vb = t.value(b);
  for (size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  Var y = t.push(std::move(out));
  t.set_backward(y, [a, b, y](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& ga = tp.grad(a);
    TensorT<T>& gb = tp.grad(b);
    for (size_t i = 0; i < gy.size(); ++i) {
      ga[i] += gy[i];
      gb[i] += gy[i];
    }
  });
  return y;
}

template <typename T>
Var relu(Tape<T>& t, Var x) {
  TensorT<T> out = t.value(x);
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y](Tape<T>& tp) {
    const TensorT<T>& vx = tp.value(x);
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < gy.size(); ++i)
      if (vx[i] > T(0)) gx[i] += gy[i];
  });
  return y;
}

template <typename T>
Var leaky_relu(Tape<T>& t, Var x, T slope) {
  TensorT<T> out = t.value(x);
  for (auto& v : out.data) v = v > T(0) ? v : slope * v;
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, slope](Tape<T>& tp) {
    const TensorT<T>& vx = tp.value(x);
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < gy.size(); ++i)
      gx[i] += (vx[i] > T(0) ? T(1) : slope) * gy[i];
  });
  return y;
}

// y = x W + b on the trailing dimension: x [.. x n_in] -> y [.. x n_out].
template <typename T>
Var linear(Tape<T>& t, Var x, Var w, Var b) {
  const TensorT<T>& vx = t.value(x);
  const TensorT<T>& vw = t.value(w);
  const TensorT<T>& vb = t.value(b);
  if (vx.rank() < 1 || vw.rank() != 2)
    throw ValidationError("linear: need x [.. x n_in], W [n_in x n_out]");
  const size_t n_in = vx.shape.back();
  const size_t n_out = vw.dim(1);
  if (vw.dim(0) != n_in || vb.shape != std::vector<size_t>{n_out})
    throw ValidationError("linear: W " + shape_str(vw.shape) + ", b " +
                          shape_str(vb.shape) + " incompatible with x " +
                          shape_str(vx.shape));
  const size_t m = vx.size() / n_in;

  std::vector<size_t> out_shape = vx.shape;
  out_shape.back() = n_out;
  TensorT<T> out(out_shape);
  gemm_nn(m, n_out, n_in, vx.data.data(), vw.data.data(), out.data.data(), false);
  for (size_t i = 0; i < m; ++i) {
    T* row = out.data.data() + i * n_out;
    for (size_t j = 0; j < n_out; ++j) row[j] += vb[j];
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, w, b, y, m, n_in, n_out](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vx2 = tp.value(x);
    const TensorT<T>& vw2 = tp.value(w);
    gemm_nt(m, n_in, n_out, gy.data.data(), vw2.data.data(), tp.grad(x).data.data(),
            true);
    gemm_tn(n_in, n_out, m, vx2.data.data(), gy.data.data(), tp.grad(w).data.data(),
            true);
    TensorT<T>& gb = tp.grad(b);
    for (size_t i = 0; i < m; ++i) {
      const T* row = gy.data.data() + i * n_out;
      for (size_t j = 0; j < n_out; ++j) gb[j] += row[j];
    }
  });
  return y;
}

// Row-wise softmax over the trailing dimension, max-subtracted for stability.
template <typename T>
Var softmax_rows(Tape<T>& t, Var x) {
  const TensorT<T>& vx = t.value(x);
  if (vx.rank() < 1) throw ValidationError("softmax: need at least rank 1");
  const size_t n = vx.shape.back();
  const size_t m = vx.size() / n;
  TensorT<T> out(vx.shape);
  for (size_t i = 0; i < m; ++i) {
    const T* row = vx.data.data() + i * n;
    T* orow = out.data.data() + i * n;
    T mx = row[0];
    for (size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (size_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (size_t j = 0; j < n; ++j) orow[j] /= sum;
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, m, n](Tape<T>& tp) {
    const TensorT<T>& vy = tp.value(y);
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < m; ++i) {
      const T* yrow = vy.data.data() + i * n;
      const T* grow = gy.data.data() + i * n;
      T dot = T(0);
      for (size_t j = 0; j < n; ++j) dot += yrow[j] * grow[j];
      T* out_row = gx.data.data() + i * n;
      for (size_t j = 0; j < n; ++j) out_row[j] += yrow[j] * (grow[j] - dot);
    }
  });
  return y;
}

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
Var cross_entropy(Tape<T>& t, Var logits, std::vector<int> labels) {
  const TensorT<T>& vz = t.value(logits);
  if (vz.rank() != 2 || vz.dim(0) != labels.size())
    throw ValidationError("cross_entropy: logits " + shape_str(vz.shape) +
                          " vs " + std::to_string(labels.size()) + " labels");
  const size_t n = vz.dim(0);
  const size_t c = vz.dim(1);
  for (int l : labels)
    if (l < 0 || static_cast<size_t>(l) >= c)
      throw ValidationError("cross_entropy: label out of range");

  T loss = T(0);
  for (size_t i = 0; i < n; ++i) {
    const T* row = vz.row(i);
    T mx = row[0];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    loss += std::log(sum) + mx - row[static_cast<size_t>(labels[i])];
  }
  TensorT<T> out({1});
  out[0] = loss / static_cast<T>(n);
  Var y = t.push(std::move(out));
  t.set_backward(y, [logits, y, labels = std::move(labels), n, c](Tape<T>& tp) {
    const T gl = tp.grad(y)[0] / static_cast<T>(n);
    const TensorT<T>& vz2 = tp.value(logits);
    TensorT<T>& gz = tp.grad(logits);
    for (size_t i = 0; i < n; ++i) {
      const T* row = vz2.row(i);
      T mx = row[0];
      for (size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      T sum = T(0);
      for (size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
      T* grow = gz.data.data() + i * c;
      for (size_t j = 0; j < c; ++j) {
        const T p = std::exp(row[j] - mx) / sum;
        grow[j] += gl * (p - (static_cast<size_t>(labels[i]) == j ? T(1) : T(0)));
      }
    }
  });
  return y;
}

// Mean over axis 1: [N x A x F] -> [N x F].
template <typename T>
Var mean_axis1(Tape<T>& t, Var x) {
  const TensorT<T>& vx = t.value(x);
  if (vx.rank() != 3) throw ValidationError("mean_axis1: need [N x A x F]");
  const size_t n = vx.dim(0), a = vx.dim(1), f = vx.dim(2);
  TensorT<T> out({n, f});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < a; ++j) {
      const T* row = vx.data.data() + (i * a + j) * f;
      T* orow = out.data.data() + i * f;
      for (size_t k = 0; k < f; ++k) orow[k] += row[k];
    }
  const T inv = T(1) / static_cast<T>(a);
  for (auto& v : out.data) v *= inv;
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, n, a, f, inv](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < a; ++j) {
        T* grow = gx.data.data() + (i * a + j) * f;
        const T* gorow = gy.data.data() + i * f;
        for (size_t k = 0; k < f; ++k) grow[k] += inv * gorow[k];
      }
  });
  return y;
}

// Concatenation over the trailing dimension; all inputs share leading dims.
template <typename T>
Var concat_lastdim(Tape<T>& t, const std::vector<Var>& xs) {
  if (xs.empty()) throw ValidationError("concat_lastdim: no inputs");
  std::vector<size_t> lead(t.value(xs[0]).shape.begin(),
                           t.value(xs[0]).shape.end() - 1);
  size_t total = 0;
  std::vector<size_t> widths;
  for (Var v : xs) {
    const TensorT<T>& val = t.value(v);
    if (val.rank() < 1 ||
        !std::equal(lead.begin(), lead.end(), val.shape.begin()))
      throw ValidationError("concat_lastdim: leading dims differ");
    widths.push_back(val.shape.back());
    total += val.shape.back();
  }
  const size_t rows = t.value(xs[0]).size() / widths[0];

  std::vector<size_t> out_shape = lead;
  out_shape.push_back(total);
  TensorT<T> out(out_shape);
  for (size_t r = 0; r < rows; ++r) {
    T* orow = out.data.data() + r * total;
    size_t off = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const T* row = t.value(xs[i]).data.data() + r * widths[i];
      for (size_t j = 0; j < widths[i]; ++j) orow[off + j] = row[j];
      off += widths[i];
    }
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [xs, y, widths, rows, total](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    for (size_t r = 0; r < rows; ++r) {
      const T* grow = gy.data.data() + r * total;
      size_t off = 0;
      for (size_t i = 0; i < xs.size(); ++i) {
        T* g = tp.grad(xs[i]).data.data() + r * widths[i];
        for (size_t j = 0; j < widths[i]; ++j) g[j] += grow[off + j];
        off += widths[i];
      }
    }
  });
  return y;
}

// [N x A x B] -> [N x B x A].
template <typename T>
Var transpose_12(Tape<T>& t, Var x) {
  const TensorT<T>& vx = t.value(x);
  if (vx.rank() != 3) throw ValidationError("transpose_12: need rank 3");
  const size_t n = vx.dim(0), a = vx.dim(1), b = vx.dim(2);
  TensorT<T> out({n, b, a});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < a; ++j)
      for (size_t k = 0; k < b; ++k) out(i, k, j) = vx(i, j, k);
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, n, a, b](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < a; ++j)
        for (size_t k = 0; k < b; ++k) gx(i, j, k) += gy(i, k, j);
  });
  return y;
}

// Reverses axis 1 of [N x T x D]; used to run a recurrent pass right-to-left.
template <typename T>
Var reverse_axis1(Tape<T>& t, Var x) {
  const TensorT<T>& vx = t.value(x);
  if (vx.rank() != 3) throw ValidationError("reverse_axis1: need rank 3");
  const size_t n = vx.dim(0), steps = vx.dim(1), d = vx.dim(2);
  TensorT<T> out(vx.shape);
  for (size_t i = 0; i < n; ++i)
    for (size_t s = 0; s < steps; ++s)
      for (size_t k = 0; k < d; ++k) out(i, s, k) = vx(i, steps - 1 - s, k);
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, n, steps, d](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < n; ++i)
      for (size_t s = 0; s < steps; ++s)
        for (size_t k = 0; k < d; ++k) gx(i, steps - 1 - s, k) += gy(i, s, k);
  });
  return y;
}

// Fixed-weight scalar projection sum(x * w); handy as a test loss.
template <typename T>
Var weighted_sum(Tape<T>& t, Var x, TensorT<T> w) {
  const TensorT<T>& vx = t.value(x);
  if (!vx.same_shape(w)) throw ValidationError("weighted_sum: shape mismatch");
  T acc = T(0);
  for (size_t i = 0; i < vx.size(); ++i) acc += vx[i] * w[i];
  TensorT<T> out({1});
  out[0] = acc;
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, y, w = std::move(w)](Tape<T>& tp) {
    const T g = tp.grad(y)[0];
    TensorT<T>& gx = tp.grad(x);
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
  });
  return y;
}

}  // namespace eegfuse
