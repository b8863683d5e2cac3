#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "eegfuse/autodiff.hpp"

namespace eegfuse {

// Strided cross-correlation mixing all input channels:
// x [N x C_in x L], kernels [C_out x C_in x K] -> [N x C_out x L'] with
// L' = floor((L - K) / stride) + 1. No bias (downstream norms carry offsets).
template <typename T>
Var conv1d(Tape<T>& t, Var x, Var kernels, size_t stride) {
  const TensorT<T>& vx = t.value(x);
  const TensorT<T>& vw = t.value(kernels);
  if (vx.rank() != 3 || vw.rank() != 3 || vx.dim(1) != vw.dim(1))
    throw ValidationError("conv1d: x " + shape_str(vx.shape) + " vs kernels " +
                          shape_str(vw.shape));
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  const size_t n = vx.dim(0), c_in = vx.dim(1), len = vx.dim(2);
  const size_t c_out = vw.dim(0), k = vw.dim(2);
  if (len < k)
    throw ValidationError("conv1d: input length " + std::to_string(len) +
                          " shorter than kernel " + std::to_string(k));
  const size_t l_out = (len - k) / stride + 1;
  const size_t patch = c_in * k;

  // im2col per sample: cols [patch x l_out]; y_n = W_mat [c_out x patch] * cols.
  auto fill_cols = [c_in, k, len, l_out, stride](const T* xn, std::vector<T>& cols) {
    for (size_t ci = 0; ci < c_in; ++ci)
      for (size_t kk = 0; kk < k; ++kk) {
        T* dst = cols.data() + (ci * k + kk) * l_out;
        const T* src = xn + ci * len + kk;
        for (size_t p = 0; p < l_out; ++p) dst[p] = src[p * stride];
      }
  };

  TensorT<T> out({n, c_out, l_out});
  std::vector<T> cols(patch * l_out);
  for (size_t i = 0; i < n; ++i) {
    fill_cols(vx.data.data() + i * c_in * len, cols);
    gemm_nn(c_out, l_out, patch, vw.data.data(), cols.data(),
            out.data.data() + i * c_out * l_out, false);
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, kernels, y, n, c_in, len, c_out, k, l_out, patch, stride,
                     fill_cols](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vx2 = tp.value(x);
    const TensorT<T>& vw2 = tp.value(kernels);
    TensorT<T>& gx = tp.grad(x);
    TensorT<T>& gw = tp.grad(kernels);
    std::vector<T> cols(patch * l_out);
    std::vector<T> dcols(patch * l_out);
    for (size_t i = 0; i < n; ++i) {
      const T* gyn = gy.data.data() + i * c_out * l_out;
      fill_cols(vx2.data.data() + i * c_in * len, cols);
      // dW += dY * cols^T ; dcols = W^T * dY
      gemm_nt(c_out, patch, l_out, gyn, cols.data(), gw.data.data(), true);
      gemm_tn(patch, l_out, c_out, vw2.data.data(), gyn, dcols.data(), false);
      T* gxn = gx.data.data() + i * c_in * len;
      for (size_t ci = 0; ci < c_in; ++ci)
        for (size_t kk = 0; kk < k; ++kk) {
          const T* src = dcols.data() + (ci * k + kk) * l_out;
          T* dst = gxn + ci * len + kk;
          for (size_t p = 0; p < l_out; ++p) dst[p * stride] += src[p];
        }
    }
  });
  return y;
}

// Per-channel running statistics owned by the model, updated in train mode.
template <typename T>
struct BatchNormState {
  TensorT<T> running_mean;
  TensorT<T> running_var;
};

// x [N x C x L], gamma/beta [C]. Train mode normalizes per channel over
// (N, L) with eps 1e-5 and folds the batch statistics into the running
// buffers with momentum 0.1; eval mode applies the running statistics.
template <typename T>
Var batch_norm(Tape<T>& t, Var x, Var gamma, Var beta, BatchNormState<T>* state,
               bool train) {
  const TensorT<T>& vx = t.value(x);
  if (vx.rank() != 3) throw ValidationError("batch_norm: need [N x C x L]");
  const size_t n = vx.dim(0), c = vx.dim(1), len = vx.dim(2);
  const std::vector<size_t> cshape{c};
  if (t.value(gamma).shape != cshape || t.value(beta).shape != cshape ||
      state->running_mean.shape != cshape || state->running_var.shape != cshape)
    throw ValidationError("batch_norm: per-channel parameter shape mismatch");
  const size_t m = n * len;
  if (train && m < 2)
    throw ValidationError("batch_norm: train mode needs more than one value per channel");
  const T eps = T(1e-5);

  TensorT<T> mean({c}), invstd({c});
  if (train) {
    TensorT<T> var({c});
    for (size_t ch = 0; ch < c; ++ch) {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        const T* row = vx.data.data() + (i * c + ch) * len;
        for (size_t j = 0; j < len; ++j) acc += row[j];
      }
      mean[ch] = acc / static_cast<T>(m);
      T sq = T(0);
      for (size_t i = 0; i < n; ++i) {
        const T* row = vx.data.data() + (i * c + ch) * len;
        for (size_t j = 0; j < len; ++j)
          sq += (row[j] - mean[ch]) * (row[j] - mean[ch]);
      }
      var[ch] = sq / static_cast<T>(m);
      invstd[ch] = T(1) / std::sqrt(var[ch] + eps);
    }
    const T momentum = T(0.1);
    for (size_t ch = 0; ch < c; ++ch) {
      state->running_mean[ch] =
          (T(1) - momentum) * state->running_mean[ch] + momentum * mean[ch];
      state->running_var[ch] =
          (T(1) - momentum) * state->running_var[ch] + momentum * var[ch];
    }
  } else {
    for (size_t ch = 0; ch < c; ++ch) {
      mean[ch] = state->running_mean[ch];
      invstd[ch] = T(1) / std::sqrt(state->running_var[ch] + eps);
    }
  }

  const TensorT<T>& vg = t.value(gamma);
  const TensorT<T>& vb = t.value(beta);
  TensorT<T> out(vx.shape);
  for (size_t i = 0; i < n; ++i)
    for (size_t ch = 0; ch < c; ++ch) {
      const T* row = vx.data.data() + (i * c + ch) * len;
      T* orow = out.data.data() + (i * c + ch) * len;
      const T scale = vg[ch] * invstd[ch];
      const T shift = vb[ch] - mean[ch] * scale;
      for (size_t j = 0; j < len; ++j) orow[j] = row[j] * scale + shift;
    }
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, gamma, beta, y, n, c, len, m, mean = std::move(mean),
                     invstd = std::move(invstd), train](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vx2 = tp.value(x);
    const TensorT<T>& vg2 = tp.value(gamma);
    TensorT<T>& gx = tp.grad(x);
    TensorT<T>& gg = tp.grad(gamma);
    TensorT<T>& gb = tp.grad(beta);
    for (size_t ch = 0; ch < c; ++ch) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (size_t i = 0; i < n; ++i) {
        const T* grow = gy.data.data() + (i * c + ch) * len;
        const T* row = vx2.data.data() + (i * c + ch) * len;
        for (size_t j = 0; j < len; ++j) {
          sum_dy += grow[j];
          sum_dy_xhat += grow[j] * (row[j] - mean[ch]) * invstd[ch];
        }
      }
      gg[ch] += sum_dy_xhat;
      gb[ch] += sum_dy;
      if (train) {
        // dx = (gamma*invstd/M) * (M*dy - sum(dy) - xhat*sum(dy*xhat))
        const T k = vg2[ch] * invstd[ch] / static_cast<T>(m);
        for (size_t i = 0; i < n; ++i) {
          const T* grow = gy.data.data() + (i * c + ch) * len;
          const T* row = vx2.data.data() + (i * c + ch) * len;
          T* gxr = gx.data.data() + (i * c + ch) * len;
          for (size_t j = 0; j < len; ++j) {
            const T xhat = (row[j] - mean[ch]) * invstd[ch];
            gxr[j] += k * (static_cast<T>(m) * grow[j] - sum_dy - xhat * sum_dy_xhat);
          }
        }
      } else {
        const T k = vg2[ch] * invstd[ch];
        for (size_t i = 0; i < n; ++i) {
          const T* grow = gy.data.data() + (i * c + ch) * len;
          T* gxr = gx.data.data() + (i * c + ch) * len;
          for (size_t j = 0; j < len; ++j) gxr[j] += k * grow[j];
        }
      }
    }
  });
  return y;
}

// Standard LSTM over a batched sequence. x [N x T x d_in], wx [d_in x 4H],
// wh [H x 4H], b [4H]; zero initial state; returns the full hidden sequence
// [N x T x H]. Gate blocks are ordered (input, forget, cell, output).
template <typename T>
Var lstm(Tape<T>& t, Var x, Var wx, Var wh, Var b) {
  const TensorT<T>& vx = t.value(x);
  const TensorT<T>& vwx = t.value(wx);
  const TensorT<T>& vwh = t.value(wh);
  const TensorT<T>& vb = t.value(b);
  if (vx.rank() != 3 || vwx.rank() != 2 || vwh.rank() != 2)
    throw ValidationError("lstm: need x [N x T x d], wx [d x 4H], wh [H x 4H]");
  const size_t n = vx.dim(0), steps = vx.dim(1), d_in = vx.dim(2);
  const size_t h4 = vwx.dim(1);
  const size_t h = h4 / 4;
  if (h * 4 != h4 || vwx.dim(0) != d_in ||
      vwh.shape != std::vector<size_t>{h, h4} ||
      vb.shape != std::vector<size_t>{h4})
    throw ValidationError("lstm: weight shapes inconsistent");

  auto sigmoid = [](T v) { return T(1) / (T(1) + std::exp(-v)); };

  // One big input projection for every (sample, step) row.
  std::vector<T> px(n * steps * h4);
  gemm_nn(n * steps, h4, d_in, vx.data.data(), vwx.data.data(), px.data(), false);

  // Saved activations for backprop-through-time: per step, gates [N x 4H],
  // cell state and its tanh [N x H].
  auto gates = std::make_shared<std::vector<T>>(steps * n * h4);
  auto cells = std::make_shared<std::vector<T>>(steps * n * h);
  auto tanhc = std::make_shared<std::vector<T>>(steps * n * h);

  TensorT<T> out({n, steps, h});
  std::vector<T> g(n * h4);
  std::vector<T> h_prev(n * h, T(0)), c_prev(n * h, T(0));
  for (size_t s = 0; s < steps; ++s) {
    for (size_t i = 0; i < n; ++i) {
      const T* src = px.data() + (i * steps + s) * h4;
      T* dst = g.data() + i * h4;
      for (size_t j = 0; j < h4; ++j) dst[j] = src[j] + vb[j];
    }
    if (s > 0)
      gemm_nn(n, h4, h, h_prev.data(), vwh.data.data(), g.data(), true);
    T* gate_s = gates->data() + s * n * h4;
    T* cell_s = cells->data() + s * n * h;
    T* tanh_s = tanhc->data() + s * n * h;
    for (size_t i = 0; i < n; ++i) {
      T* gi = g.data() + i * h4;
      for (size_t j = 0; j < h; ++j) {
        const T ig = sigmoid(gi[j]);
        const T fg = sigmoid(gi[h + j]);
        const T cg = std::tanh(gi[2 * h + j]);
        const T og = sigmoid(gi[3 * h + j]);
        const T cc = fg * c_prev[i * h + j] + ig * cg;
        const T th = std::tanh(cc);
        gate_s[i * h4 + j] = ig;
        gate_s[i * h4 + h + j] = fg;
        gate_s[i * h4 + 2 * h + j] = cg;
        gate_s[i * h4 + 3 * h + j] = og;
        cell_s[i * h + j] = cc;
        tanh_s[i * h + j] = th;
        out(i, s, j) = og * th;
        h_prev[i * h + j] = og * th;
        c_prev[i * h + j] = cc;
      }
    }
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [x, wx, wh, b, y, n, steps, d_in, h, h4, gates, cells,
                     tanhc](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vy = tp.value(y);
    const TensorT<T>& vwh2 = tp.value(wh);
    const TensorT<T>& vx2 = tp.value(x);
    const TensorT<T>& vwx2 = tp.value(wx);

    std::vector<T> dg_all(n * steps * h4, T(0));  // rows ordered (sample, step)
    std::vector<T> dh(n * h, T(0)), dc(n * h, T(0));
    std::vector<T> dg(n * h4);
    TensorT<T>& gwh = tp.grad(wh);
    TensorT<T>& gb = tp.grad(b);

    for (size_t s = steps; s-- > 0;) {
      const T* gate_s = gates->data() + s * n * h4;
      const T* tanh_s = tanhc->data() + s * n * h;
      for (size_t i = 0; i < n; ++i) {
        const T* gi = gate_s + i * h4;
        T* dgi = dg.data() + i * h4;
        for (size_t j = 0; j < h; ++j) {
          const T dout = dh[i * h + j] + gy(i, s, j);
          const T ig = gi[j], fg = gi[h + j], cg = gi[2 * h + j], og = gi[3 * h + j];
          const T th = tanh_s[i * h + j];
          const T dcell = dc[i * h + j] + dout * og * (T(1) - th * th);
          const T c_old =
              s > 0 ? cells->data()[(s - 1) * n * h + i * h + j] : T(0);
          dgi[j] = dcell * cg * ig * (T(1) - ig);
          dgi[h + j] = dcell * c_old * fg * (T(1) - fg);
          dgi[2 * h + j] = dcell * ig * (T(1) - cg * cg);
          dgi[3 * h + j] = dout * th * og * (T(1) - og);
          dc[i * h + j] = dcell * fg;
        }
      }
      // b gradient and the staging area for the input-projection gradient.
      for (size_t i = 0; i < n; ++i) {
        const T* dgi = dg.data() + i * h4;
        T* stage = dg_all.data() + (i * steps + s) * h4;
        for (size_t j = 0; j < h4; ++j) {
          gb[j] += dgi[j];
          stage[j] = dgi[j];
        }
      }
      if (s > 0) {
        // dWh += h_{s-1}^T dG ; dh_{s-1} = dG Wh^T
        std::vector<T> h_prev(n * h);
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < h; ++j) h_prev[i * h + j] = vy(i, s - 1, j);
        gemm_tn(h, h4, n, h_prev.data(), dg.data(), gwh.data.data(), true);
        std::fill(dh.begin(), dh.end(), T(0));
        gemm_nt(n, h, h4, dg.data(), vwh2.data.data(), dh.data(), false);
      }
    }
    // dWx += X^T dG_all ; dX += dG_all Wx^T (rows already (sample, step)).
    gemm_tn(d_in, h4, n * steps, vx2.data.data(), dg_all.data(),
            tp.grad(wx).data.data(), true);
    gemm_nt(n * steps, d_in, h4, dg_all.data(), vwx2.data.data(),
            tp.grad(x).data.data(), true);
  });
  return y;
}

// Bidirectional LSTM: forward pass concatenated with a reversed pass over the
// reversed sequence, [N x T x d_in] -> [N x T x 2H].
template <typename T>
Var bilstm(Tape<T>& t, Var x, Var wx_f, Var wh_f, Var b_f, Var wx_b, Var wh_b,
           Var b_b) {
  Var fwd = lstm(t, x, wx_f, wh_f, b_f);
  Var rev_in = reverse_axis1(t, x);
  Var bwd = reverse_axis1(t, lstm(t, rev_in, wx_b, wh_b, b_b));
  return concat_lastdim(t, {fwd, bwd});
}

}  // namespace eegfuse
