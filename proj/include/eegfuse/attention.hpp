#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "eegfuse/autodiff.hpp"

namespace eegfuse {

// Multi-head attention across domains: queries from x_alpha [N x C x D],
// keys/values from x_beta [N x S x D]. Heads are contiguous column blocks of
// width d = D / n_heads in the shared projection matrices wq/wk/wv [D x D];
// per head, softmax(Q K^T / sqrt(d)) V, heads re-concatenated and mapped by
// wo [D x D]. Output [N x C x D].
// attn_out, when given, receives the attention weights as [N][H] matrices of
// shape [C x S] (row-major), for inspection only.
template <typename T>
Var cross_domain_attention(Tape<T>& t, Var x_alpha, Var x_beta, Var wq, Var wk,
                           Var wv, Var wo, size_t n_heads,
                           std::vector<std::vector<std::vector<T>>>* attn_out =
                               nullptr) {
  const TensorT<T>& va = t.value(x_alpha);
  const TensorT<T>& vb = t.value(x_beta);
  const TensorT<T>& vwq = t.value(wq);
  if (va.rank() != 3 || vb.rank() != 3 || va.dim(0) != vb.dim(0) ||
      va.dim(2) != vb.dim(2))
    throw ValidationError("attention: x_alpha " + shape_str(va.shape) +
                          " vs x_beta " + shape_str(vb.shape));
  const size_t n = va.dim(0), c = va.dim(1), s_len = vb.dim(1), d_model = va.dim(2);
  if (n_heads < 1 || d_model % n_heads != 0)
    throw ConfigError("attention: head count " + std::to_string(n_heads) +
                      " must divide width " + std::to_string(d_model));
  const std::vector<size_t> wshape{d_model, d_model};
  if (vwq.shape != wshape || t.value(wk).shape != wshape ||
      t.value(wv).shape != wshape || t.value(wo).shape != wshape)
    throw ValidationError("attention: projections must be [D x D]");
  const size_t d = d_model / n_heads;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));

  // Projections as one flat GEMM each.
  auto q = std::make_shared<std::vector<T>>(n * c * d_model);
  auto k = std::make_shared<std::vector<T>>(n * s_len * d_model);
  auto v = std::make_shared<std::vector<T>>(n * s_len * d_model);
  gemm_nn(n * c, d_model, d_model, va.data.data(), t.value(wq).data.data(),
          q->data(), false);
  gemm_nn(n * s_len, d_model, d_model, vb.data.data(), t.value(wk).data.data(),
          k->data(), false);
  gemm_nn(n * s_len, d_model, d_model, vb.data.data(), t.value(wv).data.data(),
          v->data(), false);

  // Attention weights per (sample, head): [C x S].
  auto attn = std::make_shared<std::vector<T>>(n * n_heads * c * s_len);
  auto heads = std::make_shared<std::vector<T>>(n * c * d_model);  // concat layout

  if (attn_out) attn_out->assign(n, std::vector<std::vector<T>>(n_heads));
  for (size_t smp = 0; smp < n; ++smp) {
    for (size_t hd = 0; hd < n_heads; ++hd) {
      const size_t col0 = hd * d;
      T* a_mat = attn->data() + ((smp * n_heads) + hd) * c * s_len;
      for (size_t i = 0; i < c; ++i) {
        const T* qi = q->data() + (smp * c + i) * d_model + col0;
        T* arow = a_mat + i * s_len;
        T mx = -std::numeric_limits<T>::infinity();
        for (size_t j = 0; j < s_len; ++j) {
          const T* kj = k->data() + (smp * s_len + j) * d_model + col0;
          T acc = T(0);
          for (size_t p = 0; p < d; ++p) acc += qi[p] * kj[p];
          arow[j] = acc * inv_sqrt_d;
          mx = std::max(mx, arow[j]);
        }
        T sum = T(0);
        for (size_t j = 0; j < s_len; ++j) {
          arow[j] = std::exp(arow[j] - mx);
          sum += arow[j];
        }
        for (size_t j = 0; j < s_len; ++j) arow[j] /= sum;

        T* hrow = heads->data() + (smp * c + i) * d_model + col0;
        for (size_t p = 0; p < d; ++p) hrow[p] = T(0);
        for (size_t j = 0; j < s_len; ++j) {
          const T* vj = v->data() + (smp * s_len + j) * d_model + col0;
          for (size_t p = 0; p < d; ++p) hrow[p] += arow[j] * vj[p];
        }
      }
      if (attn_out)
        (*attn_out)[smp][hd].assign(a_mat, a_mat + c * s_len);
    }
  }

  TensorT<T> out({n, c, d_model});
  gemm_nn(n * c, d_model, d_model, heads->data(), t.value(wo).data.data(),
          out.data.data(), false);
  Var y = t.push(std::move(out));
  t.set_backward(y, [x_alpha, x_beta, wq, wk, wv, wo, y, n, c, s_len, d_model, d,
                     n_heads, inv_sqrt_d, q, k, v, attn, heads](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& va2 = tp.value(x_alpha);
    const TensorT<T>& vb2 = tp.value(x_beta);

    // Through the output projection.
    std::vector<T> dheads(n * c * d_model, T(0));
    gemm_nt(n * c, d_model, d_model, gy.data.data(), tp.value(wo).data.data(),
            dheads.data(), false);
    gemm_tn(d_model, d_model, n * c, heads->data(), gy.data.data(),
            tp.grad(wo).data.data(), true);

    std::vector<T> dq(n * c * d_model, T(0));
    std::vector<T> dk(n * s_len * d_model, T(0));
    std::vector<T> dv(n * s_len * d_model, T(0));
    std::vector<T> dalpha(s_len);
    for (size_t smp = 0; smp < n; ++smp) {
      for (size_t hd = 0; hd < n_heads; ++hd) {
        const size_t col0 = hd * d;
        const T* a_mat = attn->data() + ((smp * n_heads) + hd) * c * s_len;
        for (size_t i = 0; i < c; ++i) {
          const T* arow = a_mat + i * s_len;
          const T* dh = dheads.data() + (smp * c + i) * d_model + col0;
          // dV and d(alpha) from the weighted sum.
          T dot = T(0);
          for (size_t j = 0; j < s_len; ++j) {
            const T* vj = v->data() + (smp * s_len + j) * d_model + col0;
            T* dvj = dv.data() + (smp * s_len + j) * d_model + col0;
            T acc = T(0);
            for (size_t p = 0; p < d; ++p) {
              acc += dh[p] * vj[p];
              dvj[p] += arow[j] * dh[p];
            }
            dalpha[j] = acc;
            dot += arow[j] * acc;
          }
          // Softmax backward, then the scaled dot product.
          const T* qi = q->data() + (smp * c + i) * d_model + col0;
          T* dqi = dq.data() + (smp * c + i) * d_model + col0;
          for (size_t j = 0; j < s_len; ++j) {
            const T ds = arow[j] * (dalpha[j] - dot) * inv_sqrt_d;
            const T* kj = k->data() + (smp * s_len + j) * d_model + col0;
            T* dkj = dk.data() + (smp * s_len + j) * d_model + col0;
            for (size_t p = 0; p < d; ++p) {
              dqi[p] += ds * kj[p];
              dkj[p] += ds * qi[p];
            }
          }
        }
      }
    }
    // Back through the Q/K/V projections.
    gemm_nt(n * c, d_model, d_model, dq.data(), tp.value(wq).data.data(),
            tp.grad(x_alpha).data.data(), true);
    gemm_tn(d_model, d_model, n * c, va2.data.data(), dq.data(),
            tp.grad(wq).data.data(), true);
    gemm_nt(n * s_len, d_model, d_model, dk.data(), tp.value(wk).data.data(),
            tp.grad(x_beta).data.data(), true);
    gemm_tn(d_model, d_model, n * s_len, vb2.data.data(), dk.data(),
            tp.grad(wk).data.data(), true);
    gemm_nt(n * s_len, d_model, d_model, dv.data(), tp.value(wv).data.data(),
            tp.grad(x_beta).data.data(), true);
    gemm_tn(d_model, d_model, n * s_len, vb2.data.data(), dv.data(),
            tp.grad(wv).data.data(), true);
  });
  return y;
}

}  // namespace eegfuse
