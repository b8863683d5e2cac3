#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "eegfuse/autodiff.hpp"
#include "eegfuse/graph.hpp"

namespace eegfuse {

namespace detail {

// Per-node aggregation plan extracted from a ChannelGraph with self-loops
// added: for node i, the neighbor set N_i ∪ {i} and the self-loop-augmented
// degrees. Copied out of the graph so tape closures own their data.
struct GraphPlan {
  std::vector<std::vector<size_t>> nbrs;  // includes the node itself
  std::vector<double> aug_degree;         // d_i = |N_i| + 1
};

inline GraphPlan make_plan(const ChannelGraph& g) {
  GraphPlan plan;
  const size_t c = g.n_nodes();
  plan.nbrs.resize(c);
  plan.aug_degree.resize(c);
  for (size_t i = 0; i < c; ++i) {
    plan.nbrs[i].push_back(i);
    for (size_t j : g.neighbors[i])
      if (j != i) plan.nbrs[i].push_back(j);
    plan.aug_degree[i] = static_cast<double>(plan.nbrs[i].size());
  }
  return plan;
}

}  // namespace detail

// Degree-normalized graph convolution over per-sample channel graphs:
// h'_i = ReLU( sum_{j in N_i ∪ {i}} h_j W / sqrt(d_i d_j) ) with self-loop
// augmented degrees. h [N x C x F], W [F x F'] -> [N x C x F'].
template <typename T>
Var gcn_layer(Tape<T>& t, Var h, Var w, const std::vector<ChannelGraph>& graphs) {
  const TensorT<T>& vh = t.value(h);
  const TensorT<T>& vw = t.value(w);
  if (vh.rank() != 3 || vw.rank() != 2 || vh.dim(2) != vw.dim(0))
    throw ValidationError("gcn_layer: h " + shape_str(vh.shape) + " vs W " +
                          shape_str(vw.shape));
  const size_t n = vh.dim(0), c = vh.dim(1), f_in = vh.dim(2), f_out = vw.dim(1);
  if (graphs.size() != n)
    throw ValidationError("gcn_layer: need one graph per sample");

  auto plans = std::make_shared<std::vector<detail::GraphPlan>>();
  plans->reserve(n);
  for (const ChannelGraph& g : graphs) {
    if (g.n_nodes() != c) throw ValidationError("gcn_layer: graph size mismatch");
    plans->push_back(detail::make_plan(g));
  }

  // m = h W for every node, then normalized neighborhood sums.
  auto msgs = std::make_shared<std::vector<T>>(n * c * f_out);
  gemm_nn(n * c, f_out, f_in, vh.data.data(), vw.data.data(), msgs->data(), false);

  TensorT<T> out({n, c, f_out});
  for (size_t s = 0; s < n; ++s) {
    const detail::GraphPlan& plan = (*plans)[s];
    for (size_t i = 0; i < c; ++i) {
      T* orow = out.data.data() + (s * c + i) * f_out;
      for (size_t j : plan.nbrs[i]) {
        const T coeff =
            static_cast<T>(1.0 / std::sqrt(plan.aug_degree[i] * plan.aug_degree[j]));
        const T* mrow = msgs->data() + (s * c + j) * f_out;
        for (size_t q = 0; q < f_out; ++q) orow[q] += coeff * mrow[q];
      }
      for (size_t q = 0; q < f_out; ++q) orow[q] = std::max(orow[q], T(0));
    }
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [h, w, y, n, c, f_in, f_out, plans](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vy = tp.value(y);
    const TensorT<T>& vh2 = tp.value(h);
    const TensorT<T>& vw2 = tp.value(w);

    // dval through ReLU, then scatter back to message gradients.
    std::vector<T> dmsg(n * c * f_out, T(0));
    for (size_t s = 0; s < n; ++s) {
      const detail::GraphPlan& plan = (*plans)[s];
      for (size_t i = 0; i < c; ++i) {
        const T* grow = gy.data.data() + (s * c + i) * f_out;
        const T* yrow = vy.data.data() + (s * c + i) * f_out;
        for (size_t j : plan.nbrs[i]) {
          const T coeff = static_cast<T>(
              1.0 / std::sqrt(plan.aug_degree[i] * plan.aug_degree[j]));
          T* drow = dmsg.data() + (s * c + j) * f_out;
          for (size_t q = 0; q < f_out; ++q)
            if (yrow[q] > T(0)) drow[q] += coeff * grow[q];
        }
      }
    }
    gemm_nt(n * c, f_in, f_out, dmsg.data(), vw2.data.data(),
            tp.grad(h).data.data(), true);
    gemm_tn(f_in, f_out, n * c, vh2.data.data(), dmsg.data(),
            tp.grad(w).data.data(), true);
  });
  return y;
}

// Graph attention layer:
//   z_i = h_i W, e_ij = LeakyReLU_0.2(a_src·z_i + a_dst·z_j),
//   alpha_i· = softmax over N_i ∪ {i}, h'_i = ReLU(sum_j alpha_ij z_j).
// h [N x C x F], W [F x F'], a [2F'] -> [N x C x F'].
// attn_out, when given, receives per-sample attention rows aligned with the
// plan's neighbor order.
template <typename T>
Var gat_layer(Tape<T>& t, Var h, Var w, Var a,
              const std::vector<ChannelGraph>& graphs,
              std::vector<std::vector<std::vector<T>>>* attn_out = nullptr) {
  const TensorT<T>& vh = t.value(h);
  const TensorT<T>& vw = t.value(w);
  const TensorT<T>& va = t.value(a);
  if (vh.rank() != 3 || vw.rank() != 2 || vh.dim(2) != vw.dim(0))
    throw ValidationError("gat_layer: h " + shape_str(vh.shape) + " vs W " +
                          shape_str(vw.shape));
  const size_t n = vh.dim(0), c = vh.dim(1), f_in = vh.dim(2), f_out = vw.dim(1);
  if (va.shape != std::vector<size_t>{2 * f_out})
    throw ValidationError("gat_layer: attention vector must be [2 F']");
  if (graphs.size() != n)
    throw ValidationError("gat_layer: need one graph per sample");
  const T slope = T(0.2);

  auto plans = std::make_shared<std::vector<detail::GraphPlan>>();
  plans->reserve(n);
  for (const ChannelGraph& g : graphs) {
    if (g.n_nodes() != c) throw ValidationError("gat_layer: graph size mismatch");
    plans->push_back(detail::make_plan(g));
  }

  auto z = std::make_shared<std::vector<T>>(n * c * f_out);
  gemm_nn(n * c, f_out, f_in, vh.data.data(), vw.data.data(), z->data(), false);

  // Attention logits pre-activation and normalized weights, stored in the
  // plan's neighbor order per node.
  auto pre = std::make_shared<std::vector<std::vector<T>>>(n * c);
  auto alpha = std::make_shared<std::vector<std::vector<T>>>(n * c);
  if (attn_out) attn_out->assign(n, {});

  TensorT<T> out({n, c, f_out});
  std::vector<T> src_score(c), dst_score(c);
  for (size_t s = 0; s < n; ++s) {
    const detail::GraphPlan& plan = (*plans)[s];
    for (size_t i = 0; i < c; ++i) {
      const T* zi = z->data() + (s * c + i) * f_out;
      T acc_s = T(0), acc_d = T(0);
      for (size_t q = 0; q < f_out; ++q) {
        acc_s += va[q] * zi[q];
        acc_d += va[f_out + q] * zi[q];
      }
      src_score[i] = acc_s;
      dst_score[i] = acc_d;
    }
    if (attn_out) (*attn_out)[s].resize(c);
    for (size_t i = 0; i < c; ++i) {
      const std::vector<size_t>& nbrs = plan.nbrs[i];
      std::vector<T>& pre_i = (*pre)[s * c + i];
      std::vector<T>& alpha_i = (*alpha)[s * c + i];
      pre_i.resize(nbrs.size());
      alpha_i.resize(nbrs.size());
      T mx = -std::numeric_limits<T>::infinity();
      for (size_t r = 0; r < nbrs.size(); ++r) {
        const T e = src_score[i] + dst_score[nbrs[r]];
        pre_i[r] = e;
        const T act = e > T(0) ? e : slope * e;
        alpha_i[r] = act;
        mx = std::max(mx, act);
      }
      T sum = T(0);
      for (T& v : alpha_i) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (T& v : alpha_i) v /= sum;
      T* orow = out.data.data() + (s * c + i) * f_out;
      for (size_t r = 0; r < nbrs.size(); ++r) {
        const T* zj = z->data() + (s * c + nbrs[r]) * f_out;
        for (size_t q = 0; q < f_out; ++q) orow[q] += alpha_i[r] * zj[q];
      }
      for (size_t q = 0; q < f_out; ++q) orow[q] = std::max(orow[q], T(0));
      if (attn_out) (*attn_out)[s][i] = alpha_i;
    }
  }
  Var y = t.push(std::move(out));
  t.set_backward(y, [h, w, a, y, n, c, f_in, f_out, slope, plans, z, pre,
                     alpha](Tape<T>& tp) {
    const TensorT<T>& gy = tp.grad(y);
    const TensorT<T>& vy = tp.value(y);
    const TensorT<T>& vh2 = tp.value(h);
    const TensorT<T>& vw2 = tp.value(w);
    const TensorT<T>& va2 = tp.value(a);
    TensorT<T>& ga = tp.grad(a);

    std::vector<T> dz(n * c * f_out, T(0));
    std::vector<T> dsrc(c), ddst(c);
    for (size_t s = 0; s < n; ++s) {
      const detail::GraphPlan& plan = (*plans)[s];
      std::fill(dsrc.begin(), dsrc.end(), T(0));
      std::fill(ddst.begin(), ddst.end(), T(0));
      for (size_t i = 0; i < c; ++i) {
        const std::vector<size_t>& nbrs = plan.nbrs[i];
        const std::vector<T>& pre_i = (*pre)[s * c + i];
        const std::vector<T>& alpha_i = (*alpha)[s * c + i];
        const T* grow = gy.data.data() + (s * c + i) * f_out;
        const T* yrow = vy.data.data() + (s * c + i) * f_out;

        // du through the ReLU, then the alpha-weighted sum.
        std::vector<T> du(f_out);
        for (size_t q = 0; q < f_out; ++q)
          du[q] = yrow[q] > T(0) ? grow[q] : T(0);

        std::vector<T> dalpha(nbrs.size());
        T dot = T(0);
        for (size_t r = 0; r < nbrs.size(); ++r) {
          const T* zj = z->data() + (s * c + nbrs[r]) * f_out;
          T acc = T(0);
          for (size_t q = 0; q < f_out; ++q) acc += du[q] * zj[q];
          dalpha[r] = acc;
          dot += alpha_i[r] * acc;
          T* dzj = dz.data() + (s * c + nbrs[r]) * f_out;
          for (size_t q = 0; q < f_out; ++q) dzj[q] += alpha_i[r] * du[q];
        }
        for (size_t r = 0; r < nbrs.size(); ++r) {
          const T de = alpha_i[r] * (dalpha[r] - dot);
          const T dpre = de * (pre_i[r] > T(0) ? T(1) : slope);
          dsrc[i] += dpre;
          ddst[nbrs[r]] += dpre;
        }
      }
      for (size_t i = 0; i < c; ++i) {
        const T* zi = z->data() + (s * c + i) * f_out;
        T* dzi = dz.data() + (s * c + i) * f_out;
        for (size_t q = 0; q < f_out; ++q) {
          dzi[q] += dsrc[i] * va2[q] + ddst[i] * va2[f_out + q];
          ga[q] += dsrc[i] * zi[q];
          ga[f_out + q] += ddst[i] * zi[q];
        }
      }
    }
    gemm_nt(n * c, f_in, f_out, dz.data(), vw2.data.data(), tp.grad(h).data.data(),
            true);
    gemm_tn(f_in, f_out, n * c, vh2.data.data(), dz.data(), tp.grad(w).data.data(),
            true);
  });
  return y;
}

}  // namespace eegfuse
