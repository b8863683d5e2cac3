#pragma once

#include <cmath>
#include <vector>

#include "eegfuse/autodiff.hpp"
#include "eegfuse/params.hpp"

namespace eegfuse {

// Adam optimizer over the trainable entries of a ParamStore. First/second
// moment buffers are kept per parameter; the step applies the standard
// bias-corrected update.
template <typename T>
class Adam {
 public:
  Adam(ParamStore<T>& store, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
       T eps = T(1e-8))
      : store_(store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(store.size());
    v_.resize(store.size());
    for (size_t i = 0; i < store.size(); ++i) {
      m_[i].assign(store.entry(i).value.size(), T(0));
      v_[i].assign(store.entry(i).value.size(), T(0));
    }
  }

  // vars maps store indices to this forward pass's tape leaves; entries with
  // id < 0 (not part of the graph) and non-trainable parameters are skipped.
  void step(Tape<T>& t, const std::vector<Var>& vars) {
    if (vars.size() != store_.size())
      throw ValidationError("adam: var list does not match parameter store");
    ++steps_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(steps_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(steps_));
    for (size_t i = 0; i < store_.size(); ++i) {
      ParamEntry<T>& e = store_.entry(i);
      if (!e.trainable || vars[i].id < 0) continue;
      const TensorT<T>& g = t.grad(vars[i]);
      if (!g.same_shape(e.value))
        throw ValidationError("adam: gradient shape mismatch for " + e.name);
      std::vector<T>& m = m_[i];
      std::vector<T>& v = v_[i];
      for (size_t j = 0; j < e.value.size(); ++j) {
        m[j] = beta1_ * m[j] + (T(1) - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (T(1) - beta2_) * g[j] * g[j];
        const T mhat = m[j] / bc1;
        const T vhat = v[j] / bc2;
        e.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  uint64_t steps() const { return steps_; }

 private:
  ParamStore<T>& store_;
  T lr_, beta1_, beta2_, eps_;
  uint64_t steps_{0};
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace eegfuse
