#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "eegfuse/autodiff.hpp"
#include "eegfuse/rng.hpp"

// Central finite-difference gradient checking at f64.
//
// A scenario builds a fresh tape from the current contents of `inputs`,
// returning the scalar loss var and the vars corresponding to each input (in
// the same order). The checker perturbs every input entry with a centered
// difference and compares against the tape gradient:
//   |analytic - numeric| <= tol * max(1, |analytic|, |numeric|).

namespace gradcheck {

struct Scenario {
  std::vector<eegfuse::Tensor*> inputs;
  std::function<eegfuse::Var(eegfuse::Tape<double>&, std::vector<eegfuse::Var>&)> build;
};

inline double eval_loss(const Scenario& sc) {
  eegfuse::Tape<double> tape;
  std::vector<eegfuse::Var> vars;
  vars.reserve(sc.inputs.size());
  for (eegfuse::Tensor* t : sc.inputs) vars.push_back(leaf(tape, *t));
  const eegfuse::Var loss = sc.build(tape, vars);
  return tape.value(loss)[0];
}

inline void check(const Scenario& sc, double tol, const std::string& what) {
  // Analytic gradients from one tape pass.
  eegfuse::Tape<double> tape;
  std::vector<eegfuse::Var> vars;
  for (eegfuse::Tensor* t : sc.inputs) vars.push_back(leaf(tape, *t));
  const eegfuse::Var loss = sc.build(tape, vars);
  tape.backward(loss);

  double worst = 0.0;
  for (size_t i = 0; i < sc.inputs.size(); ++i) {
    eegfuse::Tensor& x = *sc.inputs[i];
    const eegfuse::Tensor analytic = tape.grad(vars[i]);
    for (size_t j = 0; j < x.size(); ++j) {
      const double keep = x[j];
      const double h = 1e-5 * std::max(1.0, std::abs(keep));
      x[j] = keep + h;
      const double up = eval_loss(sc);
      x[j] = keep - h;
      const double down = eval_loss(sc);
      x[j] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({1.0, std::abs(analytic[j]), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic[j] - numeric) / denom);
    }
  }
  INFO(what << ": worst relative gradient error " << worst);
  CHECK(worst <= tol);
}

inline eegfuse::Tensor random_tensor(std::vector<size_t> shape, eegfuse::Rng& rng,
                                     double scale = 1.0) {
  eegfuse::Tensor t(std::move(shape));
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

}  // namespace gradcheck
