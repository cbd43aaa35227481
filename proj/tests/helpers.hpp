#pragma once

#include <functional>
#include <vector>

#include "zeus/tensor.hpp"

namespace zeus::testing {

// Compares tape gradients against central finite differences.
// build must construct the whole forward pass on the given tape from the
// current parameter values and return the scalar loss. Error metric:
// |analytic - numeric| / max(1, |analytic|, |numeric|), maximized over all
// elements of all params.
inline double max_grad_error(const std::function<Tensor(Tape&)>& build,
                             std::vector<Tensor> params, double h = 1e-6) {
  Tape tape;
  Tensor loss = build(tape);
  for (Tensor& p : params) p.zero_grad();
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (Tensor& p : params)
    analytic.emplace_back(p.grad(), p.grad() + p.size());
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    for (int64_t i = 0; i < p.size(); ++i) {
      double keep = p.data()[i];
      p.data()[i] = keep + h;
      Tape tp;
      double fp = build(tp).value();
      p.data()[i] = keep - h;
      Tape tm;
      double fm = build(tm).value();
      p.data()[i] = keep;
      double numeric = (fp - fm) / (2.0 * h);
      double a = analytic[pi][i];
      double err = std::abs(a - numeric) /
                   std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace zeus::testing
