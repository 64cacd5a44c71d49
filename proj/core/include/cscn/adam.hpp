#pragma once

#include <cmath>
#include <cstdint>

#include "cscn/tensor.hpp"

namespace cscn {

// Adam moment estimates for one parameter tensor.
template <typename T>
struct AdamStateT {
  TensorT<T> first_moment;
  TensorT<T> second_moment;
  std::uint64_t step_count = 0;

  static AdamStateT zeros_like(const TensorT<T>& param) {
    AdamStateT s;
    s.first_moment = TensorT<T>(param.shape());
    s.second_moment = TensorT<T>(param.shape());
    return s;
  }
};

using AdamState = AdamStateT<float>;

// Bias-corrected Adam update, applied in place. Rejects non-finite gradients
// before touching the parameter so a poisoned batch cannot corrupt the model.
template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, AdamStateT<T>& state, double lr,
               double beta1, double beta2, double eps) {
  if (!(lr > 0)) throw ConfigError("adam_step: lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam_step: betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("adam_step: eps must be positive");
  check_same_shape(param, grad, "adam_step");
  check_same_shape(param, state.first_moment, "adam_step (first moment)");
  check_same_shape(param, state.second_moment, "adam_step (second moment)");
  if (!grad.all_finite())
    throw NumericError("adam_step: non-finite gradient, update rejected");

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);

  T* p = param.data();
  T* m = state.first_moment.data();
  T* v = state.second_moment.data();
  const T* g = grad.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * gi;
    const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / c1;
    const double vhat = vi / c2;
    p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace cscn
