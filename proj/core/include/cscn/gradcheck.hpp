#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "cscn/tensor.hpp"

namespace cscn {

// Central-difference gradient of a scalar function, one element at a time.
// f is called with perturbed copies of x and must be total near x.
template <typename F>
TensorD finite_diff_grad(F&& f, const TensorD& x, double h) {
  if (!(h > 0)) throw ConfigError("finite_diff_grad: h must be positive");
  TensorD grad(x.shape());
  TensorD probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Same, restricted to the given flat indices; entries not probed stay zero.
// Keeps checks on large parameter tensors affordable.
template <typename F>
TensorD finite_diff_grad_at(F&& f, const TensorD& x, double h,
                            const std::vector<std::size_t>& indices) {
  if (!(h > 0)) throw ConfigError("finite_diff_grad_at: h must be positive");
  TensorD grad(x.shape());
  TensorD probe = x;
  for (std::size_t i : indices) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// max_i |a_i - n_i| / max(|a_i|, |n_i|, 0.01 * scale, floor) where scale is
// the largest compared magnitude. The scale floor keeps difference-quotient
// roundoff on near-zero entries from drowning the comparison while still
// catching any error at the scale of the gradient itself. A null mask
// compares every element; mask[i] == false skips element i (ReLU
// zero-crossing exclusion).
inline double max_relative_error(const TensorD& analytic, const TensorD& numeric,
                                 const std::vector<bool>* mask = nullptr,
                                 double floor = 1e-8) {
  check_same_shape(analytic, numeric, "max_relative_error");
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 0.01 * scale, floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

// Relative error restricted to the probed subset of finite_diff_grad_at.
inline double max_relative_error_at(const TensorD& analytic, const TensorD& numeric,
                                    const std::vector<std::size_t>& indices,
                                    double floor = 1e-8) {
  check_same_shape(analytic, numeric, "max_relative_error_at");
  double scale = 0.0;
  for (std::size_t i : indices)
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  double worst = 0.0;
  for (std::size_t i : indices) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 0.01 * scale, floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace cscn
