#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "intentrl/tape.hpp"

namespace intentrl {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Matrix, std::less<>> first_moment;
  std::map<std::string, Matrix, std::less<>> second_moment;
};

// One bias-corrected Adam update of every parameter named in `grads`.
// Parameters without a gradient entry are left untouched.
void adam_step(ParameterSet& params, const Gradients& grads, double lr, AdamState& state);

// Central-difference gradient check:
//   max over elements of |analytic − cd| / max(|analytic|, |cd|, 1e-8).
// `loss` is evaluated with each element of each parameter in `analytic` perturbed
// by ±step; parameters are restored afterwards.
double finite_diff_check(const std::function<double()>& loss, ParameterSet& params,
                         const Gradients& analytic, double step = 1e-5);

// Same check over a plain vector argument.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic,
                         double step = 1e-5);

}  // namespace intentrl
