#include "intentrl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "intentrl/errors.hpp"

namespace intentrl {

void adam_step(ParameterSet& params, const Gradients& grads, double lr, AdamState& state) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) {
      throw DimensionError("adam_step: gradient for unknown parameter " + name);
    }
    const Matrix& value = params.at(name).value;
    if (value.rows() != g.rows() || value.cols() != g.cols()) {
      throw DimensionError("adam_step: " + name + " parameter" + value.shape_string() +
                           " vs gradient" + g.shape_string());
    }
    require_finite(g.values(), ("gradient of " + name).c_str());
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (const auto& [name, g] : grads) {
    Parameter& p = params.at(name);
    if (p.frozen) {
      throw StateError("adam_step: parameter " + name + " is frozen");
    }
    auto m_it = state.first_moment.find(name);
    if (m_it == state.first_moment.end()) {
      m_it = state.first_moment.emplace(name, Matrix(g.rows(), g.cols())).first;
      state.second_moment.emplace(name, Matrix(g.rows(), g.cols()));
    }
    auto m = m_it->second.values();
    auto v = state.second_moment.at(name).values();
    auto w = p.value.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gv[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gv[i] * gv[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

namespace {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double checked(double v) {
  if (!std::isfinite(v)) {
    throw NumericError("finite_diff_check: non-finite function value");
  }
  return v;
}

}  // namespace

double finite_diff_check(const std::function<double()>& loss, ParameterSet& params,
                         const Gradients& analytic, double step) {
  if (!(step > 0.0)) {
    throw DomainError("finite_diff_check: step must be positive");
  }
  double worst = 0.0;
  for (const auto& [name, g] : analytic) {
    auto w = params.at(name).value.values();
    if (w.size() != g.size()) {
      throw DimensionError("finite_diff_check: shape mismatch for " + name);
    }
    auto gv = g.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + step;
      const double plus = checked(loss());
      w[i] = saved - step;
      const double minus = checked(loss());
      w[i] = saved;
      worst = std::max(worst, relative_error(gv[i], (plus - minus) / (2.0 * step)));
    }
  }
  return worst;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic,
                         double step) {
  if (!(step > 0.0)) {
    throw DomainError("finite_diff_check: step must be positive");
  }
  if (x.size() != analytic.size()) {
    throw DimensionError("finite_diff_check: x and gradient lengths differ");
  }
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    probe[i] = x[i] + step;
    const double plus = checked(f(probe));
    probe[i] = x[i] - step;
    const double minus = checked(f(probe));
    probe[i] = x[i];
    worst = std::max(worst, relative_error(analytic[i], (plus - minus) / (2.0 * step)));
  }
  return worst;
}

}  // namespace intentrl
