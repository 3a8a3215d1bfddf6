#include "intentrl/subjlogic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "intentrl/classifier.hpp"
#include "intentrl/errors.hpp"

namespace intentrl {

const char* to_string(CertaintyKind kind) {
  switch (kind) {
    case CertaintyKind::none:
      return "none";
    case CertaintyKind::vacuity:
      return "vacuity";
    case CertaintyKind::dissonance:
      return "dissonance";
  }
  return "?";
}

CertaintyKind parse_certainty_kind(std::string_view s) {
  if (s == "none") return CertaintyKind::none;
  if (s == "vacuity") return CertaintyKind::vacuity;
  if (s == "dissonance") return CertaintyKind::dissonance;
  throw ConfigError("certainty kind must be none, vacuity or dissonance, got '" + std::string(s) + "'");
}

Opinion vacuity_maximize(std::span<const double> probs, std::span<const double> base_rates) {
  if (probs.size() != base_rates.size() || probs.empty()) {
    throw DimensionError("vacuity_maximize: p(" + std::to_string(probs.size()) + ") vs g(" +
                         std::to_string(base_rates.size()) + ")");
  }
  require_finite(probs, "vacuity_maximize p");
  require_finite(base_rates, "vacuity_maximize g");

  double u = std::numeric_limits<double>::infinity();
  std::size_t arg = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < 0.0 || base_rates[i] < 0.0) {
      throw DomainError("vacuity_maximize: negative probability or base rate");
    }
    if (base_rates[i] == 0.0) {
      if (probs[i] > 0.0) {
        throw BaseRateError("vacuity_maximize: class " + std::to_string(i) +
                            " has zero base rate but probability " + std::to_string(probs[i]));
      }
      continue;
    }
    const double ratio = probs[i] / base_rates[i];
    if (ratio < u) {
      u = ratio;
      arg = i;
    }
  }
  if (arg == probs.size()) {
    throw BaseRateError("vacuity_maximize: every base rate is zero");
  }
  u = std::min(u, 1.0);

  Opinion op;
  op.vacuity = u;
  op.base_rates.assign(base_rates.begin(), base_rates.end());
  op.belief.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    op.belief[i] = i == arg ? 0.0 : std::max(0.0, probs[i] - base_rates[i] * u);
  }
  op.dissonance = dissonance(op.belief);
  return op;
}

double dissonance(std::span<const double> belief) {
  double total_mass = 0.0;
  for (double b : belief) {
    if (b < 0.0 || !std::isfinite(b)) {
      throw DomainError("dissonance: belief masses must be finite and non-negative");
    }
    total_mass += b;
  }
  double result = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double bi = belief[i];
    if (bi == 0.0) continue;
    double weighted = 0.0;
    double others = 0.0;
    for (std::size_t j = 0; j < belief.size(); ++j) {
      if (j == i) continue;
      const double bj = belief[j];
      others += bj;
      const double pair = bj + bi;
      if (pair > 0.0) {
        weighted += bj * (1.0 - std::abs(bj - bi) / pair);
      }
    }
    if (others > 0.0) {
      result += bi * weighted / others;
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

double uncertainty_of(const Vector& probs, std::span<const double> base_rates, CertaintyKind kind) {
  if (kind == CertaintyKind::none) {
    throw ConfigError("uncertainty requested with certainty kind 'none'");
  }
  const Opinion op = vacuity_maximize(probs, base_rates);
  return kind == CertaintyKind::vacuity ? op.vacuity : op.dissonance;
}

double step_uncertainty(std::span<const double> h, const IntentClassifier& classifier,
                        std::span<const double> base_rates, CertaintyKind kind) {
  return uncertainty_of(classifier.critic(h), base_rates, kind);
}

double accumulate_certainty(std::span<const double> uncertainties) {
  double total = 0.0;
  for (double u : uncertainties) {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw DomainError("accumulate_certainty: uncertainty outside [0, 1]");
    }
    total += 1.0 - u;
  }
  return total;
}

}  // namespace intentrl
