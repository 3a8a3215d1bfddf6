#pragma once

#include <span>
#include <string_view>

#include "intentrl/numkit.hpp"

namespace intentrl {

class IntentClassifier;

// Multinomial opinion: belief masses b, vacuity u_vac (with Σb + u_vac = 1),
// dissonance u_dis, and base rates g.
struct Opinion {
  Vector belief;
  double vacuity = 0.0;
  double dissonance = 0.0;
  Vector base_rates;
};

enum class CertaintyKind { none, vacuity, dissonance };

const char* to_string(CertaintyKind kind);
CertaintyKind parse_certainty_kind(std::string_view s);

// Largest-vacuity opinion consistent with p_i = b_i + g_i·u:
//   u = min_i p_i / g_i,  b_i = p_i − g_i·u.
// The argmin class gets b = 0 exactly. Classes with g_i = p_i = 0 are skipped;
// g_i = 0 with p_i > 0 throws BaseRateError.
Opinion vacuity_maximize(std::span<const double> probs, std::span<const double> base_rates);

// Belief-balance dissonance
//   Σ_i b_i · Σ_{j≠i} b_j·Bal(b_j, b_i) / Σ_{j≠i} b_j,   Bal(x, y) = 1 − |x − y| / (x + y),
// where zero denominators contribute nothing. Clamped to [0, 1].
double dissonance(std::span<const double> belief);

// Vacuity or dissonance of the vacuity-maximized critic output at hidden state h.
double step_uncertainty(std::span<const double> h, const IntentClassifier& classifier,
                        std::span<const double> base_rates, CertaintyKind kind);

double uncertainty_of(const Vector& probs, std::span<const double> base_rates, CertaintyKind kind);

// Σ_t (1 − u_t).
double accumulate_certainty(std::span<const double> uncertainties);

}  // namespace intentrl
