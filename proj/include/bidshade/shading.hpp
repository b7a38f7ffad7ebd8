#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "bidshade/features.hpp"
#include "bidshade/winrate.hpp"

namespace bidshade::shading {

// One per-request surplus maximization in model space: maximize
// (V - b) * logistic(alpha + beta * log b) over b > 0.
struct SurplusProblem {
    double alpha = 0.0;
    double beta = 1.0;        // > 0
    double value = 1.0;       // V > 0
    double epsilon = 1e-4;    // minimum bracket length (absolute price units)
    std::uint32_t max_steps = 50;

    void validate() const;  // throws std::invalid_argument
};

struct ShadingDecision {
    double bid = 0.0;
    double expected_win_rate = 0.0;
    double expected_surplus = 0.0;
    std::uint32_t iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    bool converged = false;        // bracket shrank below epsilon within max_steps
    std::uint32_t clamped_steps = 0;  // cut ratio fell outside [0.01, 0.99]
};

// Sign carrier for the surplus derivative:
//   h(b) = beta*V - (beta+1)*b - e^alpha * b^(beta+1).
// Strictly decreasing and concave on b > 0; the surplus maximum is its
// unique root. The power term is evaluated in log space so large alpha or V
// cannot overflow into NaNs.
double h(const SurplusProblem& problem, double b);

// Bracket that provably contains the optimum:
//   beta/(beta+1+e^alpha V^beta) * V  <=  b*  <  beta/(beta+1) * V.
std::pair<double, double> bid_bounds(const SurplusProblem& problem);

// Bracketed root search on h using the gradient-ratio cut: the new probe is
// placed at the chord root of (h_lo, h_hi) instead of the midpoint. The ratio
// is clamped to [0.01, 0.99], and a repeatedly stuck bracket end has its
// stored h value halved, which keeps the bracket collapsing without giving up
// the cut's speedup.
ShadingDecision maximize(const SurplusProblem& problem);

// Shades a value through a trained win-rate model. Prices are normalized by
// the model's currency_scale for the search and rescaled on the way out.
// epsilon = 0 selects the default 1e-4 * value. floor_factor is an optional
// low-price guard: bid is raised to floor_factor * value when positive.
ShadingDecision shade(const winrate::WinRateModel& model, const FeatureVector& features,
                      double value, double epsilon = 0.0, std::uint32_t max_steps = 50,
                      double floor_factor = 0.0);

struct GridOptimum {
    double bid = 0.0;
    double expected_surplus = 0.0;
};

// Analytic optimum of (V - b) * cdf(b) for a uniform highest-bid landscape on
// [B0, B1]. The interior argmax is the quadratic vertex (V + B0) / 2 (by
// differentiation); past V = 2*B1 - B0 the win rate saturates and the optimum
// pins to B1. value <= B0 admits no profitable bid and yields zero surplus.
GridOptimum uniform_closed_form(double value, double b0, double b1);

// Verification oracle: exhaustive maximum of (V - b) * cdf(b) on a uniform
// grid over (0, V]; ties resolve to the lowest bid.
GridOptimum grid_maximize(const std::function<double(double)>& cdf, double value,
                          std::size_t grid_n);

}  // namespace bidshade::shading
