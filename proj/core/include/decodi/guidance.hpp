#pragma once

#include <cstddef>
#include <utility>

#include "decodi/diffusion.hpp"

namespace decodi {

// The five debiasing knobs plus the step budget they run under.
struct GuidanceConfig {
    double s_g = 7.5;   // guidance scale
    double s_b = 7.0;   // bias-avoidance scale (no published reference value)
    double s_m = 0.5;   // momentum scale
    double beta = 0.7;  // momentum decay
    int delta = 7;      // warm-up steps before bias guidance is applied
    int T = 50;         // total reverse steps

    // Whether the momentum buffer integrates gamma during warm-up even
    // though gamma is not applied. The alternative reading keeps the
    // buffer frozen at zero until warm-up ends.
    bool warmup_accumulates = true;

    void validate() const;
};

// Exponential moving average of past gamma terms, threaded through one
// sampling run as a value.
struct MomentumState {
    Vec v;
    int steps_elapsed = 0;

    static MomentumState initial(std::size_t dimension) { return {Vec(dimension, 0.0), 0}; }
};

// eps_u + s_g * (eps_c - eps_u).
Vec cfg_combine(const Vec& eps_u, const Vec& eps_c, double s_g);

// gamma = s_b * (eps_b - eps_u) + s_m * v, reading v before any update.
Vec gamma_term(const Vec& eps_u, const Vec& eps_b, const GuidanceConfig& config,
               const MomentumState& state);

// v' = beta * v + (1 - beta) * gamma; steps_elapsed incremented.
MomentumState momentum_update(const MomentumState& state, const Vec& gamma, double beta);

// Debiased combination eps_u + s_g * (eps_c - eps_u - gamma). During the
// first delta steps gamma is withheld; whenever the applied gamma is
// exactly zero the plain CFG expression is returned verbatim, so the
// reduction to CFG is bitwise. Returns the combined noise and the updated
// momentum state.
std::pair<Vec, MomentumState> decodi_combine(const Vec& eps_u, const Vec& eps_c, const Vec& eps_b,
                                             const GuidanceConfig& config, const MomentumState& state);

}  // namespace decodi
