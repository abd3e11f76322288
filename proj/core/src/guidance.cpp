#include "decodi/guidance.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "decodi/error.hpp"

namespace decodi {

namespace {

void check_same_dimension(const Vec& a, const Vec& b, const char* what) {
    if (a.size() != b.size()) throw ValidationError(std::string(what) + ": dimension mismatch");
}

void check_finite(const Vec& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite input");
    }
}

bool all_zero(const Vec& v) {
    for (double x : v) {
        if (x != 0.0) return false;
    }
    return true;
}

}  // namespace

void GuidanceConfig::validate() const {
    if (!std::isfinite(s_g) || s_g < 0.0) throw ValidationError("guidance: s_g must be >= 0");
    if (!std::isfinite(s_b) || s_b < 0.0) throw ValidationError("guidance: s_b must be >= 0");
    if (!std::isfinite(s_m) || s_m < 0.0) throw ValidationError("guidance: s_m must be >= 0");
    if (!std::isfinite(beta) || beta < 0.0 || beta >= 1.0)
        throw ValidationError("guidance: beta must lie in [0, 1)");
    if (T < 1) throw ValidationError("guidance: T must be >= 1");
    if (delta < 0 || delta > T)
        throw ValidationError("guidance: delta must lie in [0, T], got " + std::to_string(delta));
}

Vec cfg_combine(const Vec& eps_u, const Vec& eps_c, double s_g) {
    check_same_dimension(eps_u, eps_c, "cfg_combine");
    Vec out(eps_u.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_u[i] + s_g * (eps_c[i] - eps_u[i]);
    return out;
}

Vec gamma_term(const Vec& eps_u, const Vec& eps_b, const GuidanceConfig& config,
               const MomentumState& state) {
    check_same_dimension(eps_u, eps_b, "gamma_term");
    check_same_dimension(eps_u, state.v, "gamma_term");
    Vec gamma(eps_u.size());
    for (std::size_t i = 0; i < gamma.size(); ++i)
        gamma[i] = config.s_b * (eps_b[i] - eps_u[i]) + config.s_m * state.v[i];
    return gamma;
}

MomentumState momentum_update(const MomentumState& state, const Vec& gamma, double beta) {
    check_same_dimension(state.v, gamma, "momentum_update");
    MomentumState next;
    next.v.resize(state.v.size());
    for (std::size_t i = 0; i < next.v.size(); ++i)
        next.v[i] = beta * state.v[i] + (1.0 - beta) * gamma[i];
    next.steps_elapsed = state.steps_elapsed + 1;
    return next;
}

std::pair<Vec, MomentumState> decodi_combine(const Vec& eps_u, const Vec& eps_c, const Vec& eps_b,
                                             const GuidanceConfig& config, const MomentumState& state) {
    config.validate();
    check_same_dimension(eps_u, eps_c, "decodi_combine");
    check_finite(eps_u, "decodi_combine eps_u");
    check_finite(eps_c, "decodi_combine eps_c");
    check_finite(eps_b, "decodi_combine eps_b");
    if (state.steps_elapsed >= config.T)
        throw ProtocolError("decodi_combine: called " + std::to_string(state.steps_elapsed + 1) +
                            " times for a " + std::to_string(config.T) + "-step trajectory");

    const Vec gamma = gamma_term(eps_u, eps_b, config, state);
    const bool warming_up = state.steps_elapsed < config.delta;

    MomentumState next;
    if (warming_up && !config.warmup_accumulates) {
        next = momentum_update(state, Vec(gamma.size(), 0.0), config.beta);
    } else {
        next = momentum_update(state, gamma, config.beta);
    }

    // Withheld or identically-zero gamma reduces to CFG; return the CFG
    // expression verbatim so the reduction is bitwise.
    if (warming_up || all_zero(gamma)) return {cfg_combine(eps_u, eps_c, config.s_g), std::move(next)};

    Vec out(eps_u.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = eps_u[i] + config.s_g * (eps_c[i] - eps_u[i] - gamma[i]);
    return {std::move(out), std::move(next)};
}

}  // namespace decodi
