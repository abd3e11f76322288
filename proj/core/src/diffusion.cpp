#include "decodi/diffusion.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "decodi/error.hpp"

namespace decodi {

namespace {

bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

void NoiseSchedule::validate() const {
    if (T < 1) throw ValidationError("NoiseSchedule: T must be >= 1, got " + std::to_string(T));
    if (!std::isfinite(per_step_variance) || per_step_variance <= 0.0)
        throw ValidationError("NoiseSchedule: per_step_variance must be positive and finite");
}

LatentState forward_diffuse(const Vec& x0, int t, const NoiseSchedule& schedule, Rng& rng) {
    schedule.validate();
    if (t < 0 || t > schedule.T)
        throw StepRangeError("forward_diffuse: t = " + std::to_string(t) + " outside [0, " +
                             std::to_string(schedule.T) + "]");
    if (!all_finite(x0)) throw ValidationError("forward_diffuse: x0 has non-finite entries");

    LatentState out{x0, t};
    const double std_dev = std::sqrt(schedule.cumulative_variance(t));
    if (std_dev > 0.0) {
        for (auto& zi : out.z) zi += std_dev * rng.normal();
    }
    return out;
}

Vec x0_from_eps(const LatentState& state, const Vec& eps_hat, const NoiseSchedule& schedule) {
    schedule.validate();
    if (state.t < 1)
        throw StepRangeError("x0_from_eps: t = " + std::to_string(state.t) + " is not >= 1");
    if (state.z.size() != eps_hat.size())
        throw ValidationError("x0_from_eps: z and eps_hat dimensions differ");

    const double std_dev = std::sqrt(schedule.cumulative_variance(state.t));
    Vec x0(state.z.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = state.z[i] - std_dev * eps_hat[i];
    return x0;
}

LatentState reverse_step(const LatentState& state, const Vec& eps_hat, const NoiseSchedule& schedule,
                         Rng& rng) {
    schedule.validate();
    if (state.t < 1 || state.t > schedule.T)
        throw StepRangeError("reverse_step: t = " + std::to_string(state.t) + " outside [1, " +
                             std::to_string(schedule.T) + "]");

    const Vec x0_hat = x0_from_eps(state, eps_hat, schedule);
    const double t = static_cast<double>(state.t);
    const double shrink = (t - 1.0) / t;
    const double noise_std = std::sqrt(shrink * schedule.per_step_variance);

    LatentState out;
    out.t = state.t - 1;
    out.z.resize(state.z.size());
    if (state.t == 1) {
        out.z = x0_hat;  // exact: no shrinkage residue, no noise draw
        return out;
    }
    for (std::size_t i = 0; i < out.z.size(); ++i)
        out.z[i] = x0_hat[i] + shrink * (state.z[i] - x0_hat[i]);
    if (noise_std > 0.0) {
        for (auto& zi : out.z) zi += noise_std * rng.normal();
    }
    return out;
}

}  // namespace decodi
