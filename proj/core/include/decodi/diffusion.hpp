#pragma once

#include <vector>

#include "decodi/rng.hpp"

namespace decodi {

using Vec = std::vector<double>;

// Step budget and per-step noise variance of the additive random-walk
// forward process z_{t+1} = z_t + sqrt(per_step_variance) * eps_t.
struct NoiseSchedule {
    int T = 50;
    double per_step_variance = 1.0;

    // Var(z_t - x0) after t forward steps.
    double cumulative_variance(int t) const {
        return static_cast<double>(t) * per_step_variance;
    }

    void validate() const;
};

// A latent vector together with its step index; t = 0 is clean data.
struct LatentState {
    Vec z;
    int t = 0;
};

// z_t = x0 + sqrt(t * per_step_variance) * eps with eps ~ N(0, I).
// At t = 0 returns x0 exactly and draws nothing.
LatentState forward_diffuse(const Vec& x0, int t, const NoiseSchedule& schedule, Rng& rng);

// Inverts the forward definition around a noise estimate:
// x0_hat = z_t - sqrt(t * per_step_variance) * eps_hat. Requires t >= 1.
Vec x0_from_eps(const LatentState& state, const Vec& eps_hat, const NoiseSchedule& schedule);

// Ancestral step: draws z_{t-1} from the Gaussian posterior of the random
// walk conditioned on x0_hat = x0_from_eps(state, eps_hat). The mean is
// x0_hat + ((t-1)/t) * (z_t - x0_hat) and the injected noise has variance
// ((t-1)/t) * per_step_variance per coordinate. At t = 1 the result is
// exactly x0_hat and no noise is drawn.
LatentState reverse_step(const LatentState& state, const Vec& eps_hat, const NoiseSchedule& schedule,
                         Rng& rng);

}  // namespace decodi
