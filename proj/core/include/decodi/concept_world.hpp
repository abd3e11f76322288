#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "decodi/diffusion.hpp"
#include "decodi/rng.hpp"

namespace decodi {

// Ordered attribute -> ordered legal values. The declaration order is
// meaningful: it defines deterministic tie-breaking for annotators.
struct AttributeScheme {
    std::vector<std::pair<std::string, std::vector<std::string>>> attributes;

    // gender {male, female}; ethnicity {black, white, asian, indian};
    // age {young, middle-age, elderly}.
    static AttributeScheme default_scheme();

    bool has_attribute(const std::string& attribute) const;
    const std::vector<std::string>& values(const std::string& attribute) const;
    void validate() const;
};

// One isotropic Gaussian mixture component with its attribute labels.
struct GaussianComponent {
    Vec mu;
    double var = 1.0;
    std::map<std::string, std::string> labels;  // one value per scheme attribute
};

// A labeled conditional Gaussian mixture. Conditions select component
// weight vectors; the unconditional weights stand in for the marginal the
// unconditioned noise model sees.
struct ConceptWorld {
    AttributeScheme scheme;
    std::vector<GaussianComponent> components;
    std::map<std::string, std::vector<double>> conditions;
    std::vector<double> unconditional_weights;

    std::size_t dimension() const { return components.empty() ? 0 : components.front().mu.size(); }
    const std::vector<double>& condition_weights(const std::string& id) const;
    void validate() const;
};

// Selector for the closed-form noise model: a named condition or the
// unconditional marginal.
struct Conditioning {
    std::optional<std::string> condition;

    static Conditioning unconditional() { return {}; }
    static Conditioning on(std::string id) { return Conditioning{std::move(id)}; }
};

// Posterior component probabilities given a latent z at step t, where
// z | component k ~ N(mu_k, (var_k + t * per_step_variance) * I).
// Computed with log-sum-exp stabilization.
std::vector<double> responsibilities(const Vec& z, int t, const std::vector<double>& weights,
                                     const ConceptWorld& world,
                                     const NoiseSchedule& schedule = NoiseSchedule{});

// Bayes-optimal denoiser E[x0 | z_t]: sum_k r_k * (tau * mu_k + var_k * z)
// / (var_k + tau) with tau = t * per_step_variance. At t = 0 returns z.
Vec posterior_mean(const Vec& z, int t, const std::vector<double>& weights, const ConceptWorld& world,
                   const NoiseSchedule& schedule = NoiseSchedule{});

// Optimal noise prediction (z_t - posterior_mean) / sqrt(tau); the zero
// vector at t = 0.
Vec analytic_eps(const LatentState& state, const Conditioning& conditioning, const ConceptWorld& world,
                 const NoiseSchedule& schedule = NoiseSchedule{});

// Exact ancestral draw from p(z_{t-1} | z_t) under the mixture prior:
// picks component k from the responsibilities, then samples the Gaussian
// conditional for that component. The reference against which the plug-in
// reverse_step is measured.
LatentState exact_reverse_step(const LatentState& state, const std::vector<double>& weights,
                               const ConceptWorld& world, const NoiseSchedule& schedule, Rng& rng);

// Draws component k from the weights, then x0 ~ N(mu_k, var_k * I).
Vec sample_prior(const std::vector<double>& weights, const ConceptWorld& world, Rng& rng);

// Pairwise component-mean separation (in units of the unit component sigma)
// and latent dimension used by the builtin worlds.
inline constexpr double kBuiltinSeparation = 8.0;
inline constexpr int kBuiltinDimension = 2;

// Three ready-made worlds ("nurse", "firefighter", "ceo") whose condition
// weights encode heavily skewed base rates, each with a matching
// bias:<value> condition concentrated on the over-represented components.
std::map<std::string, ConceptWorld> builtin_worlds();

}  // namespace decodi
