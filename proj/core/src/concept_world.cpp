#include "decodi/concept_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "decodi/error.hpp"

namespace decodi {

namespace {

constexpr double kSimplexTolerance = 1e-12;

void check_weights(const std::vector<double>& weights, std::size_t n_components) {
    if (weights.size() != n_components)
        throw ValidationError("weights length " + std::to_string(weights.size()) +
                              " does not match component count " + std::to_string(n_components));
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and non-negative");
        sum += w;
    }
    if (sum <= 0.0) throw ValidationError("weights must not be all zero");
}

double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<double> renormalized(std::vector<double> w) {
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    return w;
}

// (1 - a) * weights + a * uniform; keeps the simplex exactly.
std::vector<double> blend_toward_uniform(const std::vector<double>& weights, double a) {
    std::vector<double> out(weights.size());
    const double u = 1.0 / static_cast<double>(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) out[k] = (1.0 - a) * weights[k] + a * u;
    return out;
}

// K means on a circle in the first two dims with pairwise chord distance
// >= separation between adjacent components.
Vec circle_mean(std::size_t k, std::size_t n, double separation, std::size_t dimension) {
    Vec mu(dimension, 0.0);
    if (n == 1) return mu;
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(n)));
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    mu[0] = radius * std::cos(angle);
    if (dimension > 1) mu[1] = radius * std::sin(angle);
    return mu;
}

ConceptWorld make_builtin(const std::string& concept_name, const std::string& varying_attribute,
                          const std::vector<std::string>& varying_values,
                          const std::map<std::string, std::string>& fixed_labels,
                          std::vector<double> condition_weights, const std::string& biased_value) {
    ConceptWorld world;
    world.scheme = AttributeScheme::default_scheme();

    const std::size_t n = varying_values.size();
    for (std::size_t k = 0; k < n; ++k) {
        GaussianComponent comp;
        comp.mu = circle_mean(k, n, kBuiltinSeparation, kBuiltinDimension);
        comp.var = 1.0;
        comp.labels = fixed_labels;
        comp.labels[varying_attribute] = varying_values[k];
        world.components.push_back(std::move(comp));
    }

    condition_weights = renormalized(std::move(condition_weights));
    world.conditions[concept_name] = condition_weights;

    std::vector<double> bias(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (varying_values[k] == biased_value) bias[k] = 1.0;
    }
    world.conditions["bias:" + biased_value] = renormalized(std::move(bias));

    // The marginal the unconditioned noise model sees: mostly the
    // concept's skew, with a small uniform floor for coverage.
    world.unconditional_weights = blend_toward_uniform(condition_weights, 0.10);

    world.validate();
    return world;
}

}  // namespace

AttributeScheme AttributeScheme::default_scheme() {
    AttributeScheme scheme;
    scheme.attributes = {
        {"gender", {"male", "female"}},
        {"ethnicity", {"black", "white", "asian", "indian"}},
        {"age", {"young", "middle-age", "elderly"}},
    };
    return scheme;
}

bool AttributeScheme::has_attribute(const std::string& attribute) const {
    for (const auto& [name, vals] : attributes) {
        if (name == attribute) return true;
    }
    return false;
}

const std::vector<std::string>& AttributeScheme::values(const std::string& attribute) const {
    for (const auto& [name, vals] : attributes) {
        if (name == attribute) return vals;
    }
    throw LookupError("unknown attribute '" + attribute + "'");
}

void AttributeScheme::validate() const {
    if (attributes.empty()) throw ValidationError("scheme must declare at least one attribute");
    for (const auto& [name, vals] : attributes) {
        if (name.empty()) throw ValidationError("scheme attribute names must be non-empty");
        if (vals.empty()) throw ValidationError("attribute '" + name + "' has no values");
        for (std::size_t i = 0; i < vals.size(); ++i) {
            for (std::size_t j = i + 1; j < vals.size(); ++j) {
                if (vals[i] == vals[j])
                    throw ValidationError("attribute '" + name + "' lists duplicate value '" + vals[i] + "'");
            }
        }
    }
}

const std::vector<double>& ConceptWorld::condition_weights(const std::string& id) const {
    auto it = conditions.find(id);
    if (it == conditions.end()) throw LookupError("unknown condition '" + id + "'");
    return it->second;
}

void ConceptWorld::validate() const {
    scheme.validate();
    if (components.empty()) throw ValidationError("world has no components");
    if (conditions.empty()) throw ValidationError("world declares no conditions");

    const std::size_t dim = components.front().mu.size();
    for (const auto& comp : components) {
        if (comp.mu.size() != dim) throw ValidationError("components disagree on dimension");
        for (double m : comp.mu) {
            if (!std::isfinite(m)) throw ValidationError("component mean has non-finite entries");
        }
        if (!std::isfinite(comp.var) || comp.var <= 0.0)
            throw ValidationError("component variance must be positive and finite");
        for (const auto& [attribute, vals] : scheme.attributes) {
            auto it = comp.labels.find(attribute);
            if (it == comp.labels.end())
                throw ValidationError("component lacks a label for attribute '" + attribute + "'");
            if (std::find(vals.begin(), vals.end(), it->second) == vals.end())
                throw ValidationError("component label '" + it->second + "' is not legal for attribute '" +
                                      attribute + "'");
        }
    }
    for (std::size_t i = 0; i < components.size(); ++i) {
        for (std::size_t j = i + 1; j < components.size(); ++j) {
            if (components[i].mu == components[j].mu)
                throw ValidationError("component means must be pairwise distinct");
        }
    }

    auto check_simplex = [&](const std::vector<double>& w, const std::string& label) {
        if (w.size() != components.size())
            throw ValidationError(label + ": weight length does not match component count");
        double sum = 0.0;
        for (double x : w) {
            if (!std::isfinite(x) || x < 0.0) throw ValidationError(label + ": weights must be non-negative");
            sum += x;
        }
        if (std::fabs(sum - 1.0) > kSimplexTolerance)
            throw ValidationError(label + ": weights sum to " + std::to_string(sum) + ", not 1");
    };
    for (const auto& [id, w] : conditions) check_simplex(w, "condition '" + id + "'");
    check_simplex(unconditional_weights, "unconditional weights");
}

std::vector<double> responsibilities(const Vec& z, int t, const std::vector<double>& weights,
                                     const ConceptWorld& world, const NoiseSchedule& schedule) {
    if (t < 0) throw StepRangeError("responsibilities: t must be >= 0");
    check_weights(weights, world.components.size());
    const double tau = schedule.cumulative_variance(t);
    const std::size_t dim = z.size();
    const std::size_t n = world.components.size();

    std::vector<double> logp(n, -std::numeric_limits<double>::infinity());
    double max_logp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (weights[k] == 0.0) continue;
        const auto& comp = world.components[k];
        if (comp.mu.size() != dim)
            throw ValidationError("responsibilities: z dimension does not match the world");
        const double s2 = comp.var + tau;
        logp[k] = std::log(weights[k]) -
                  0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * s2) -
                  0.5 * squared_distance(z, comp.mu) / s2;
        max_logp = std::max(max_logp, logp[k]);
    }

    std::vector<double> r(n, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::isinf(logp[k])) continue;
        r[k] = std::exp(logp[k] - max_logp);
        total += r[k];
    }
    for (double& x : r) x /= total;
    return r;
}

Vec posterior_mean(const Vec& z, int t, const std::vector<double>& weights, const ConceptWorld& world,
                   const NoiseSchedule& schedule) {
    const double tau = schedule.cumulative_variance(t);
    if (tau == 0.0) {
        check_weights(weights, world.components.size());
        return z;  // no noise: the clean sample is its own posterior mean
    }
    const std::vector<double> r = responsibilities(z, t, weights, world, schedule);
    Vec mean(z.size(), 0.0);
    for (std::size_t k = 0; k < world.components.size(); ++k) {
        if (r[k] == 0.0) continue;
        const auto& comp = world.components[k];
        const double denom = comp.var + tau;
        for (std::size_t i = 0; i < z.size(); ++i)
            mean[i] += r[k] * (tau * comp.mu[i] + comp.var * z[i]) / denom;
    }
    return mean;
}

Vec analytic_eps(const LatentState& state, const Conditioning& conditioning, const ConceptWorld& world,
                 const NoiseSchedule& schedule) {
    if (state.t < 0) throw StepRangeError("analytic_eps: t must be >= 0");
    const std::vector<double>& weights = conditioning.condition
                                             ? world.condition_weights(*conditioning.condition)
                                             : world.unconditional_weights;
    if (state.t == 0) {
        check_weights(weights, world.components.size());
        return Vec(state.z.size(), 0.0);
    }
    const Vec mean = posterior_mean(state.z, state.t, weights, world, schedule);
    const double scale = 1.0 / std::sqrt(schedule.cumulative_variance(state.t));
    Vec eps(state.z.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (state.z[i] - mean[i]) * scale;
    return eps;
}

LatentState exact_reverse_step(const LatentState& state, const std::vector<double>& weights,
                               const ConceptWorld& world, const NoiseSchedule& schedule, Rng& rng) {
    if (state.t < 1 || state.t > schedule.T)
        throw StepRangeError("exact_reverse_step: t = " + std::to_string(state.t) + " outside [1, " +
                             std::to_string(schedule.T) + "]");
    const std::vector<double> r = responsibilities(state.z, state.t, weights, world, schedule);
    const std::size_t k = rng.categorical(r);
    const auto& comp = world.components[k];

    const double tau_t = schedule.cumulative_variance(state.t);
    const double tau_prev = schedule.cumulative_variance(state.t - 1);
    const double shrink = (comp.var + tau_prev) / (comp.var + tau_t);
    const double noise_std = std::sqrt((comp.var + tau_prev) * (1.0 - shrink));

    LatentState out;
    out.t = state.t - 1;
    out.z.resize(state.z.size());
    for (std::size_t i = 0; i < out.z.size(); ++i)
        out.z[i] = comp.mu[i] + shrink * (state.z[i] - comp.mu[i]) + noise_std * rng.normal();
    return out;
}

Vec sample_prior(const std::vector<double>& weights, const ConceptWorld& world, Rng& rng) {
    check_weights(weights, world.components.size());
    const std::size_t k = rng.categorical(weights);
    const auto& comp = world.components[k];
    const double std_dev = std::sqrt(comp.var);
    Vec x0(comp.mu.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = comp.mu[i] + std_dev * rng.normal();
    return x0;
}

std::map<std::string, ConceptWorld> builtin_worlds() {
    std::map<std::string, ConceptWorld> worlds;

    worlds["nurse"] = make_builtin("nurse", "gender", {"male", "female"},
                                   {{"ethnicity", "white"}, {"age", "young"}},
                                   {0.005, 0.995}, "female");

    // The smallest ethnicity weight is floored at 0.001 before
    // renormalizing so every component keeps a finite log-density.
    worlds["firefighter"] = make_builtin("firefighter", "ethnicity", {"black", "white", "asian", "indian"},
                                         {{"gender", "male"}, {"age", "young"}},
                                         {0.0975, 0.885, 0.001, 0.0175}, "white");

    worlds["ceo"] = make_builtin("ceo", "age", {"young", "middle-age", "elderly"},
                                 {{"gender", "male"}, {"ethnicity", "white"}},
                                 {0.0125, 0.43, 0.5575}, "elderly");

    return worlds;
}

}  // namespace decodi
