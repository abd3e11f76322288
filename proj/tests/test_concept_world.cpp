#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "decodi/concept_world.hpp"
#include "decodi/error.hpp"
#include "decodi/evaluation.hpp"
#include "oracles.hpp"

using namespace decodi;

namespace {

// 1-D gender world with components at 0 (male) and 4 (female), unit
// variance, used for the scalar closed-form checks.
ConceptWorld line_world() {
    ConceptWorld w;
    w.scheme.attributes = {{"gender", {"male", "female"}}};
    w.components = {{Vec{0.0}, 1.0, {{"gender", "male"}}}, {Vec{4.0}, 1.0, {{"gender", "female"}}}};
    w.conditions = {{"equal", {0.5, 0.5}}};
    w.unconditional_weights = {0.5, 0.5};
    w.validate();
    return w;
}

double label_mass(const ConceptWorld& w, const std::vector<double>& weights,
                  const std::string& attribute, const std::string& value) {
    double mass = 0.0;
    for (std::size_t k = 0; k < w.components.size(); ++k)
        if (w.components[k].labels.at(attribute) == value) mass += weights[k];
    return mass;
}

}  // namespace

TEST_CASE("builtin worlds expose the documented structure") {
    const auto worlds = builtin_worlds();
    REQUIRE(worlds.size() == 3);
    REQUIRE(worlds.count("nurse") == 1);
    REQUIRE(worlds.count("firefighter") == 1);
    REQUIRE(worlds.count("ceo") == 1);

    for (const auto& [name, world] : worlds) {
        CHECK_NOTHROW(world.validate());
        CHECK(world.dimension() == static_cast<std::size_t>(kBuiltinDimension));
        REQUIRE(world.conditions.count(name) == 1);
        for (const auto& [id, weights] : world.conditions) {
            double sum = 0.0;
            for (double x : weights) sum += x;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        // Nearest component means sit one full separation apart.
        double min_dist = 1e300;
        for (std::size_t i = 0; i < world.components.size(); ++i)
            for (std::size_t j = i + 1; j < world.components.size(); ++j) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < world.dimension(); ++d) {
                    const double diff = world.components[i].mu[d] - world.components[j].mu[d];
                    d2 += diff * diff;
                }
                min_dist = std::min(min_dist, std::sqrt(d2));
            }
        CHECK(min_dist == doctest::Approx(kBuiltinSeparation).epsilon(1e-9));
        // The unconditional marginal is the prompt mixture blended 10%
        // toward uniform, keeping every component reachable.
        const auto& cond = world.conditions.at(name);
        const double k = static_cast<double>(world.components.size());
        for (std::size_t i = 0; i < cond.size(); ++i)
            CHECK(world.unconditional_weights[i] ==
                  doctest::Approx(0.9 * cond[i] + 0.1 / k).epsilon(1e-12));
    }

    const auto& nurse = worlds.at("nurse");
    CHECK(nurse.components.size() == 2);
    CHECK(label_mass(nurse, nurse.conditions.at("nurse"), "gender", "female") ==
          doctest::Approx(0.995).epsilon(1e-12));
    CHECK(label_mass(nurse, nurse.conditions.at("bias:female"), "gender", "female") == 1.0);

    const auto& firefighter = worlds.at("firefighter");
    CHECK(firefighter.components.size() == 4);
    const auto& ff_cond = firefighter.conditions.at("firefighter");
    CHECK(label_mass(firefighter, ff_cond, "ethnicity", "white") ==
          doctest::Approx(0.885 / 1.001).epsilon(1e-12));
    // The zero-weight group is floored, not dropped.
    CHECK(label_mass(firefighter, ff_cond, "ethnicity", "asian") ==
          doctest::Approx(0.001 / 1.001).epsilon(1e-12));
    CHECK(label_mass(firefighter, firefighter.conditions.at("bias:white"), "ethnicity", "white") ==
          1.0);

    const auto& ceo = worlds.at("ceo");
    CHECK(ceo.components.size() == 3);
    CHECK(label_mass(ceo, ceo.conditions.at("ceo"), "age", "elderly") ==
          doctest::Approx(0.5575).epsilon(1e-12));
    CHECK(label_mass(ceo, ceo.conditions.at("bias:elderly"), "age", "elderly") == 1.0);
}

TEST_CASE("default scheme lists the three protected attributes in order") {
    const AttributeScheme s = AttributeScheme::default_scheme();
    REQUIRE(s.attributes.size() == 3);
    CHECK(s.attributes[0].first == "gender");
    CHECK(s.attributes[0].second == std::vector<std::string>{"male", "female"});
    CHECK(s.attributes[1].first == "ethnicity");
    CHECK(s.attributes[1].second == std::vector<std::string>{"black", "white", "asian", "indian"});
    CHECK(s.attributes[2].first == "age");
    CHECK(s.attributes[2].second == std::vector<std::string>{"young", "middle-age", "elderly"});
}

TEST_CASE("responsibilities: degenerate and symmetric cases") {
    ConceptWorld single;
    single.scheme.attributes = {{"gender", {"male", "female"}}};
    single.components = {{Vec{1.0, 2.0}, 1.0, {{"gender", "male"}}}};
    single.conditions = {{"only", {1.0}}};
    single.unconditional_weights = {1.0};
    single.validate();
    const auto r = responsibilities(Vec{-3.0, 9.0}, 17, {1.0}, single);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == 1.0);

    ConceptWorld pair;
    pair.scheme.attributes = {{"gender", {"male", "female"}}};
    pair.components = {{Vec{1.0, 0.0}, 1.0, {{"gender", "male"}}},
                       {Vec{-1.0, 0.0}, 1.0, {{"gender", "female"}}}};
    pair.conditions = {{"equal", {0.5, 0.5}}};
    pair.unconditional_weights = {0.5, 0.5};
    pair.validate();
    const auto rs = responsibilities(Vec{0.0, 0.0}, 3, {0.5, 0.5}, pair);
    CHECK(rs[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rs[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("responsibilities match the scalar Gaussian ratio") {
    const ConceptWorld w = line_world();
    const auto r = responsibilities(Vec{1.0}, 0, {0.5, 0.5}, w);
    const double expected = 1.0 / (1.0 + std::exp(-4.0));
    CHECK(std::abs(r[0] - expected) <= 1e-15);
    CHECK(std::abs(r[0] - 0.9820137900379084) <= 5e-16);
    CHECK(r[0] + r[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("responsibilities stay on the simplex for awkward inputs") {
    const ConceptWorld w = line_world();
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec z{(rng.uniform() - 0.5) * 2000.0};
        const int t = static_cast<int>(rng.uniform() * 50);
        const auto r = responsibilities(z, t, {0.3, 0.7}, w);
        double sum = 0.0;
        for (double x : r) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("responsibilities converge to the prior weights as t grows") {
    const ConceptWorld w = line_world();
    const std::vector<double> weights{0.3, 0.7};
    const auto r = responsibilities(Vec{123.0}, 1000000, weights, w);
    CHECK(std::abs(r[0] - 0.3) < 1e-3);
    CHECK(std::abs(r[1] - 0.7) < 1e-3);
}

TEST_CASE("posterior_mean: exact cases and the quadrature cross-check") {
    const ConceptWorld w = line_world();

    const Vec z{0.123456789};
    CHECK(posterior_mean(z, 0, {0.5, 0.5}, w) == z);

    ConceptWorld tight;
    tight.scheme.attributes = {{"gender", {"male", "female"}}};
    tight.components = {{Vec{2.5}, 1e-12, {{"gender", "male"}}}};
    tight.conditions = {{"only", {1.0}}};
    tight.unconditional_weights = {1.0};
    tight.validate();
    const Vec pm_tight = posterior_mean(Vec{40.0}, 10, {1.0}, tight);
    CHECK(pm_tight[0] == doctest::Approx(2.5).epsilon(1e-9));

    const Vec pm = posterior_mean(Vec{1.0}, 1, {0.5, 0.5}, w);
    CHECK(std::abs(pm[0] - 0.7384058440442351) <= 1e-14);
    const double quad =
        oracle::mixture_posterior_mean_quadrature({0.5, 0.5}, {0.0, 4.0}, {1.0, 1.0}, 1.0, 1.0);
    CHECK(std::abs(pm[0] - quad) <= 1e-6);
}

TEST_CASE("posterior_mean respects per-step variance in the schedule") {
    const ConceptWorld w = line_world();
    const NoiseSchedule sched{50, 0.25};
    // t = 4 at variance 0.25 equals tau = 1, so the frozen value applies.
    const Vec pm = posterior_mean(Vec{1.0}, 4, {0.5, 0.5}, w, sched);
    CHECK(std::abs(pm[0] - 0.7384058440442351) <= 1e-14);
}

TEST_CASE("posterior_mean stays inside the hull of the component targets") {
    const ConceptWorld w = line_world();
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const double z = (rng.uniform() - 0.5) * 40.0;
        const int t = 1 + static_cast<int>(rng.uniform() * 49);
        const double tau = static_cast<double>(t);
        double lo = 1e300, hi = -1e300;
        for (const auto& comp : w.components) {
            const double target = (tau * comp.mu[0] + comp.var * z) / (comp.var + tau);
            lo = std::min(lo, target);
            hi = std::max(hi, target);
        }
        const double pm = posterior_mean(Vec{z}, t, {0.4, 0.6}, w)[0];
        CHECK(pm >= lo - 1e-12);
        CHECK(pm <= hi + 1e-12);
    }
}

TEST_CASE("analytic_eps: zero at t=0 and algebraically tied to posterior_mean") {
    const ConceptWorld w = line_world();
    CHECK(analytic_eps(LatentState{Vec{5.0}, 0}, Conditioning::on("equal"), w) == Vec{0.0});

    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const double z = (rng.uniform() - 0.5) * 30.0;
        const int t = 1 + static_cast<int>(rng.uniform() * 49);
        const Vec eps = analytic_eps(LatentState{Vec{z}, t}, Conditioning::on("equal"), w);
        const Vec pm = posterior_mean(Vec{z}, t, {0.5, 0.5}, w);
        CHECK(std::abs(z - std::sqrt(static_cast<double>(t)) * eps[0] - pm[0]) <= 1e-12);
    }
}

TEST_CASE("analytic_eps approaches the single-component closed form") {
    ConceptWorld tight;
    tight.scheme.attributes = {{"gender", {"male", "female"}}};
    tight.components = {{Vec{-1.5}, 1e-12, {{"gender", "female"}}}};
    tight.conditions = {{"only", {1.0}}};
    tight.unconditional_weights = {1.0};
    tight.validate();
    const double z = 3.5;
    const int t = 9;
    const Vec eps = analytic_eps(LatentState{Vec{z}, t}, Conditioning::on("only"), tight);
    CHECK(eps[0] == doctest::Approx((z - (-1.5)) / 3.0).epsilon(1e-9));
}

TEST_CASE("analytic_eps selects the unconditional weights by default") {
    const auto worlds = builtin_worlds();
    const auto& nurse = worlds.at("nurse");
    const LatentState state{Vec{1.0, -1.0}, 5};
    const Vec uncond = analytic_eps(state, Conditioning::unconditional(), nurse);
    const Vec by_hand =
        posterior_mean(state.z, state.t, nurse.unconditional_weights, nurse);
    for (std::size_t d = 0; d < 2; ++d)
        CHECK(uncond[d] == doctest::Approx((state.z[d] - by_hand[d]) / std::sqrt(5.0)).epsilon(1e-15));
    CHECK_THROWS_AS(analytic_eps(state, Conditioning::on("no-such-condition"), nurse), LookupError);
}

TEST_CASE("exact_reverse_step chain recovers a single-component prior") {
    ConceptWorld single;
    single.scheme.attributes = {{"gender", {"male", "female"}}};
    single.components = {{Vec{1.5, -0.5}, 1.0, {{"gender", "female"}}}};
    single.conditions = {{"only", {1.0}}};
    single.unconditional_weights = {1.0};
    single.validate();

    const NoiseSchedule sched;
    Rng rng(555);
    const int n = 10000;
    std::vector<double> first(n), second(n);
    for (int i = 0; i < n; ++i) {
        LatentState state;
        state.t = sched.T;
        const double marginal_std = std::sqrt(1.0 + sched.cumulative_variance(sched.T));
        state.z = {1.5 + marginal_std * rng.normal(), -0.5 + marginal_std * rng.normal()};
        while (state.t > 0) state = exact_reverse_step(state, {1.0}, single, sched, rng);
        first[i] = state.z[0];
        second[i] = state.z[1];
    }
    // 3 sigma of the mean and variance estimators at n = 10^4.
    CHECK(std::abs(oracle::mean(first) - 1.5) < 0.03);
    CHECK(std::abs(oracle::mean(second) + 0.5) < 0.03);
    CHECK(std::abs(oracle::sample_variance(first) - 1.0) < 0.045);
    CHECK(std::abs(oracle::sample_variance(second) - 1.0) < 0.045);
    CHECK(oracle::ks_normal_p(first, 1.5, 1.0) > 0.01);
}

TEST_CASE("exact_reverse_step respects the mixture weights") {
    const auto worlds = builtin_worlds();
    const auto& nurse = worlds.at("nurse");
    const NoiseSchedule sched;
    Rng rng(808);

    auto run_chain = [&](const std::vector<double>& weights) {
        double m0 = 0.0, m1 = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            m0 += weights[k] * nurse.components[k].mu[0];
            m1 += weights[k] * nurse.components[k].mu[1];
        }
        LatentState state;
        state.t = sched.T;
        const double marginal_std = std::sqrt(1.0 + sched.cumulative_variance(sched.T) + 16.0);
        state.z = {m0 + marginal_std * rng.normal(), m1 + marginal_std * rng.normal()};
        while (state.t > 0) state = exact_reverse_step(state, weights, nurse, sched, rng);
        return map_annotate(state.z, nurse, "gender");
    };

    const int n = 10000;
    int female_equal = 0;
    for (int i = 0; i < n; ++i)
        if (run_chain({0.5, 0.5}) == "female") ++female_equal;
    CHECK(std::abs(female_equal / static_cast<double>(n) - 0.5) <= 0.03);

    for (int i = 0; i < 1000; ++i) CHECK(run_chain({1.0, 0.0}) == "male");
}

TEST_CASE("sample_prior matches the mixture it draws from") {
    const ConceptWorld w = line_world();
    Rng rng(4242);

    // The components sit 4 sigma apart, so the midpoint label boundary
    // leaks Phi(-2) of each component's mass to the other side.
    const double leak = oracle::normal_cdf(-2.0, 0.0, 1.0);

    double degenerate_sum = 0.0;
    int degenerate_female = 0;
    for (int i = 0; i < 500; ++i) {
        const Vec x = sample_prior({0.0, 1.0}, w, rng);
        degenerate_sum += x[0];
        degenerate_female += map_annotate(x, w, "gender") == "female";
    }
    CHECK(std::abs(degenerate_sum / 500.0 - 4.0) <= 0.15);
    CHECK(std::abs(degenerate_female / 500.0 - (1.0 - leak)) <=
          3.0 * std::sqrt(leak * (1.0 - leak) / 500.0) + 1e-3);

    const int n = 20000;
    int female = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample_prior({0.3, 0.7}, w, rng);
        sum += x[0];
        if (map_annotate(x, w, "gender") == "female") ++female;
    }
    const double freq = female / static_cast<double>(n);
    const double p_female = 0.7 * (1.0 - leak) + 0.3 * leak;
    CHECK(std::abs(freq - p_female) <= 3.0 * std::sqrt(p_female * (1.0 - p_female) / n) + 1e-3);
    CHECK(std::abs(sum / n - 0.7 * 4.0) <= 0.05);
}

TEST_CASE("weight and world validation reject malformed inputs") {
    ConceptWorld w = line_world();
    CHECK_THROWS_AS(responsibilities(Vec{0.0}, 1, {0.0, 0.0}, w), ValidationError);
    CHECK_THROWS_AS(responsibilities(Vec{0.0}, -1, {0.5, 0.5}, w), StepRangeError);
    CHECK_THROWS_AS(responsibilities(Vec{0.0, 0.0}, 1, {0.5, 0.5}, w), ValidationError);
    CHECK_THROWS_AS(w.condition_weights("missing"), LookupError);

    ConceptWorld bad_simplex = line_world();
    bad_simplex.conditions["equal"] = {0.6, 0.6};
    CHECK_THROWS_AS(bad_simplex.validate(), ValidationError);

    ConceptWorld bad_label = line_world();
    bad_label.components[0].labels["gender"] = "robot";
    CHECK_THROWS_AS(bad_label.validate(), ValidationError);

    ConceptWorld dup_means = line_world();
    dup_means.components[1].mu = dup_means.components[0].mu;
    CHECK_THROWS_AS(dup_means.validate(), ValidationError);

    ConceptWorld bad_var = line_world();
    bad_var.components[0].var = 0.0;
    CHECK_THROWS_AS(bad_var.validate(), ValidationError);

    Rng rng(1);
    const NoiseSchedule sched;
    CHECK_THROWS_AS(exact_reverse_step(LatentState{Vec{0.0}, 0}, {0.5, 0.5}, w, sched, rng),
                    StepRangeError);
}
