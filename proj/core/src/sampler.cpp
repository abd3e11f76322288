#include "decodi/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

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

std::string to_string(Mode mode) { return mode == Mode::ORIGINAL ? "original" : "debiased"; }

Mode mode_from_string(const std::string& name) {
    if (name == "original") return Mode::ORIGINAL;
    if (name == "debiased") return Mode::DEBIASED;
    throw ValidationError("unknown mode '" + name + "'");
}

void RunConfig::validate() const {
    if (world == nullptr) throw ValidationError("run config: world is not set");
    world->validate();
    guidance.validate();
    schedule().validate();
    if (dimension < 1) throw ValidationError("run config: dimension must be >= 1");
    if (world->dimension() != static_cast<std::size_t>(dimension))
        throw ValidationError("run config: dimension " + std::to_string(dimension) +
                              " does not match the world's dimension " +
                              std::to_string(world->dimension()));
    world->condition_weights(prompt_condition);
    if (mode == Mode::DEBIASED && !bias_condition)
        throw ValidationError("run config: DEBIASED mode requires a bias condition");
    if (bias_condition) world->condition_weights(*bias_condition);
    if (seeds.empty()) throw ValidationError("run config: seed list is empty");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ValidationError("run config: seed list has duplicates");
}

SampleRecord generate_one(const RunConfig& run, std::uint64_t seed) {
    run.validate();
    const ConceptWorld& world = *run.world;
    const NoiseSchedule schedule = run.schedule();
    const std::size_t dim = static_cast<std::size_t>(run.dimension);
    const std::vector<double>& prompt_weights = world.condition_weights(run.prompt_condition);

    // Isotropic moment match of the conditioned mixture: mean m and average
    // per-coordinate variance (within-component plus between-means spread).
    Vec m(dim, 0.0);
    for (std::size_t k = 0; k < world.components.size(); ++k) {
        for (std::size_t i = 0; i < dim; ++i) m[i] += prompt_weights[k] * world.components[k].mu[i];
    }
    double avg_var = 0.0;
    for (std::size_t k = 0; k < world.components.size(); ++k) {
        double spread = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = world.components[k].mu[i] - m[i];
            spread += d * d;
        }
        avg_var += prompt_weights[k] * (world.components[k].var + spread / static_cast<double>(dim));
    }

    Rng rng(seed);
    const double init_std = std::sqrt(avg_var + schedule.cumulative_variance(schedule.T));
    LatentState state;
    state.t = schedule.T;
    state.z.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) state.z[i] = m[i] + init_std * rng.normal();

    SampleRecord record;
    record.seed = seed;
    record.mode = run.mode;
    record.prompt_condition = run.prompt_condition;
    if (run.record_trajectory) record.trajectory.push_back(state);

    const Conditioning uncond = Conditioning::unconditional();
    const Conditioning cond = Conditioning::on(run.prompt_condition);
    const Conditioning bias =
        run.bias_condition ? Conditioning::on(*run.bias_condition) : Conditioning::unconditional();
    MomentumState momentum = MomentumState::initial(dim);

    for (int t = schedule.T; t >= 1; --t) {
        const Vec eps_u = analytic_eps(state, uncond, world, schedule);
        const Vec eps_c = analytic_eps(state, cond, world, schedule);
        Vec eps;
        if (run.mode == Mode::ORIGINAL) {
            eps = cfg_combine(eps_u, eps_c, run.guidance.s_g);
        } else {
            const Vec eps_b = analytic_eps(state, bias, world, schedule);
            auto [combined, next] = decodi_combine(eps_u, eps_c, eps_b, run.guidance, momentum);
            eps = std::move(combined);
            momentum = std::move(next);
        }
        if (!all_finite(eps))
            throw NumericError("non-finite combined noise prediction at step " + std::to_string(t) +
                                   " (seed " + std::to_string(seed) + ")",
                               seed, t);
        state = reverse_step(state, eps, schedule, rng);
        if (!all_finite(state.z))
            throw NumericError("non-finite latent at step " + std::to_string(state.t) + " (seed " +
                                   std::to_string(seed) + ")",
                               seed, state.t);
        if (run.record_trajectory) record.trajectory.push_back(state);
    }

    record.x0 = state.z;
    return record;
}

BatchResult generate_batch(const RunConfig& run, int jobs) {
    run.validate();
    if (jobs < 1) throw ValidationError("generate_batch: jobs must be >= 1");

    const std::size_t n = run.seeds.size();
    std::vector<std::optional<SampleRecord>> slots(n);
    std::vector<BatchFailure> failures;
    std::mutex failures_mutex;

    auto work = [&](std::size_t index) {
        try {
            slots[index] = generate_one(run, run.seeds[index]);
        } catch (const NumericError& e) {
            std::lock_guard<std::mutex> lock(failures_mutex);
            failures.push_back({run.seeds[index], e.step(), e.what()});
        } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(failures_mutex);
            failures.push_back({run.seeds[index], -1, e.what()});
        }
    };

    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    BatchResult result;
    result.records.reserve(n);
    for (auto& slot : slots) {
        if (slot) result.records.push_back(std::move(*slot));
    }
    // Failures in seed-list order regardless of which worker hit them.
    std::sort(failures.begin(), failures.end(), [&](const BatchFailure& a, const BatchFailure& b) {
        auto pos = [&](std::uint64_t seed) {
            for (std::size_t i = 0; i < run.seeds.size(); ++i) {
                if (run.seeds[i] == seed) return i;
            }
            return run.seeds.size();
        };
        return pos(a.seed) < pos(b.seed);
    });
    result.failures = std::move(failures);
    return result;
}

}  // namespace decodi
