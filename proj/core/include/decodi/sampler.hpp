#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decodi/concept_world.hpp"
#include "decodi/guidance.hpp"

namespace decodi {

enum class Mode { ORIGINAL, DEBIASED };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// Everything one batch of seeded runs needs. The world outlives the config.
struct RunConfig {
    const ConceptWorld* world = nullptr;
    std::string prompt_condition;
    std::optional<std::string> bias_condition;  // required in DEBIASED mode
    GuidanceConfig guidance;
    int dimension = kBuiltinDimension;
    double per_step_variance = 1.0;
    std::vector<std::uint64_t> seeds;
    Mode mode = Mode::ORIGINAL;
    bool record_trajectory = false;

    NoiseSchedule schedule() const { return {guidance.T, per_step_variance}; }
    void validate() const;
};

struct SampleRecord {
    std::uint64_t seed = 0;
    Vec x0;
    Mode mode = Mode::ORIGINAL;
    std::vector<LatentState> trajectory;  // z_T .. z_0 when recorded, else empty
    std::string prompt_condition;
};

struct BatchFailure {
    std::uint64_t seed = 0;
    int step = -1;
    std::string message;
};

struct BatchResult {
    std::vector<SampleRecord> records;  // seed-list order; failed seeds omitted
    std::vector<BatchFailure> failures;
};

// One full reverse trajectory for one seed. Initializes z_T from an
// isotropic Gaussian matching the first two moments of the prompt-
// conditioned mixture convolved with the step-T noise, then walks t = T..1
// combining the closed-form noise predictions per the configured mode.
// Deterministic given the seed; the DEBIASED arm consumes the identical
// random stream as ORIGINAL, so paired runs share latents and noise.
SampleRecord generate_one(const RunConfig& run, std::uint64_t seed);

// One record per seed, in seed-list order, independent of the degree of
// parallelism. Per-seed failures are collected, not thrown.
BatchResult generate_batch(const RunConfig& run, int jobs = 1);

}  // namespace decodi
