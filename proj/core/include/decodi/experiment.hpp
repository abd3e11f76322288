#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decodi/concept_world.hpp"
#include "decodi/evaluation.hpp"
#include "decodi/guidance.hpp"

namespace decodi {

struct AnnotatorSpec {
    std::string id;
    double rho = 0.0;  // probability of flipping away from the reference label
};

// Grid for the sweep command; empty axes keep the config's base value.
struct SweepGrid {
    std::vector<double> s_b{0.0, 1.0, 3.0, 7.0, 15.0};
    std::vector<double> s_m;
    std::vector<double> beta;
    std::vector<int> delta;
};

// Everything a command run needs, loadable from one JSON file; unknown or
// ill-typed fields fail fast with the offending field named.
struct ExperimentConfig {
    std::string world = "nurse";   // builtin name, or path to a world file
    std::string prompt_condition;  // empty: defaults to the builtin world's name
    std::string bias_condition;    // empty: the world's single bias:* condition
    GuidanceConfig guidance;
    int dimension = kBuiltinDimension;
    double per_step_variance = 1.0;
    int seed_count = 200;
    std::uint64_t first_seed = 1;
    std::vector<std::uint64_t> seeds;  // explicit list; overrides seed_count when non-empty
    std::vector<AnnotatorSpec> annotators{{"a1", 0.0}, {"a2", 0.0}};
    SweepGrid sweep;
    int quality_reference_draws = 20000;

    void validate() const;
    std::vector<std::uint64_t> seed_list() const;
};

ExperimentConfig config_from_json(const std::string& text);

// Canonical form: every field explicit, fixed key order; the manifest
// hash is FNV-1a over exactly this string.
std::string config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);

// World plus resolved condition ids and seed list, shared by all commands.
struct ResolvedExperiment {
    ConceptWorld world;
    std::string prompt_condition;
    std::string bias_condition;
    std::vector<std::uint64_t> seeds;
};

ResolvedExperiment resolve(const ExperimentConfig& config);

// The attribute the bias condition singles out, together with the value it
// concentrates on: the unique scheme attribute on which all positively
// weighted bias components agree while the world's components do not.
std::pair<std::string, std::string> biased_attribute(const ConceptWorld& world,
                                                     const std::string& bias_condition);

struct GenerateOutput {
    std::filesystem::path original_records;
    std::filesystem::path debiased_records;
    std::filesystem::path manifest;
};

// Runs both arms over the seed list and writes original.jsonl,
// debiased.jsonl and manifest.json into out_dir.
GenerateOutput run_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                            int jobs = 1);

struct EvaluateOutput {
    EvalReport report;
    std::filesystem::path report_json;
    std::filesystem::path ratios_csv;
    std::filesystem::path comparisons_csv;
    std::filesystem::path summary_text;
};

// Reads both record files from records_dir, runs the configured annotators
// over each arm, and writes the report files into out_dir.
EvaluateOutput run_evaluate(const ExperimentConfig& config, const std::filesystem::path& records_dir,
                            const std::filesystem::path& out_dir);

struct SweepRow {
    double s_b = 0.0;
    double s_m = 0.0;
    double beta = 0.0;
    int delta = 0;
    std::string biased_value;
    double biased_share = 0.0;
    double fairness = 0.0;
    double quality = 0.0;
};

// One DEBIASED batch per grid point (the s_b = 0 row doubles as the
// original-model baseline and is added if the grid omits it). Rows are
// labeled with the swept attribute's biased-value share, the fairness
// score over that attribute, and the quality proxy. Duplicate grid points
// are dropped with a warning.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                int jobs = 1, std::vector<std::string>* warnings = nullptr);

}  // namespace decodi
