#include "decodi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "decodi/error.hpp"
#include "decodi/io.hpp"
#include "decodi/sampler.hpp"
#include "decodi/version.hpp"

namespace decodi {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key))
            throw ValidationError("config: unknown field '" + where + key + "'");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: field '" + where + key + "' has the wrong type");
    }
}

GuidanceConfig guidance_from_json(const json& j) {
    GuidanceConfig g;
    reject_unknown_keys(j, {"s_g", "s_b", "s_m", "beta", "delta", "T", "warmup_accumulates"},
                        "guidance.");
    read_field(j, "s_g", g.s_g, "guidance.");
    read_field(j, "s_b", g.s_b, "guidance.");
    read_field(j, "s_m", g.s_m, "guidance.");
    read_field(j, "beta", g.beta, "guidance.");
    read_field(j, "delta", g.delta, "guidance.");
    read_field(j, "T", g.T, "guidance.");
    read_field(j, "warmup_accumulates", g.warmup_accumulates, "guidance.");
    return g;
}

std::string csv_number(double value) {
    char buffer[48];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (world.empty()) throw ValidationError("config: world must be set");
    guidance.validate();
    if (dimension < 1) throw ValidationError("config: dimension must be >= 1");
    if (!std::isfinite(per_step_variance) || per_step_variance <= 0.0)
        throw ValidationError("config: per_step_variance must be positive and finite");
    if (seeds.empty() && seed_count < 1)
        throw ValidationError("config: seed_count must be >= 1 when no explicit seeds are given");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ValidationError("config: explicit seed list has duplicates");
    if (annotators.empty()) throw ValidationError("config: at least one annotator is required");
    std::set<std::string> ids;
    for (const auto& annotator : annotators) {
        if (annotator.id.empty()) throw ValidationError("config: annotator ids must be non-empty");
        if (!ids.insert(annotator.id).second)
            throw ValidationError("config: duplicate annotator id '" + annotator.id + "'");
        if (!(annotator.rho >= 0.0) || annotator.rho > 1.0)
            throw ValidationError("config: annotator '" + annotator.id + "' rho must lie in [0, 1]");
    }
    if (quality_reference_draws < 2)
        throw ValidationError("config: quality_reference_draws must be >= 2");
    for (int d : sweep.delta) {
        if (d < 0 || d > guidance.T)
            throw ValidationError("config: sweep delta value " + std::to_string(d) +
                                  " outside [0, T]");
    }
    for (double v : sweep.s_b) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("config: sweep s_b values must be >= 0");
    }
    for (double v : sweep.s_m) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("config: sweep s_m values must be >= 0");
    }
    for (double v : sweep.beta) {
        if (!std::isfinite(v) || v < 0.0 || v >= 1.0)
            throw ValidationError("config: sweep beta values must lie in [0, 1)");
    }
}

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out(static_cast<std::size_t>(seed_count));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = first_seed + i;
    return out;
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
    reject_unknown_keys(j,
                        {"world", "prompt_condition", "bias_condition", "guidance", "dimension",
                         "per_step_variance", "seed_count", "first_seed", "seeds", "annotators",
                         "sweep", "quality_reference_draws"},
                        "");

    ExperimentConfig cfg;
    read_field(j, "world", cfg.world, "");
    read_field(j, "prompt_condition", cfg.prompt_condition, "");
    read_field(j, "bias_condition", cfg.bias_condition, "");
    if (j.contains("guidance")) {
        if (!j.at("guidance").is_object())
            throw ValidationError("config: field 'guidance' must be an object");
        cfg.guidance = guidance_from_json(j.at("guidance"));
    }
    read_field(j, "dimension", cfg.dimension, "");
    read_field(j, "per_step_variance", cfg.per_step_variance, "");
    read_field(j, "seed_count", cfg.seed_count, "");
    read_field(j, "first_seed", cfg.first_seed, "");
    read_field(j, "seeds", cfg.seeds, "");
    if (j.contains("annotators")) {
        if (!j.at("annotators").is_array())
            throw ValidationError("config: field 'annotators' must be an array");
        cfg.annotators.clear();
        for (const auto& entry : j.at("annotators")) {
            reject_unknown_keys(entry, {"id", "rho"}, "annotators[].");
            AnnotatorSpec spec;
            read_field(entry, "id", spec.id, "annotators[].");
            read_field(entry, "rho", spec.rho, "annotators[].");
            cfg.annotators.push_back(std::move(spec));
        }
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (!s.is_object()) throw ValidationError("config: field 'sweep' must be an object");
        reject_unknown_keys(s, {"s_b", "s_m", "beta", "delta"}, "sweep.");
        read_field(s, "s_b", cfg.sweep.s_b, "sweep.");
        read_field(s, "s_m", cfg.sweep.s_m, "sweep.");
        read_field(s, "beta", cfg.sweep.beta, "sweep.");
        read_field(s, "delta", cfg.sweep.delta, "sweep.");
    }
    read_field(j, "quality_reference_draws", cfg.quality_reference_draws, "");
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& config) {
    ordered_json j;
    j["world"] = config.world;
    j["prompt_condition"] = config.prompt_condition;
    j["bias_condition"] = config.bias_condition;
    j["guidance"] = {{"s_g", config.guidance.s_g},
                     {"s_b", config.guidance.s_b},
                     {"s_m", config.guidance.s_m},
                     {"beta", config.guidance.beta},
                     {"delta", config.guidance.delta},
                     {"T", config.guidance.T},
                     {"warmup_accumulates", config.guidance.warmup_accumulates}};
    j["dimension"] = config.dimension;
    j["per_step_variance"] = config.per_step_variance;
    j["seed_count"] = config.seed_count;
    j["first_seed"] = config.first_seed;
    j["seeds"] = config.seeds;
    j["annotators"] = ordered_json::array();
    for (const auto& annotator : config.annotators)
        j["annotators"].push_back({{"id", annotator.id}, {"rho", annotator.rho}});
    j["sweep"] = {{"s_b", config.sweep.s_b},
                  {"s_m", config.sweep.s_m},
                  {"beta", config.sweep.beta},
                  {"delta", config.sweep.delta}};
    j["quality_reference_draws"] = config.quality_reference_draws;
    return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_json(read_text_file(path));
}

ResolvedExperiment resolve(const ExperimentConfig& config) {
    config.validate();
    ResolvedExperiment out;

    auto builtins = builtin_worlds();
    auto it = builtins.find(config.world);
    const bool is_builtin = it != builtins.end();
    if (is_builtin) {
        out.world = it->second;
    } else if (config.world.find('/') != std::string::npos || config.world.ends_with(".json")) {
        out.world = load_world(config.world);
    } else {
        std::string names;
        for (const auto& [name, world] : builtins) names += (names.empty() ? "" : ", ") + name;
        throw LookupError("unknown world '" + config.world + "'; builtins are: " + names);
    }

    out.prompt_condition = config.prompt_condition;
    if (out.prompt_condition.empty()) {
        if (!is_builtin)
            throw ValidationError("config: prompt_condition is required when loading a world file");
        out.prompt_condition = config.world;
    }
    out.world.condition_weights(out.prompt_condition);

    out.bias_condition = config.bias_condition;
    if (out.bias_condition.empty()) {
        for (const auto& [id, weights] : out.world.conditions) {
            if (id.rfind("bias:", 0) != 0) continue;
            if (!out.bias_condition.empty())
                throw ValidationError(
                    "config: the world defines several bias:* conditions; set bias_condition explicitly");
            out.bias_condition = id;
        }
        if (out.bias_condition.empty())
            throw ValidationError("config: the world defines no bias:* condition; set bias_condition");
    }
    out.world.condition_weights(out.bias_condition);

    out.seeds = config.seed_list();
    return out;
}

std::pair<std::string, std::string> biased_attribute(const ConceptWorld& world,
                                                     const std::string& bias_condition) {
    const std::vector<double>& weights = world.condition_weights(bias_condition);
    std::vector<std::pair<std::string, std::string>> candidates;
    for (const auto& [attribute, values] : world.scheme.attributes) {
        std::string shared;
        bool uniform_on_support = true;
        for (std::size_t k = 0; k < world.components.size(); ++k) {
            if (weights[k] == 0.0) continue;
            const std::string& value = world.components[k].labels.at(attribute);
            if (shared.empty()) {
                shared = value;
            } else if (shared != value) {
                uniform_on_support = false;
                break;
            }
        }
        if (!uniform_on_support) continue;
        // Skip attributes every component shares; they cannot be the one
        // the bias condition singles out.
        bool whole_world_shares = true;
        for (const auto& comp : world.components)
            whole_world_shares = whole_world_shares && comp.labels.at(attribute) == shared;
        if (!whole_world_shares) candidates.emplace_back(attribute, shared);
    }
    if (candidates.size() != 1)
        throw ValidationError("bias condition '" + bias_condition +
                              "' does not isolate exactly one varying attribute");
    return candidates.front();
}

GenerateOutput run_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                            int jobs) {
    ResolvedExperiment resolved = resolve(config);

    RunConfig run;
    run.world = &resolved.world;
    run.prompt_condition = resolved.prompt_condition;
    run.bias_condition = resolved.bias_condition;
    run.guidance = config.guidance;
    run.dimension = config.dimension;
    run.per_step_variance = config.per_step_variance;
    run.seeds = resolved.seeds;

    auto run_arm = [&](Mode mode) {
        RunConfig arm = run;
        arm.mode = mode;
        BatchResult result = generate_batch(arm, jobs);
        if (!result.failures.empty()) {
            const auto& first = result.failures.front();
            throw NumericError("generation failed for " + std::to_string(result.failures.size()) +
                                   " seed(s); first failure: " + first.message,
                               first.seed, first.step);
        }
        return result.records;
    };

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    GenerateOutput out;
    out.original_records = out_dir / "original.jsonl";
    out.debiased_records = out_dir / "debiased.jsonl";
    out.manifest = out_dir / "manifest.json";

    write_records(run_arm(Mode::ORIGINAL), out.original_records);
    write_records(run_arm(Mode::DEBIASED), out.debiased_records);

    const std::string canonical = config_to_json(config);
    ordered_json manifest;
    manifest["artifact_version"] = kVersion;
    manifest["config_hash"] = fnv1a_hex(canonical);
    manifest["world_hash"] = fnv1a_hex(world_to_json(resolved.world));
    manifest["prompt_condition"] = resolved.prompt_condition;
    manifest["bias_condition"] = resolved.bias_condition;
    manifest["seed_count"] = resolved.seeds.size();
    manifest["seeds"] = resolved.seeds;
    manifest["files"] = {{"original", "original.jsonl"}, {"debiased", "debiased.jsonl"}};
    manifest["config"] = json::parse(canonical);
    write_text_file(manifest.dump(2) + "\n", out.manifest);
    return out;
}

EvaluateOutput run_evaluate(const ExperimentConfig& config, const std::filesystem::path& records_dir,
                            const std::filesystem::path& out_dir) {
    ResolvedExperiment resolved = resolve(config);
    const ConceptWorld& world = resolved.world;

    auto load_arm = [&](const char* file, Mode expected) {
        ArmInputs arm;
        arm.samples = read_records(records_dir / file);
        if (arm.samples.empty())
            throw ValidationError(std::string("record file '") + file + "' holds no records");
        for (const auto& record : arm.samples) {
            if (record.x0.size() != world.dimension())
                throw ValidationError(std::string("record file '") + file +
                                      "' does not match the world: wrong sample dimension");
            world.condition_weights(record.prompt_condition);
            if (record.mode != expected)
                throw ValidationError(std::string("record file '") + file + "' holds " +
                                      to_string(record.mode) + " records");
        }
        return arm;
    };

    ArmInputs original = load_arm("original.jsonl", Mode::ORIGINAL);
    ArmInputs debiased = load_arm("debiased.jsonl", Mode::DEBIASED);

    auto annotate_arm = [&](ArmInputs& arm, std::uint64_t arm_stream) {
        for (const auto& annotator : config.annotators) {
            Rng rng = Rng::derive(fnv1a64(annotator.id), arm_stream);
            for (std::size_t i = 0; i < arm.samples.size(); ++i) {
                AnnotationRecord record;
                record.sample_index = static_cast<int>(i);
                record.annotator_id = annotator.id;
                for (const auto& [attribute, values] : world.scheme.attributes)
                    record.labels[attribute] =
                        noisy_annotate(arm.samples[i].x0, world, attribute, annotator.rho, rng);
                arm.annotations.push_back(std::move(record));
            }
        }
    };
    annotate_arm(original, 1);
    annotate_arm(debiased, 2);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    EvaluateOutput out;
    out.report = build_report(original, debiased, world);
    out.report_json = out_dir / "report.json";
    out.ratios_csv = out_dir / "ratios.csv";
    out.comparisons_csv = out_dir / "comparisons.csv";
    out.summary_text = out_dir / "summary.txt";
    write_report_json(out.report, out.report_json);
    write_ratios_csv(out.report, out.ratios_csv);
    write_comparisons_csv(out.report, out.comparisons_csv);
    write_summary_text(out.report, out.summary_text);
    return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                int jobs, std::vector<std::string>* warnings) {
    ResolvedExperiment resolved = resolve(config);
    const ConceptWorld& world = resolved.world;
    const auto [attribute, biased_value] = biased_attribute(world, resolved.bias_condition);
    const auto& attribute_values = world.scheme.values(attribute);

    using Point = std::tuple<double, double, double, int>;
    const std::vector<double> s_b_axis =
        config.sweep.s_b.empty() ? std::vector<double>{config.guidance.s_b} : config.sweep.s_b;
    const std::vector<double> s_m_axis =
        config.sweep.s_m.empty() ? std::vector<double>{config.guidance.s_m} : config.sweep.s_m;
    const std::vector<double> beta_axis =
        config.sweep.beta.empty() ? std::vector<double>{config.guidance.beta} : config.sweep.beta;
    const std::vector<int> delta_axis =
        config.sweep.delta.empty() ? std::vector<int>{config.guidance.delta} : config.sweep.delta;

    std::vector<Point> points;
    bool has_baseline = false;
    for (double s_b : s_b_axis) {
        for (double s_m : s_m_axis) {
            for (double beta : beta_axis) {
                for (int delta : delta_axis) {
                    const Point point{s_b, s_m, beta, delta};
                    if (std::find(points.begin(), points.end(), point) != points.end()) {
                        if (warnings)
                            warnings->push_back("duplicate grid point (s_b=" + csv_number(s_b) +
                                                ", s_m=" + csv_number(s_m) + ", beta=" +
                                                csv_number(beta) + ", delta=" + std::to_string(delta) +
                                                ") skipped");
                        continue;
                    }
                    has_baseline = has_baseline || s_b == 0.0;
                    points.push_back(point);
                }
            }
        }
    }
    if (points.empty()) throw ValidationError("sweep: the grid is empty");
    if (!has_baseline) {
        // The s_b = 0 run reduces to the original model exactly; every
        // sweep carries it as the baseline row.
        points.insert(points.begin(),
                      Point{0.0, config.guidance.s_m, config.guidance.beta, config.guidance.delta});
    }

    RunConfig base;
    base.world = &world;
    base.prompt_condition = resolved.prompt_condition;
    base.bias_condition = resolved.bias_condition;
    base.guidance = config.guidance;
    base.dimension = config.dimension;
    base.per_step_variance = config.per_step_variance;
    base.seeds = resolved.seeds;
    base.mode = Mode::DEBIASED;

    std::vector<SweepRow> rows;
    for (const auto& [s_b, s_m, beta, delta] : points) {
        RunConfig run = base;
        run.guidance.s_b = s_b;
        run.guidance.s_m = s_m;
        run.guidance.beta = beta;
        run.guidance.delta = delta;

        BatchResult result = generate_batch(run, jobs);
        if (!result.failures.empty()) {
            const auto& first = result.failures.front();
            throw NumericError("sweep point (s_b=" + csv_number(s_b) + ") failed for " +
                                   std::to_string(result.failures.size()) +
                                   " seed(s); first failure: " + first.message,
                               first.seed, first.step);
        }

        std::vector<std::uint64_t> counts(attribute_values.size(), 0);
        std::vector<Vec> xs;
        xs.reserve(result.records.size());
        for (const auto& record : result.records) {
            const std::string label = map_annotate(record.x0, world, attribute);
            const auto pos = std::find(attribute_values.begin(), attribute_values.end(), label);
            ++counts[static_cast<std::size_t>(pos - attribute_values.begin())];
            xs.push_back(record.x0);
        }
        const auto biased_pos = std::find(attribute_values.begin(), attribute_values.end(), biased_value);

        SweepRow row;
        row.s_b = s_b;
        row.s_m = s_m;
        row.beta = beta;
        row.delta = delta;
        row.biased_value = biased_value;
        row.biased_share = static_cast<double>(counts[static_cast<std::size_t>(
                               biased_pos - attribute_values.begin())]) /
                           static_cast<double>(result.records.size());
        row.fairness = normalized_kl_fairness(counts, static_cast<int>(attribute_values.size()));
        row.quality = quality_proxy(xs, world, resolved.prompt_condition);
        rows.push_back(std::move(row));
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    std::ostringstream csv;
    csv << "s_b,s_m,beta,delta,biased_value,biased_share,fairness,quality_proxy\n";
    for (const auto& row : rows) {
        csv << csv_number(row.s_b) << ',' << csv_number(row.s_m) << ',' << csv_number(row.beta) << ','
            << row.delta << ',' << row.biased_value << ',' << csv_number(row.biased_share) << ','
            << csv_number(row.fairness) << ',' << csv_number(row.quality) << "\n";
    }
    write_text_file(csv.str(), out_dir / "sweep.csv");
    return rows;
}

}  // namespace decodi
