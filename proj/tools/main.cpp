#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decodi/concept_world.hpp"
#include "decodi/error.hpp"
#include "decodi/experiment.hpp"
#include "decodi/io.hpp"
#include "decodi/version.hpp"

namespace {

using namespace decodi;

ExperimentConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return ExperimentConfig{};
    return load_config(config_path);
}

std::vector<std::uint64_t> read_seed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open seed file '" + path + "'");
    std::vector<std::uint64_t> seeds;
    std::string token;
    while (in >> token) {
        try {
            seeds.push_back(std::stoull(token));
        } catch (const std::exception&) {
            throw ValidationError("seed file '" + path + "': '" + token + "' is not a 64-bit seed");
        }
    }
    if (seeds.empty()) throw ValidationError("seed file '" + path + "' holds no seeds");
    return seeds;
}

void apply_seed_file(ExperimentConfig& config, const std::string& seed_file) {
    if (seed_file.empty()) return;
    config.seeds = read_seed_file(seed_file);
    config.validate();
}

int cmd_print_config(const std::string& config_path) {
    std::cout << config_to_json(load_or_default(config_path));
    return 0;
}

int cmd_worlds() {
    for (const auto& [name, world] : builtin_worlds()) {
        const auto& weights = world.condition_weights(name);
        std::cout << name << " (dimension " << world.dimension() << ", " << world.components.size()
                  << " components)\n";
        for (std::size_t k = 0; k < world.components.size(); ++k) {
            std::cout << "  component " << k << ":";
            for (const auto& [attribute, value] : world.components[k].labels)
                std::cout << " " << attribute << "=" << value;
            std::cout << "  weight " << weights[k] << "\n";
        }
        for (const auto& [id, condition_weights] : world.conditions) {
            if (id.rfind("bias:", 0) != 0) continue;
            std::cout << "  " << id << " weights:";
            for (double w : condition_weights) std::cout << " " << w;
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, int jobs,
                 const std::string& seed_file) {
    ExperimentConfig config = load_or_default(config_path);
    apply_seed_file(config, seed_file);
    const GenerateOutput out = run_generate(config, out_dir, jobs);
    std::cout << "wrote " << out.original_records.string() << "\n"
              << "wrote " << out.debiased_records.string() << "\n"
              << "wrote " << out.manifest.string() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& records_dir,
                 const std::string& out_dir) {
    ExperimentConfig config = load_or_default(config_path);
    const std::string records = records_dir.empty() ? out_dir : records_dir;
    const EvaluateOutput out = run_evaluate(config, records, out_dir);
    std::cout << "wrote " << out.report_json.string() << "\n"
              << "wrote " << out.ratios_csv.string() << "\n"
              << "wrote " << out.comparisons_csv.string() << "\n"
              << "wrote " << out.summary_text.string() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs,
              const std::string& seed_file) {
    ExperimentConfig config = load_or_default(config_path);
    apply_seed_file(config, seed_file);
    std::vector<std::string> warnings;
    const auto rows = run_sweep(config, out_dir, jobs, &warnings);
    for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "sweep.csv").string() << " (" << rows.size()
              << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided-diffusion debiasing laboratory over closed-form mixture worlds"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string records_dir;
    std::string seed_file;
    int jobs = 1;

    auto* generate = app.add_subcommand("generate", "Run both arms over the seed list");
    generate->add_option("--config", config_path, "Experiment config JSON");
    generate->add_option("--out", out_dir, "Output directory");
    generate->add_option("--jobs", jobs, "Max parallel sampling runs")->check(CLI::PositiveNumber);
    generate->add_option("--seed-file", seed_file, "File with one seed per line");

    auto* evaluate = app.add_subcommand("evaluate", "Annotate recorded samples and write the report");
    evaluate->add_option("--config", config_path, "Experiment config JSON");
    evaluate->add_option("--out", out_dir, "Output directory");
    evaluate->add_option("--records", records_dir, "Directory holding the record files (default: --out)");

    auto* sweep = app.add_subcommand("sweep", "Run the hyperparameter grid and write sweep.csv");
    sweep->add_option("--config", config_path, "Experiment config JSON");
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--jobs", jobs, "Max parallel sampling runs")->check(CLI::PositiveNumber);
    sweep->add_option("--seed-file", seed_file, "File with one seed per line");

    auto* print_config = app.add_subcommand("print-config", "Print the full config with defaults");
    print_config->add_option("--config", config_path, "Experiment config JSON");

    app.add_subcommand("worlds", "List builtin worlds and their bias conditions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // clean --help stays 0; usage errors are validation failures
    }

    try {
        if (app.got_subcommand("generate")) return cmd_generate(config_path, out_dir, jobs, seed_file);
        if (app.got_subcommand("evaluate")) return cmd_evaluate(config_path, records_dir, out_dir);
        if (app.got_subcommand("sweep")) return cmd_sweep(config_path, out_dir, jobs, seed_file);
        if (app.got_subcommand("print-config")) return cmd_print_config(config_path);
        if (app.got_subcommand("worlds")) return cmd_worlds();
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << " [seed " << e.seed() << ", step " << e.step()
                  << "]\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
