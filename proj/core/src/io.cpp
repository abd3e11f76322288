#include "decodi/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "decodi/error.hpp"

namespace decodi {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string formatted(const char* fmt, double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), fmt, value);
    return buffer;
}

json scheme_to_json(const AttributeScheme& scheme) {
    json out = json::array();
    for (const auto& [attribute, values] : scheme.attributes)
        out.push_back({{"attribute", attribute}, {"values", values}});
    return out;
}

AttributeScheme scheme_from_json(const json& j) {
    AttributeScheme scheme;
    for (const auto& entry : j) {
        scheme.attributes.emplace_back(entry.at("attribute").get<std::string>(),
                                       entry.at("values").get<std::vector<std::string>>());
    }
    return scheme;
}

}  // namespace

std::string world_to_json(const ConceptWorld& world) {
    ordered_json j;
    j["scheme"] = scheme_to_json(world.scheme);
    j["components"] = ordered_json::array();
    for (const auto& comp : world.components) {
        ordered_json c;
        c["mu"] = comp.mu;
        c["var"] = comp.var;
        c["labels"] = comp.labels;
        j["components"].push_back(std::move(c));
    }
    j["conditions"] = world.conditions;
    j["unconditional_weights"] = world.unconditional_weights;
    return j.dump(2) + "\n";
}

ConceptWorld world_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("world file is not valid JSON: ") + e.what());
    }
    ConceptWorld world;
    try {
        world.scheme = scheme_from_json(j.at("scheme"));
        for (const auto& c : j.at("components")) {
            GaussianComponent comp;
            comp.mu = c.at("mu").get<Vec>();
            comp.var = c.at("var").get<double>();
            comp.labels = c.at("labels").get<std::map<std::string, std::string>>();
            world.components.push_back(std::move(comp));
        }
        world.conditions = j.at("conditions").get<std::map<std::string, std::vector<double>>>();
        world.unconditional_weights = j.at("unconditional_weights").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("world file schema error: ") + e.what());
    }
    world.validate();
    return world;
}

void save_world(const ConceptWorld& world, const std::filesystem::path& path) {
    write_text_file(world_to_json(world), path);
}

ConceptWorld load_world(const std::filesystem::path& path) {
    return world_from_json(read_text_file(path));
}

void write_records(const std::vector<SampleRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& record : records) {
        json j;
        j["seed"] = record.seed;
        j["mode"] = to_string(record.mode);
        j["condition"] = record.prompt_condition;
        j["x0"] = record.x0;
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<SampleRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open record file '" + path.string() + "'");
    std::vector<SampleRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("record file '" + path.string() + "' line " + std::to_string(line_number) +
                          " is not valid JSON: " + e.what());
        }
        try {
            SampleRecord record;
            record.seed = j.at("seed").get<std::uint64_t>();
            record.mode = mode_from_string(j.at("mode").get<std::string>());
            record.prompt_condition = j.at("condition").get<std::string>();
            record.x0 = j.at("x0").get<Vec>();
            records.push_back(std::move(record));
        } catch (const json::exception& e) {
            throw ValidationError("record file '" + path.string() + "' line " +
                                  std::to_string(line_number) + " schema error: " + e.what());
        }
    }
    return records;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char byte : text) {
        hash ^= byte;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fnv1a_hex(std::string_view text) {
    char buffer[20];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buffer;
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
    ordered_json j;
    j["ratio_tables"] = ordered_json::array();
    for (const auto& entry : report.ratio_tables) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : entry.rows)
            rows.push_back({{"value", row.value}, {"count", row.count}, {"percentage", row.percentage}});
        j["ratio_tables"].push_back(
            {{"mode", entry.mode}, {"attribute", entry.attribute}, {"rows", std::move(rows)}});
    }
    j["comparisons"] = ordered_json::array();
    for (const auto& cmp : report.comparisons) {
        j["comparisons"].push_back({{"mode", cmp.mode},
                                    {"attribute", cmp.attribute},
                                    {"annotator_a", cmp.annotator_a},
                                    {"annotator_b", cmp.annotator_b},
                                    {"agreement", cmp.agreement},
                                    {"chi2_statistic", cmp.chi2.statistic},
                                    {"dof", cmp.chi2.dof},
                                    {"p_value", cmp.chi2.p_value}});
    }
    j["fairness"] = ordered_json::array();
    for (const auto& entry : report.fairness)
        j["fairness"].push_back(
            {{"mode", entry.mode}, {"attribute", entry.attribute}, {"score", entry.score}});
    j["quality"] = ordered_json::array();
    for (const auto& entry : report.quality)
        j["quality"].push_back({{"mode", entry.mode},
                                {"proxy", entry.proxy},
                                {"reference", entry.reference},
                                {"reference_se", entry.reference_se}});
    j["biased_values"] = ordered_json::array();
    for (const auto& flag : report.biased_values)
        j["biased_values"].push_back({{"attribute", flag.attribute}, {"value", flag.value}});
    write_text_file(j.dump(2) + "\n", path);
}

void write_ratios_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "mode,attribute,value,count,percentage,biased\n";
    for (const auto& entry : report.ratio_tables) {
        for (const auto& row : entry.rows) {
            bool biased = false;
            for (const auto& flag : report.biased_values)
                biased = biased || (flag.attribute == entry.attribute && flag.value == row.value);
            out << entry.mode << ',' << entry.attribute << ',' << row.value << ',' << row.count << ','
                << formatted("%.4f", row.percentage) << ',' << (biased ? 1 : 0) << "\n";
        }
    }
    write_text_file(out.str(), path);
}

void write_comparisons_csv(const EvalReport& report, const std::filesystem::path& path) {
    // Raw p-values with a plain 0.05 significance flag; the Bonferroni
    // column divides 0.05 by the number of comparisons for contrast.
    const std::size_t tests = report.comparisons.empty() ? 1 : report.comparisons.size();
    const double bonferroni = 0.05 / static_cast<double>(tests);
    std::ostringstream out;
    out << "mode,attribute,annotator_a,annotator_b,agreement,chi2_statistic,dof,p_value,"
           "significant_0.05,significant_bonferroni\n";
    for (const auto& cmp : report.comparisons) {
        out << cmp.mode << ',' << cmp.attribute << ',' << cmp.annotator_a << ',' << cmp.annotator_b << ','
            << formatted("%.6f", cmp.agreement) << ',' << formatted("%.6g", cmp.chi2.statistic) << ','
            << cmp.chi2.dof << ',' << formatted("%.6g", cmp.chi2.p_value) << ','
            << (cmp.chi2.p_value < 0.05 ? 1 : 0) << ',' << (cmp.chi2.p_value < bonferroni ? 1 : 0)
            << "\n";
    }
    write_text_file(out.str(), path);
}

void write_summary_text(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "== Label ratios ==\n";
    for (const auto& entry : report.ratio_tables) {
        out << entry.mode << " / " << entry.attribute << ":\n";
        for (const auto& row : entry.rows) {
            bool biased = false;
            for (const auto& flag : report.biased_values)
                biased = biased || (flag.attribute == entry.attribute && flag.value == row.value);
            out << "  " << row.value << ": " << row.count << " (" << formatted("%.2f", row.percentage)
                << "%)" << (biased ? "  [biased value]" : "") << "\n";
        }
    }
    out << "\n== Annotator comparisons ==\n";
    for (const auto& cmp : report.comparisons) {
        out << cmp.mode << " / " << cmp.attribute << " / " << cmp.annotator_a << " vs " << cmp.annotator_b
            << ": agreement " << formatted("%.4f", cmp.agreement) << ", chi2 "
            << formatted("%.4g", cmp.chi2.statistic) << " (dof " << cmp.chi2.dof << ", p "
            << formatted("%.4g", cmp.chi2.p_value) << ")\n";
    }
    out << "\n== Fairness (1 = balanced) ==\n";
    for (const auto& entry : report.fairness)
        out << entry.mode << " / " << entry.attribute << ": " << formatted("%.4f", entry.score) << "\n";
    out << "\n== Quality proxy (mean conditional log-density) ==\n";
    for (const auto& entry : report.quality)
        out << entry.mode << ": " << formatted("%.4f", entry.proxy) << "  (target distribution "
            << formatted("%.4f", entry.reference) << " +/- " << formatted("%.4f", entry.reference_se)
            << ")\n";
    write_text_file(out.str(), path);
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return buffer.str();
}

}  // namespace decodi
