#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "decodi/concept_world.hpp"
#include "decodi/evaluation.hpp"
#include "decodi/sampler.hpp"

namespace decodi {

// World files are JSON: scheme (ordered array), components (mu, var,
// labels), condition weight tables, unconditional weights. Round-trips
// losslessly.
std::string world_to_json(const ConceptWorld& world);
ConceptWorld world_from_json(const std::string& text);
void save_world(const ConceptWorld& world, const std::filesystem::path& path);
ConceptWorld load_world(const std::filesystem::path& path);

// Sample batches are JSON lines: {"seed", "mode", "condition", "x0"}.
void write_records(const std::vector<SampleRecord>& records, const std::filesystem::path& path);
std::vector<SampleRecord> read_records(const std::filesystem::path& path);

// 64-bit FNV-1a; used to fingerprint configs and worlds in manifests.
std::uint64_t fnv1a64(std::string_view text);
std::string fnv1a_hex(std::string_view text);

void write_report_json(const EvalReport& report, const std::filesystem::path& path);
void write_ratios_csv(const EvalReport& report, const std::filesystem::path& path);
void write_comparisons_csv(const EvalReport& report, const std::filesystem::path& path);
void write_summary_text(const EvalReport& report, const std::filesystem::path& path);

void write_text_file(const std::string& text, const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace decodi
