#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "decodi/concept_world.hpp"
#include "decodi/sampler.hpp"
#include "decodi/stats.hpp"

namespace decodi {

// One annotator's labels for one sample.
struct AnnotationRecord {
    int sample_index = 0;
    std::string annotator_id;
    std::map<std::string, std::string> labels;  // attribute -> value
};

// Deterministic stand-in for a human labeler: assigns the attribute value
// with maximal posterior component mass at t = 0 under the unconditional
// weights. Ties break toward the earlier value in scheme order.
std::string map_annotate(const Vec& x0, const ConceptWorld& world, const std::string& attribute);

// map_annotate with probability 1 - rho; otherwise a uniformly random
// different legal value (when the attribute has at least two values).
std::string noisy_annotate(const Vec& x0, const ConceptWorld& world, const std::string& attribute,
                           double rho, Rng& rng);

struct RatioRow {
    std::string value;
    std::uint64_t count = 0;
    double percentage = 0.0;
};

// Counts and percentages over all records, in scheme value order; values
// that never occur are reported with count 0.
std::vector<RatioRow> ratio_table(const std::vector<AnnotationRecord>& annotations,
                                  const AttributeScheme& scheme, const std::string& attribute);

// Fraction of shared sample indices on which both annotators chose the
// same value. The two lists must cover the same index set.
double agreement_rate(const std::vector<AnnotationRecord>& a, const std::vector<AnnotationRecord>& b,
                      const std::string& attribute);

// Mean log-density of the samples under the condition's mixture at t = 0.
double quality_proxy(const std::vector<Vec>& samples, const ConceptWorld& world,
                     const std::string& condition);

// Monte Carlo estimate of the conditional mixture's expected log-density;
// returns (mean, standard error). Reported next to the proxy so the gap
// between generated samples and the target distribution is visible.
std::pair<double, double> expected_log_density(const ConceptWorld& world, const std::string& condition,
                                               int n, Rng& rng);

struct RatioTableEntry {
    std::string mode;       // "original" | "debiased"
    std::string attribute;
    std::vector<RatioRow> rows;
};

struct PairComparison {
    std::string mode;
    std::string attribute;
    std::string annotator_a;
    std::string annotator_b;
    double agreement = 0.0;
    Chi2Result chi2;
};

struct FairnessEntry {
    std::string mode;
    std::string attribute;
    double score = 0.0;
};

struct QualityEntry {
    std::string mode;
    double proxy = 0.0;
    double reference = 0.0;     // Monte Carlo expected log-density
    double reference_se = 0.0;
};

struct BiasedValue {
    std::string attribute;
    std::string value;  // holds > 50% of the original arm's mass
};

struct EvalReport {
    std::vector<RatioTableEntry> ratio_tables;
    std::vector<PairComparison> comparisons;
    std::vector<FairnessEntry> fairness;
    std::vector<QualityEntry> quality;
    std::vector<BiasedValue> biased_values;
};

// One arm's samples plus every annotator's records over them;
// sample_index refers into samples.
struct ArmInputs {
    std::vector<SampleRecord> samples;
    std::vector<AnnotationRecord> annotations;
};

// Assembles the full report: pooled ratio tables, per-annotator-pair
// agreement and homogeneity tests, fairness per (mode, attribute), the
// quality proxy with its Monte Carlo reference, and the biased-value
// flags derived from the original arm. A unanimous annotator pair leaves
// the homogeneity test vacuous; it is reported as statistic 0, dof 0,
// p = 1 rather than an error.
EvalReport build_report(const ArmInputs& original, const ArmInputs& debiased, const ConceptWorld& world);

}  // namespace decodi
