#include "decodi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "decodi/error.hpp"

namespace decodi {

namespace {

constexpr std::uint64_t kQualityReferenceStream = 0x71a1u;  // fixed so reports reproduce

double log_mixture_density(const Vec& x, const std::vector<double>& weights, const ConceptWorld& world) {
    const std::size_t dim = x.size();
    double max_logp = -std::numeric_limits<double>::infinity();
    std::vector<double> logp(world.components.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < world.components.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const auto& comp = world.components[k];
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = x[i] - comp.mu[i];
            sq += d * d;
        }
        logp[k] = std::log(weights[k]) -
                  0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * comp.var) -
                  0.5 * sq / comp.var;
        max_logp = std::max(max_logp, logp[k]);
    }
    double sum = 0.0;
    for (double lp : logp) {
        if (!std::isinf(lp)) sum += std::exp(lp - max_logp);
    }
    return max_logp + std::log(sum);
}

// Pooled per-value counts for one attribute, in scheme order.
std::vector<std::uint64_t> value_counts(const std::vector<AnnotationRecord>& annotations,
                                        const AttributeScheme& scheme, const std::string& attribute) {
    const auto& values = scheme.values(attribute);
    std::vector<std::uint64_t> counts(values.size(), 0);
    for (const auto& record : annotations) {
        auto it = record.labels.find(attribute);
        if (it == record.labels.end())
            throw ValidationError("annotation (sample " + std::to_string(record.sample_index) +
                                  ") lacks attribute '" + attribute + "'");
        auto pos = std::find(values.begin(), values.end(), it->second);
        if (pos == values.end())
            throw ValidationError("annotation value '" + it->second + "' is not legal for attribute '" +
                                  attribute + "'");
        ++counts[static_cast<std::size_t>(pos - values.begin())];
    }
    return counts;
}

void validate_arm(const ArmInputs& arm, const ConceptWorld& world, const char* name) {
    if (arm.samples.empty()) throw ValidationError(std::string(name) + " arm has no samples");
    if (arm.annotations.empty()) throw ValidationError(std::string(name) + " arm has no annotations");
    for (const auto& record : arm.annotations) {
        if (record.sample_index < 0 ||
            static_cast<std::size_t>(record.sample_index) >= arm.samples.size())
            throw ValidationError(std::string(name) + " arm: annotation sample index " +
                                  std::to_string(record.sample_index) + " is out of range");
        if (record.annotator_id.empty())
            throw ValidationError(std::string(name) + " arm: annotation lacks an annotator id");
    }
    for (const auto& sample : arm.samples) {
        if (sample.x0.size() != world.dimension())
            throw ValidationError(std::string(name) + " arm: sample dimension does not match the world");
    }
}

}  // namespace

std::string map_annotate(const Vec& x0, const ConceptWorld& world, const std::string& attribute) {
    const auto& values = world.scheme.values(attribute);
    const std::vector<double> r = responsibilities(x0, 0, world.unconditional_weights, world);

    std::size_t best = 0;
    double best_mass = -1.0;
    for (std::size_t v = 0; v < values.size(); ++v) {
        double mass = 0.0;
        for (std::size_t k = 0; k < world.components.size(); ++k) {
            if (world.components[k].labels.at(attribute) == values[v]) mass += r[k];
        }
        if (mass > best_mass) {  // strict: ties keep the earlier value
            best_mass = mass;
            best = v;
        }
    }
    return values[best];
}

std::string noisy_annotate(const Vec& x0, const ConceptWorld& world, const std::string& attribute,
                           double rho, Rng& rng) {
    if (!(rho >= 0.0) || rho > 1.0) throw ValidationError("noisy_annotate: rho must lie in [0, 1]");
    const std::string reference = map_annotate(x0, world, attribute);
    const auto& values = world.scheme.values(attribute);
    const double u = rng.uniform();
    if (u >= rho || values.size() < 2) return reference;

    const std::size_t n_others = values.size() - 1;
    std::size_t pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_others));
    pick = std::min(pick, n_others - 1);
    for (const auto& value : values) {
        if (value == reference) continue;
        if (pick == 0) return value;
        --pick;
    }
    return reference;  // unreachable
}

std::vector<RatioRow> ratio_table(const std::vector<AnnotationRecord>& annotations,
                                  const AttributeScheme& scheme, const std::string& attribute) {
    if (annotations.empty()) throw ValidationError("ratio_table: no annotations");
    const auto counts = value_counts(annotations, scheme, attribute);
    const auto& values = scheme.values(attribute);
    const double n = static_cast<double>(annotations.size());

    std::vector<RatioRow> rows;
    rows.reserve(values.size());
    for (std::size_t v = 0; v < values.size(); ++v)
        rows.push_back({values[v], counts[v], 100.0 * static_cast<double>(counts[v]) / n});
    return rows;
}

double agreement_rate(const std::vector<AnnotationRecord>& a, const std::vector<AnnotationRecord>& b,
                      const std::string& attribute) {
    if (a.empty() || b.empty()) throw ValidationError("agreement_rate: empty annotation list");
    std::map<int, const AnnotationRecord*> by_index;
    for (const auto& record : a) by_index[record.sample_index] = &record;
    if (by_index.size() != a.size())
        throw ValidationError("agreement_rate: duplicate sample indices in the first list");
    if (a.size() != b.size()) throw ValidationError("agreement_rate: annotation lists cover different samples");

    std::size_t equal = 0;
    std::set<int> seen;
    for (const auto& record : b) {
        auto it = by_index.find(record.sample_index);
        if (it == by_index.end())
            throw ValidationError("agreement_rate: annotation lists cover different samples");
        if (!seen.insert(record.sample_index).second)
            throw ValidationError("agreement_rate: duplicate sample indices in the second list");
        const auto la = it->second->labels.find(attribute);
        const auto lb = record.labels.find(attribute);
        if (la == it->second->labels.end() || lb == record.labels.end())
            throw ValidationError("agreement_rate: annotation lacks attribute '" + attribute + "'");
        if (la->second == lb->second) ++equal;
    }
    return static_cast<double>(equal) / static_cast<double>(b.size());
}

double quality_proxy(const std::vector<Vec>& samples, const ConceptWorld& world,
                     const std::string& condition) {
    if (samples.empty()) throw ValidationError("quality_proxy: no samples");
    const std::vector<double>& weights = world.condition_weights(condition);
    double sum = 0.0;
    for (const auto& x : samples) {
        if (x.size() != world.dimension())
            throw ValidationError("quality_proxy: sample dimension does not match the world");
        sum += log_mixture_density(x, weights, world);
    }
    return sum / static_cast<double>(samples.size());
}

std::pair<double, double> expected_log_density(const ConceptWorld& world, const std::string& condition,
                                               int n, Rng& rng) {
    if (n < 2) throw ValidationError("expected_log_density: n must be >= 2");
    const std::vector<double>& weights = world.condition_weights(condition);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample_prior(weights, world, rng);
        const double ld = log_mixture_density(x, weights, world);
        sum += ld;
        sum_sq += ld * ld;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    const double se = std::sqrt(var / static_cast<double>(n));
    return {mean, se};
}

EvalReport build_report(const ArmInputs& original, const ArmInputs& debiased, const ConceptWorld& world) {
    world.validate();
    validate_arm(original, world, "original");
    validate_arm(debiased, world, "debiased");

    EvalReport report;
    const std::vector<std::pair<std::string, const ArmInputs*>> arms = {
        {"original", &original}, {"debiased", &debiased}};

    for (const auto& [mode, arm] : arms) {
        // Annotations grouped per annotator, in id order.
        std::map<std::string, std::vector<AnnotationRecord>> by_annotator;
        for (const auto& record : arm->annotations) by_annotator[record.annotator_id].push_back(record);

        for (const auto& [attribute, values] : world.scheme.attributes) {
            RatioTableEntry entry;
            entry.mode = mode;
            entry.attribute = attribute;
            entry.rows = ratio_table(arm->annotations, world.scheme, attribute);
            report.ratio_tables.push_back(std::move(entry));

            const auto counts = value_counts(arm->annotations, world.scheme, attribute);
            report.fairness.push_back(
                {mode, attribute, normalized_kl_fairness(counts, static_cast<int>(values.size()))});

            for (auto it_a = by_annotator.begin(); it_a != by_annotator.end(); ++it_a) {
                for (auto it_b = std::next(it_a); it_b != by_annotator.end(); ++it_b) {
                    PairComparison cmp;
                    cmp.mode = mode;
                    cmp.attribute = attribute;
                    cmp.annotator_a = it_a->first;
                    cmp.annotator_b = it_b->first;
                    cmp.agreement = agreement_rate(it_a->second, it_b->second, attribute);

                    ContingencyTable table;
                    table.categories = values;
                    table.counts_a = value_counts(it_a->second, world.scheme, attribute);
                    table.counts_b = value_counts(it_b->second, world.scheme, attribute);
                    try {
                        cmp.chi2 = chi_square_homogeneity(table);
                    } catch (const DegenerateTableError&) {
                        cmp.chi2 = {0.0, 0, 1.0};  // unanimous pair: vacuously homogeneous
                    }
                    report.comparisons.push_back(std::move(cmp));
                }
            }
        }

        std::vector<Vec> xs;
        xs.reserve(arm->samples.size());
        for (const auto& sample : arm->samples) xs.push_back(sample.x0);
        const std::string& condition = arm->samples.front().prompt_condition;

        QualityEntry quality;
        quality.mode = mode;
        quality.proxy = quality_proxy(xs, world, condition);
        Rng reference_rng = Rng::derive(0, kQualityReferenceStream);
        std::tie(quality.reference, quality.reference_se) =
            expected_log_density(world, condition, 20000, reference_rng);
        report.quality.push_back(quality);
    }

    for (const auto& entry : report.ratio_tables) {
        if (entry.mode != "original") continue;
        for (const auto& row : entry.rows) {
            if (row.percentage > 50.0) report.biased_values.push_back({entry.attribute, row.value});
        }
    }
    return report;
}

}  // namespace decodi
