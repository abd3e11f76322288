#include "decodi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "decodi/error.hpp"

namespace decodi {

namespace {

// Regularized lower incomplete gamma P(a, y) by power series; valid for
// y < a + 1 where the series converges quickly.
double gamma_p_series(double a, double y) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        term *= y / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-y + a * std::log(y) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, y) by modified Lentz continued
// fraction; valid for y >= a + 1.
double gamma_q_continued_fraction(double a, double y) {
    const double tiny = 1e-300;
    double b = y + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return h * std::exp(-y + a * std::log(y) - std::lgamma(a));
}

}  // namespace

void ContingencyTable::validate() const {
    if (categories.size() != counts_a.size() || categories.size() != counts_b.size())
        throw ValidationError("contingency table: categories and count rows must have equal length");
    if (categories.size() < 2) throw ValidationError("contingency table: needs at least two categories");
    std::uint64_t sum_a = 0;
    std::uint64_t sum_b = 0;
    for (std::size_t j = 0; j < categories.size(); ++j) {
        sum_a += counts_a[j];
        sum_b += counts_b[j];
    }
    if (sum_a == 0 || sum_b == 0) throw ValidationError("contingency table: each row must sum > 0");
}

double chi_square_cdf(double x, int dof) {
    if (dof < 1) throw ValidationError("chi_square_cdf: dof must be a positive integer");
    if (!(x >= 0.0)) throw ValidationError("chi_square_cdf: x must be non-negative");
    if (x == 0.0) return 0.0;
    const double a = 0.5 * static_cast<double>(dof);
    const double y = 0.5 * x;
    const double p = (y < a + 1.0) ? gamma_p_series(a, y) : 1.0 - gamma_q_continued_fraction(a, y);
    return std::clamp(p, 0.0, 1.0);
}

Chi2Result chi_square_homogeneity(const ContingencyTable& table) {
    table.validate();

    std::vector<std::size_t> surviving;
    for (std::size_t j = 0; j < table.categories.size(); ++j) {
        if (table.counts_a[j] + table.counts_b[j] > 0) surviving.push_back(j);
    }
    if (surviving.size() < 2)
        throw DegenerateTableError("contingency table: fewer than two categories with any counts");

    double row_a = 0.0;
    double row_b = 0.0;
    for (std::size_t j : surviving) {
        row_a += static_cast<double>(table.counts_a[j]);
        row_b += static_cast<double>(table.counts_b[j]);
    }
    const double total = row_a + row_b;

    double statistic = 0.0;
    for (std::size_t j : surviving) {
        const double col = static_cast<double>(table.counts_a[j] + table.counts_b[j]);
        const double ea = row_a * col / total;
        const double eb = row_b * col / total;
        const double da = static_cast<double>(table.counts_a[j]) - ea;
        const double db = static_cast<double>(table.counts_b[j]) - eb;
        statistic += da * da / ea + db * db / eb;
    }

    Chi2Result result;
    result.statistic = statistic;
    result.dof = static_cast<int>(surviving.size()) - 1;
    result.p_value = 1.0 - chi_square_cdf(statistic, result.dof);
    return result;
}

double normalized_kl_fairness(const std::vector<std::uint64_t>& counts, int K) {
    if (K < 2) throw ValidationError("normalized_kl_fairness: K must be >= 2");
    if (counts.size() != static_cast<std::size_t>(K))
        throw ValidationError("normalized_kl_fairness: counts must have exactly K entries, got " +
                              std::to_string(counts.size()));
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total == 0) throw ValidationError("normalized_kl_fairness: counts must sum > 0");

    bool all_equal = true;
    for (std::uint64_t c : counts) {
        if (c != counts.front()) {
            all_equal = false;
            break;
        }
    }
    if (all_equal) return 1.0;  // smoothing preserves uniformity exactly

    // Smoothed probabilities are sorted before summation so the score is
    // bitwise invariant under category permutations.
    const double denom = static_cast<double>(total) + 0.5 * static_cast<double>(K);
    std::vector<double> p(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        p[j] = (static_cast<double>(counts[j]) + 0.5) / denom;
    std::sort(p.begin(), p.end());

    const double k_real = static_cast<double>(K);
    double kl = 0.0;
    for (double pj : p) kl += pj * std::log(pj * k_real);
    return std::clamp(1.0 - kl / std::log(k_real), 0.0, 1.0);
}

}  // namespace decodi
