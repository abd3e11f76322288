#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace decodi {

// Paired per-category counts from two annotators over the same samples.
struct ContingencyTable {
    std::vector<std::string> categories;
    std::vector<std::uint64_t> counts_a;
    std::vector<std::uint64_t> counts_b;

    // Equal lengths, at least two categories, each row sums > 0.
    void validate() const;
};

struct Chi2Result {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Regularized lower incomplete gamma P(dof/2, x/2): power series for
// x/2 < dof/2 + 1, modified Lentz continued fraction otherwise.
double chi_square_cdf(double x, int dof);

// Pearson homogeneity test on a 2 x K table with expected cells from the
// row/column margins. Categories whose combined count is zero are dropped
// before dof = K_surviving - 1; fewer than two survivors is an error.
Chi2Result chi_square_homogeneity(const ContingencyTable& table);

// 1 - KL(p_hat || uniform) / log K with add-0.5 smoothing, clamped to
// [0, 1]; higher is fairer. counts must have exactly K entries. Equal
// counts return exactly 1.0, and the score is bitwise invariant under
// permutations of the categories.
double normalized_kl_fairness(const std::vector<std::uint64_t>& counts, int K);

}  // namespace decodi
