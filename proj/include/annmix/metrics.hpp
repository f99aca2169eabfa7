#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "annmix/data.hpp"

namespace annmix {

double accuracy(std::span<const double> predictions, std::span<const double> truth);

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// nullopt marks an undefined correlation (a constant input).
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// (raw - base) / (best - base). For continuous scales base is taken as 0,
// since rank correlation against a constant baseline is undefined.
double rescaled_score(double raw, double base, double best, const ResponseScale& scale);

struct RankSumResult {
    double statistic = 0.0;  // Mann-Whitney U of the first sample
    double p_raw = 1.0;      // two-sided
    double p_bonferroni = 1.0;
    bool exact = false;
};

// Pooled sizes up to this use the exact permutation distribution.
inline constexpr std::size_t kExactRankSumLimit = 12;

// Two-sided Wilcoxon rank-sum / Mann-Whitney test with midranks for ties.
// Exact: p = P(|W - E W| >= |w - E W|) under all equally likely splits.
// Otherwise normal approximation with tie and continuity correction.
RankSumResult ranksum_test(std::span<const double> a, std::span<const double> b, int num_comparisons);

}  // namespace annmix
