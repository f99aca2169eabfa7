#include "annmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace annmix {

double accuracy(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("correlation: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("correlation: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double rescaled_score(double raw, double base, double best, const ResponseScale& scale) {
    if (!scale.is_categorical()) base = 0.0;
    const double denom = best - base;
    if (denom == 0.0) throw std::domain_error("rescaled score: best and base references coincide");
    return (raw - base) / denom;
}

namespace {

// Number of size-m subsets of `values` per subset sum.
std::vector<double> subset_sum_counts(std::span<const std::int64_t> values, std::size_t m, std::int64_t max_sum) {
    const auto width = static_cast<std::size_t>(max_sum + 1);
    std::vector<double> dp((m + 1) * width, 0.0);
    dp[0] = 1.0;
    for (std::int64_t v : values) {
        for (std::size_t j = m; j >= 1; --j) {
            double* row = dp.data() + j * width;
            const double* prev = dp.data() + (j - 1) * width;
            for (std::int64_t s = max_sum; s >= v; --s)
                row[static_cast<std::size_t>(s)] += prev[static_cast<std::size_t>(s - v)];
        }
    }
    return {dp.begin() + static_cast<std::ptrdiff_t>(m * width), dp.end()};
}

}  // namespace

RankSumResult ranksum_test(std::span<const double> a, std::span<const double> b, int num_comparisons) {
    if (a.empty() || b.empty()) throw std::invalid_argument("rank-sum test needs two non-empty samples");
    if (num_comparisons < 1) throw std::invalid_argument("num_comparisons must be at least 1");
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    const std::size_t total = m + n;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < m; ++i) rank_sum_a += ranks[i];

    RankSumResult result;
    result.statistic = rank_sum_a - static_cast<double>(m * (m + 1)) / 2.0;

    if (total <= kExactRankSumLimit) {
        // Doubled midranks are integers, so the comparison below is exact.
        std::vector<std::int64_t> doubled(total);
        std::int64_t max_sum = 0;
        for (std::size_t i = 0; i < total; ++i) {
            doubled[i] = std::llround(2.0 * ranks[i]);
            max_sum += doubled[i];
        }
        std::int64_t observed = 0;
        for (std::size_t i = 0; i < m; ++i) observed += doubled[i];
        const auto mean = static_cast<std::int64_t>(m * (total + 1));
        const std::int64_t deviation = std::llabs(observed - mean);
        const auto counts = subset_sum_counts(doubled, m, max_sum);
        double extreme = 0.0, all = 0.0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (counts[s] == 0.0) continue;
            all += counts[s];
            if (std::llabs(static_cast<std::int64_t>(s) - mean) >= deviation) extreme += counts[s];
        }
        result.p_raw = std::min(1.0, extreme / all);
        result.exact = true;
    } else {
        double tie_sum = 0.0;
        std::vector<double> sorted(ranks);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            tie_sum += t * t * t - t;
            i = j;
        }
        const double mm = static_cast<double>(m), nn = static_cast<double>(n), N = static_cast<double>(total);
        const double variance = mm * nn / 12.0 * ((N + 1.0) - tie_sum / (N * (N - 1.0)));
        if (variance <= 0.0) {
            result.p_raw = 1.0;
        } else {
            const double z = std::max(0.0, std::abs(result.statistic - mm * nn / 2.0) - 0.5) / std::sqrt(variance);
            result.p_raw = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        }
    }
    result.p_bonferroni = std::min(1.0, result.p_raw * num_comparisons);
    return result;
}

}  // namespace annmix
