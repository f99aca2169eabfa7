#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "annmix/metrics.hpp"
#include "annmix/rng.hpp"

using namespace annmix;
using doctest::Approx;

TEST_CASE("accuracy") {
    const std::vector<double> pred{0, 1, 2, 1, 0}, truth{0, 1, 1, 1, 2};
    CHECK(accuracy(pred, truth) == Approx(0.6));
    CHECK_THROWS(accuracy(std::vector<double>{1.0}, truth));
}

TEST_CASE("rank correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(*spearman(x, std::vector<double>{2, 4, 6, 8, 10}) == Approx(1.0));
    CHECK(*spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == Approx(-1.0));
    CHECK(*spearman(x, std::vector<double>{1, 4, 9, 16, 25}) == Approx(1.0));
    CHECK_FALSE(spearman(x, std::vector<double>{3, 3, 3, 3, 3}).has_value());
    CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

    // invariant under strictly increasing affine maps of either argument
    Rng rng(2);
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + rng.normal();
    }
    auto b2 = b;
    for (double& v : b2) v = 3.0 * v - 7.0;
    CHECK(*spearman(a, b2) == Approx(*spearman(a, b)).epsilon(1e-14));
}

TEST_CASE("rescaled scores") {
    const auto cat = ResponseScale::categorical(3);
    CHECK(rescaled_score(0.5, 0.5, 0.9, cat) == 0.0);
    CHECK(rescaled_score(0.9, 0.5, 0.9, cat) == Approx(1.0));
    CHECK(rescaled_score(0.98, 0.5, 0.9, cat) == Approx(1.2));
    CHECK(rescaled_score(0.4, 0.5, 0.9, cat) < 0.0);
    const auto con = ResponseScale::continuous();
    CHECK(rescaled_score(0.3, 0.25, 0.6, con) == Approx(0.5));
    CHECK_THROWS_AS(rescaled_score(0.3, 0.6, 0.6, cat), std::domain_error);
}

namespace {

// p-value by enumerating every split of the pooled midranks.
double exhaustive_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    const std::size_t m = a.size(), total = pooled.size();
    const double w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
    const double expected = static_cast<double>(m) * static_cast<double>(total + 1) / 2.0;
    std::size_t hits = 0, splits = 0;
    for (unsigned mask = 0; mask < (1u << total); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            if (mask & (1u << i)) s += ranks[i];
        ++splits;
        if (std::abs(s - expected) >= std::abs(w - expected) - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(splits);
}

}  // namespace

TEST_CASE("rank-sum test") {
    SUBCASE("fully separated triples") {
        const auto r = ranksum_test(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}, 1);
        CHECK(r.exact);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_raw == Approx(0.1));
    }
    SUBCASE("identical samples") {
        const auto r = ranksum_test(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}, 1);
        CHECK(r.p_raw == Approx(1.0));
    }
    SUBCASE("Bonferroni multiplies and caps") {
        const auto r = ranksum_test(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{3.5, 6, 7, 8, 9}, 3);
        CHECK(r.p_bonferroni == Approx(std::min(1.0, 3.0 * r.p_raw)));
        const auto capped = ranksum_test(std::vector<double>{1, 2}, std::vector<double>{1.5, 2.5}, 5);
        CHECK(capped.p_bonferroni == 1.0);
    }
    SUBCASE("exact distribution matches exhaustive enumeration") {
        Rng rng(11);
        for (int t = 0; t < 200; ++t) {
            const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(5);
            std::vector<double> a(m), b(n);
            // coarse values force ties
            for (double& v : a) v = static_cast<double>(rng.below(6));
            for (double& v : b) v = static_cast<double>(rng.below(6)) + 0.5 * static_cast<double>(rng.below(2));
            const auto r = ranksum_test(a, b, 1);
            CHECK(r.exact);
            CHECK(r.p_raw == Approx(exhaustive_p(a, b)).epsilon(1e-12));
        }
    }
    SUBCASE("large samples use the normal approximation") {
        std::vector<double> a(10), b(10);
        std::iota(a.begin(), a.end(), 1.0);
        std::iota(b.begin(), b.end(), 11.0);
        const auto r = ranksum_test(a, b, 1);
        CHECK_FALSE(r.exact);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_raw == Approx(1.8267e-4).epsilon(1e-3));
    }
    CHECK_THROWS(ranksum_test(std::vector<double>{}, std::vector<double>{1.0}, 1));
}
