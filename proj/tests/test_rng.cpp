#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "annmix/rng.hpp"

using annmix::Rng;

// Reference values come from a separate big-integer implementation of
// splitmix64 + xoshiro256**.
TEST_CASE("generator stream matches reference values") {
    Rng r0(0);
    CHECK(r0.next() == 0x99ec5f36cb75f2b4ULL);
    CHECK(r0.next() == 0xbf6e1f784956452aULL);
    CHECK(r0.next() == 0x1a5f849d4933e6e0ULL);
    Rng r42(42);
    CHECK(r42.next() == 0x15780b2e0c2ec716ULL);
    CHECK(r42.next() == 0x6104d9866d113a7eULL);
    CHECK(annmix::derive_seed(7, 3) == 0x28ceb6e1eddad0c2ULL);
}

TEST_CASE("derived streams are distinct and reproducible") {
    CHECK(annmix::derive_seed(1, 0) != annmix::derive_seed(1, 1));
    CHECK(annmix::derive_seed(1, 5) == annmix::derive_seed(1, 5));
    Rng a(annmix::derive_seed(9, 2)), b(annmix::derive_seed(9, 2));
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("distribution moments") {
    Rng rng(123);
    constexpr int n = 200000;
    double su = 0, sn = 0, sn2 = 0, sg = 0, sb = 0, sg_small = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK_MESSAGE((u >= 0.0 && u < 1.0), "uniform range");
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sg += rng.gamma(2.5);
        sg_small += rng.gamma(0.4);
        sb += rng.beta(2.0, 6.0);
    }
    // 5 standard errors
    CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
    CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(sg / n - 2.5) < 5 * std::sqrt(2.5 / n));
    CHECK(std::abs(sg_small / n - 0.4) < 5 * std::sqrt(0.4 / n));
    const double beta_var = 2.0 * 6.0 / (64.0 * 9.0);
    CHECK(std::abs(sb / n - 0.25) < 5 * std::sqrt(beta_var / n));
}

TEST_CASE("bounded integers, categorical draws and shuffles") {
    Rng rng(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
    CHECK(rng.below(1) == 0);

    const std::vector<double> w{1.0, 0.0, 3.0};
    std::vector<int> cat(3, 0);
    for (int i = 0; i < 40000; ++i) ++cat[rng.categorical(w)];
    CHECK(cat[1] == 0);
    CHECK(std::abs(cat[2] / 40000.0 - 0.75) < 0.02);

    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto shuffled = v;
    rng.shuffle(std::span(shuffled));
    CHECK(shuffled != v);
    std::sort(shuffled.begin(), shuffled.end());
    CHECK(shuffled == v);
}
