#include <cmath>
#include <vector>

#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/rng.hpp"
#include "ipslab/stats.hpp"

using namespace ipslab;
using namespace ipslab::stats;

TEST_CASE("ks two sample: identical samples give D=0, p=1") {
    std::vector<double> a{0.1, 0.4, 0.5, 0.7, 0.9, 0.95};
    auto r = ks_two_sample(a, a);
    CHECK(r.d == 0.0);
    CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("ks two sample separates shifted uniforms decisively") {
    SplitRng rng(derive_key(1, rng_domain::generic));
    std::vector<double> a, b;
    for (int i = 0; i < 1000; ++i) {
        a.push_back(rng.next_uniform());
        b.push_back(rng.next_uniform() + 0.5);
    }
    auto r = ks_two_sample(a, b);
    CHECK(r.p < 1e-6);
}

TEST_CASE("ks p-values are close to uniform under the null") {
    std::vector<double> ps;
    for (int rep = 0; rep < 1000; ++rep) {
        SplitRng rng(derive_key(1000 + static_cast<std::uint64_t>(rep), rng_domain::generic));
        std::vector<double> a, b;
        for (int i = 0; i < 1000; ++i) a.push_back(rng.next_uniform());
        for (int i = 0; i < 1000; ++i) b.push_back(rng.next_uniform());
        ps.push_back(ks_two_sample(a, b).p);
    }
    auto cal = ks_uniform(ps);
    CHECK(cal.p > 0.01);
}

TEST_CASE("ks rejects tiny samples") {
    std::vector<double> a{1, 2, 3};
    CHECK_THROWS_AS((void)ks_two_sample(a, a), insufficient_data);
}

TEST_CASE("log-linear fit recovers an exact geometric law") {
    std::vector<CountPoint> pts;
    for (int n = 1; n <= 8; ++n)
        pts.push_back({static_cast<double>(n), std::size_t(1) << (20 - n), std::size_t(1) << 20});
    auto fit = fit_log_linear(pts);
    CHECK(fit.slope == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log-linear fit of constant data has slope zero") {
    std::vector<CountPoint> pts;
    for (int n = 1; n <= 5; ++n) pts.push_back({static_cast<double>(n), 500, 1000});
    auto fit = fit_log_linear(pts);
    CHECK(fit.slope == doctest::Approx(0.0));
}

TEST_CASE("log-linear fit tolerates noisy geometric data") {
    SplitRng rng(derive_key(7, rng_domain::generic));
    std::vector<CountPoint> pts;
    double truth = -0.5;
    for (int n = 1; n <= 10; ++n) {
        double p = std::exp(truth * n);
        std::size_t trials = 200000, hits = 0;
        for (std::size_t i = 0; i < trials; ++i)
            if (rng.next_uniform() < p) ++hits;
        pts.push_back({static_cast<double>(n), hits, trials});
    }
    auto fit = fit_log_linear(pts);
    CHECK(std::fabs(fit.slope - truth) < 3 * fit.slope_se);
}

TEST_CASE("log-linear fit handles zero counts via continuity value") {
    std::vector<CountPoint> pts{{1, 100, 1000}, {2, 10, 1000}, {3, 0, 1000}};
    auto fit = fit_log_linear(pts);
    CHECK(fit.slope < 0);
}

TEST_CASE("chi-square independence sanity") {
    // Strongly dependent table.
    ChiSquare dep = chi_square_independence({{90, 10}, {10, 90}});
    CHECK(dep.p < 1e-6);
    // Perfectly proportional table.
    ChiSquare ind = chi_square_independence({{50, 50}, {25, 25}});
    CHECK(ind.statistic == doctest::Approx(0.0));
    CHECK(ind.p == doctest::Approx(1.0));
}

TEST_CASE("gamma_q matches known chi-square quantiles") {
    // P(chi2_1 > 3.841) ~ 0.05, P(chi2_2 > 5.991) ~ 0.05
    CHECK(chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(1e-2));
    CHECK(chi_square_sf(5.991, 2) == doctest::Approx(0.05).epsilon(1e-2));
}

TEST_CASE("two-proportion z is zero for identical proportions") {
    auto a = proportion(50, 100), b = proportion(500, 1000);
    CHECK(two_proportion_z(a, b) == doctest::Approx(0.0));
}

TEST_CASE("kendall trend ignores gaps within noise") {
    // Clearly descending by much more than the SEs.
    std::vector<double> down{0.9, 0.6, 0.4, 0.2};
    std::vector<double> se{0.01, 0.01, 0.01, 0.01};
    auto kt = kendall_trend(down, se);
    CHECK(kt.p_downward < 0.05);

    // Same shape but the wobble is buried in noise.
    std::vector<double> flat{0.52, 0.51, 0.515, 0.505};
    std::vector<double> big_se{0.02, 0.02, 0.02, 0.02};
    auto kt2 = kendall_trend(flat, big_se);
    CHECK(kt2.p_downward > 0.05);
    CHECK(kt2.significant_pairs == 0);
}

TEST_CASE("lag1 autocorrelation of alternating sequence is negative") {
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back(i % 2 ? 1.0 : -1.0);
    CHECK(lag1_autocorrelation(xs) < -0.9);
}
