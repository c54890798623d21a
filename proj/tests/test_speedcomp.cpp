#include <cmath>

#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/speedcomp.hpp"

using namespace ipslab;

TEST_CASE("lambda = mu: no delta stream, no cascade hand-offs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto tr = competition_trace(2, 2, seed, 20);
        CHECK(tr.delta_wins == 0);
        CHECK(tr.upsilon_times.empty());
        CHECK(tr.competitions == tr.lambda_wins + tr.recovery_wins);
    }
}

TEST_CASE("competition counters partition the races") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto tr = competition_trace(1, 2, seed, 25);
        CHECK(tr.competitions == tr.delta_wins + tr.lambda_wins + tr.recovery_wins);
        CHECK(tr.lambda_wins == static_cast<std::size_t>(tr.xbar_final));
        CHECK(std::is_sorted(tr.upsilon_times.begin(), tr.upsilon_times.end()));
        CHECK(tr.contact_edge_final >= tr.rbar_final);
    }
}

TEST_CASE("upsilon times are strictly increasing") {
    auto tr = competition_trace(1, 3, 7, 30);
    for (std::size_t i = 1; i < tr.upsilon_times.size(); ++i)
        CHECK(tr.upsilon_times[i] > tr.upsilon_times[i - 1]);
}

TEST_CASE("cascade hand-off identity holds exactly") {
    std::size_t checks = 0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        auto tr = competition_trace(1, 2, seed, 12, true);
        CHECK(tr.handoff.ok());
        checks += tr.handoff.total_checks;
    }
    CHECK(checks > 20);
}

TEST_CASE("xbar is dominated by a Poisson count in the mean") {
    std::vector<double> xs;
    double T = 20, lambda = 1;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto tr = competition_trace(lambda, 2, seed, T);
        xs.push_back(static_cast<double>(tr.xbar_final));
    }
    auto m = stats::mean_se(xs);
    CHECK(m.mean <= lambda * T + 3 * m.se);
}

TEST_CASE("fracpunch: degenerate at lambda = mu, exact pass") {
    auto rep = verify_fracpunch(2, 2, 10, 50, 1);
    CHECK(rep.degenerate);
    CHECK(rep.pass);
    CHECK(rep.f_mean == 0.0);
}

TEST_CASE("fracpunch ratio matches (mu-lambda)/lambda") {
    auto rep = verify_fracpunch(1, 2, 40, 250, 2);
    CHECK_FALSE(rep.degenerate);
    CHECK(rep.target == doctest::Approx(1.0));
    CHECK(rep.pass);
    auto rep2 = verify_fracpunch(1, 3, 40, 250, 3);
    CHECK(rep2.target == doctest::Approx(2.0));
    CHECK(rep2.pass);
}

TEST_CASE("gap inequality: mean(R - rbar) >= mean(F)") {
    auto rep = verify_gap(1, 2, 30, 200, 4);
    CHECK(rep.pass);
    auto rep2 = verify_gap(1.5, 2, 30, 200, 5);
    CHECK(rep2.pass);
    // lambda = mu: right side identically zero, left side nonnegative.
    auto rep3 = verify_gap(2, 2, 20, 100, 6);
    CHECK(rep3.rhs_mean == 0.0);
    CHECK(rep3.lhs_mean >= 0.0);
    CHECK(rep3.pass);
}

TEST_CASE("speed inequality alpha <= (lambda/mu) beta") {
    auto rep = speed_inequality(1, 2, 40, 150, 7);
    CHECK(rep.pass);
    CHECK(rep.alpha_hat < rep.bound);
    auto rep2 = speed_inequality(0.5, 2, 40, 150, 8);
    CHECK(rep2.pass);
    // Equality regime: the same estimator on both sides.
    auto rep3 = speed_inequality(2, 2, 30, 100, 9);
    CHECK(rep3.pass);
}

TEST_CASE("subadditivity across a restart is pathwise exact") {
    auto rep = subadditivity_check(1, 2, 5, 10, 300, 10);
    CHECK(rep.violations == 0);
    // s = 0 and s = u degenerate into equalities.
    auto rep2 = subadditivity_check(1, 2, 0, 6, 50, 11);
    CHECK(rep2.violations == 0);
    CHECK(rep2.max_slack == 0);
    auto rep3 = subadditivity_check(1, 2, 6, 6, 50, 12);
    CHECK(rep3.violations == 0);
    CHECK(rep3.max_slack == 0);
}

TEST_CASE("competition trace rejects lambda > mu") {
    CHECK_THROWS_AS((void)competition_trace(2, 1, 1, 5), unsupported_combination);
}
