#include <cmath>
#include <map>

#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/regeneration.hpp"

using namespace ipslab;

namespace {
ProcessParams pp(double lambda, double mu, int M = 1) { return {lambda, mu, M}; }

std::vector<RegenRecord> synthetic(std::size_t n, double x_scale, double psi, MasterSeed seed,
                                   double noise = 0) {
    SplitRng rng(derive_key(seed, rng_domain::generic));
    std::vector<RegenRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        double base = 1 + noise * rng.next_exponential(1.0);
        out.push_back({static_cast<Site>(std::llround(x_scale * base)), psi * base, 0, false});
    }
    return out;
}
}  // namespace

TEST_CASE("scripted walk: restart that never dies is the first break point") {
    auto c = Construction::scripted(pp(1, 2), 40,
                                    {{ClockId{ClockKind::LambdaArrow, 0, 1}, {1.0}}});
    auto records = find_break_points(c, 20, 10);
    REQUIRE(records.size() == 2);  // one accepted point plus the censored tail
    CHECK(records[0].X == 1);
    CHECK(records[0].Psi == 1.0);
    CHECK(records[0].Mback == 0);
    CHECK_FALSE(records[0].censored);
    CHECK(records[1].censored);
}

TEST_CASE("walk with no break point yields only the censored sentinel") {
    // No arrows at all: the edge never reaches level 1.
    auto c = Construction::scripted(pp(1, 2), 30, {});
    auto records = find_break_points(c, 15, 10);
    REQUIRE(records.size() == 1);
    CHECK(records[0].censored);
    CHECK(complete_records(records).empty());
}

TEST_CASE("complete convergence at t=0 with F={0}") {
    auto rep = check_complete_convergence(pp(1, 2), {0}, 0, 300, 12);
    CHECK(rep.lhs.p_hat == 0.0);  // the origin is infected at time zero
    CHECK(rep.rhs == doctest::Approx(0.0));
    CHECK(rep.pass);
}

TEST_CASE("growth check is skipped for small horizons") {
    auto rep = growth_lln_check(pp(1, 2), 10, 50, 13);
    CHECK(rep.skipped);
}

TEST_CASE("walk rejects bad parameters") {
    CHECK_THROWS_AS((void)find_break_points(pp(2, 1), 1, 10, 5), parameter_error);
    CHECK_THROWS_AS((void)find_break_points(pp(1, 2, 2), 1, 10, 5), unsupported_combination);
    CHECK_THROWS_AS((void)find_break_points(pp(1, 2), 1, 10, 20), parameter_error);
}

TEST_CASE("complete records satisfy the invariants and censoring discipline") {
    std::vector<RegenRecord> all;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto records = find_break_points(pp(1, 2), seed, 60, 15);
        REQUIRE(!records.empty());
        CHECK(records.back().censored);
        auto complete = complete_records(records);
        CHECK(complete.size() == records.size() - 1);
        for (std::size_t i = 0; i < complete.size(); ++i) {
            CHECK(complete[i].X >= 1);
            CHECK(complete[i].Psi > 0);
            CHECK(complete[i].Mback >= 0);
            // Dropping the sentinel leaves the complete records untouched.
            CHECK(complete[i].X == records[i].X);
            CHECK(complete[i].Psi == records[i].Psi);
        }
        all.insert(all.end(), complete.begin(), complete.end());
    }
    CHECK(all.size() > 30);
}

TEST_CASE("estimate_alpha on degenerate and synthetic records") {
    std::vector<RegenRecord> same(40, {2, 1.0, 0, false});
    auto est = estimate_alpha(same);
    CHECK(est.alpha_hat == doctest::Approx(2.0));
    CHECK(est.se == doctest::Approx(0.0));

    // X proportional to Psi gives the constant exactly.
    auto prop = synthetic(100, 3, 1.0, 5, 0.7);
    for (auto& r : prop) r.X = static_cast<Site>(std::llround(3 * r.Psi));
    auto est2 = estimate_alpha(prop);
    CHECK(est2.alpha_hat == doctest::Approx(3.0).epsilon(0.2));

    // Scale consistency: doubling Psi halves the estimate exactly.
    auto doubled = prop;
    for (auto& r : doubled) r.Psi *= 2;
    CHECK(estimate_alpha(doubled).alpha_hat == doctest::Approx(est2.alpha_hat / 2).epsilon(1e-12));

    CHECK_THROWS_AS((void)estimate_alpha({}), insufficient_data);
}

TEST_CASE("estimate_sigma2: degenerate records give zero, real runs positive") {
    std::vector<RegenRecord> recs(50, {2, 1.0, 0, false});
    CHECK(estimate_sigma2(recs, 2.0) == doctest::Approx(0.0));

    std::vector<RegenRecord> all;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto r = complete_records(find_break_points(pp(1, 2), seed, 80, 15));
        all.insert(all.end(), r.begin(), r.end());
    }
    auto alpha = estimate_alpha(all);
    CHECK(estimate_sigma2(all, alpha.alpha_hat) > 0);
}

TEST_CASE("estimate_sigma2 matches a closed form on synthetic records") {
    // X = Psi = E (same exponential): sigma2 = E[(X - Psi)^2]/E[Psi] = 0 for
    // alpha = 1; with X = round(E) the rounding noise is the only variance.
    SplitRng rng(derive_key(33, rng_domain::generic));
    std::vector<RegenRecord> recs;
    for (int i = 0; i < 4000; ++i) {
        double e = rng.next_exponential(1.0) + 0.5;
        recs.push_back({static_cast<Site>(std::llround(e + rng.next_uniform() - 0.5)), e, 0,
                        false});
    }
    auto alpha = estimate_alpha(recs);
    double s2 = estimate_sigma2(recs, alpha.alpha_hat);
    // Rounding noise is U(-.5,.5): variance 1/12 against E[Psi] = 1.5.
    CHECK(s2 == doctest::Approx(1.0 / 12 / 1.5).epsilon(0.35));
}

TEST_CASE("clt diagnostic calibrates on synthetic normal increments") {
    int ok = 0;
    for (int rep = 0; rep < 100; ++rep) {
        SplitRng rng(derive_key(100 + static_cast<std::uint64_t>(rep), rng_domain::generic));
        std::vector<RegenRecord> recs;
        for (int i = 0; i < 400; ++i) {
            // Box-Muller normal around X ~ alpha Psi with unit Psi.
            double u1 = rng.next_uniform(), u2 = rng.next_uniform();
            double z = std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
            recs.push_back({static_cast<Site>(std::llround(10 + 2 * z)), 1.0, 0, false});
        }
        auto alpha = estimate_alpha(recs);
        double s2 = estimate_sigma2(recs, alpha.alpha_hat);
        auto rep_out = clt_diagnostic(recs, alpha.alpha_hat, s2);
        REQUIRE_FALSE(rep_out.refused);
        ok += rep_out.ks_p > 0.01;
    }
    CHECK(ok >= 95);
}

TEST_CASE("clt diagnostic refuses degenerate or short inputs") {
    std::vector<RegenRecord> recs(300, {2, 1.0, 0, false});
    auto out = clt_diagnostic(recs, 2.0, 0.0);
    CHECK(out.refused);
    std::vector<RegenRecord> few(50, {2, 1.0, 0, false});
    CHECK(clt_diagnostic(few, 2.0, 1.0).refused);
}

TEST_CASE("iid diagnostics pass on a supercritical run") {
    std::vector<RegenRecord> all;
    for (std::uint64_t seed = 0; seed < 30 && all.size() < 220; ++seed) {
        auto r = complete_records(find_break_points(pp(2, 2), seed, 150, 25));
        all.insert(all.end(), r.begin(), r.end());
    }
    REQUIRE(all.size() >= 200);
    auto diag = regen_iid_diagnostics(all);
    CHECK(diag.ks_halves_X.p > 0.01);
    CHECK(diag.ks_halves_Psi.p > 0.01);
    double bound = 3.0 / std::sqrt(static_cast<double>(diag.n));
    CHECK(std::fabs(diag.acf1_X) < bound);
    CHECK(std::fabs(diag.acf1_Psi) < bound);
}

TEST_CASE("Mback has nonnegative support and a decaying tail") {
    std::vector<RegenRecord> all;
    for (std::uint64_t seed = 50; seed < 75; ++seed) {
        auto r = complete_records(find_break_points(pp(1, 2), seed, 120, 20));
        all.insert(all.end(), r.begin(), r.end());
    }
    REQUIRE(all.size() > 100);
    std::map<Site, std::size_t> histogram;
    for (const auto& r : all) {
        REQUIRE(r.Mback >= 0);
        histogram[r.Mback] += 1;
    }
    // Log-survival slope of the tail should be negative.
    std::vector<stats::CountPoint> pts;
    for (Site m = 0; m <= 4; ++m) {
        std::size_t tail = 0;
        for (const auto& [v, n] : histogram)
            if (v >= m) tail += n;
        pts.push_back({static_cast<double>(m), tail, all.size()});
    }
    auto fit = stats::fit_log_linear(pts);
    CHECK(fit.slope < 0);
}

TEST_CASE("theta estimate: symmetric halves and monotone in mu") {
    auto t2 = estimate_theta(2.0, 25, 60, 60, 7);
    CHECK(t2.stationary);
    CHECK(std::fabs(t2.left_half - t2.right_half) < 0.05);
    auto t3 = estimate_theta(3.0, 25, 60, 60, 8);
    auto t4 = estimate_theta(4.0, 25, 60, 60, 9);
    CHECK(t2.theta_hat < t3.theta_hat + 3 * std::sqrt(t2.se * t2.se + t3.se * t3.se));
    CHECK(t3.theta_hat < t4.theta_hat + 3 * std::sqrt(t3.se * t3.se + t4.se * t4.se));
    CHECK(t4.theta_hat > t2.theta_hat);
}

TEST_CASE("beta estimate: lambda=0 dies, survival is monotone in time") {
    auto dead = estimate_beta(pp(0, 2), 25, 400, 3);
    CHECK(dead.at_S.p_hat == 0.0);
    auto live = estimate_beta(pp(1, 2), 25, 400, 4);
    CHECK(live.at_2S.p_hat <= live.at_S.p_hat);
    CHECK(live.at_S.lo(2.576) > 0);
}

TEST_CASE("complete convergence edge cases") {
    // F empty: both sides are exactly one.
    auto empty = check_complete_convergence(pp(1, 2), {}, 5, 400, 11);
    CHECK(empty.lhs.p_hat == 1.0);
    CHECK(empty.rhs == doctest::Approx(1.0));
    CHECK(empty.pass);
}

TEST_CASE("cse: probability curve starts at one and is nonincreasing") {
    auto curve = estimate_cse_probability(1, 2.0, {0, 2, 5, 10, 20}, 150, 13);
    REQUIRE(curve.p_hat.size() == 5);
    CHECK(curve.p_hat[0].p_hat == 1.0);
    for (std::size_t i = 1; i < curve.p_hat.size(); ++i)
        CHECK(curve.p_hat[i].p_hat <= curve.p_hat[i - 1].p_hat);
    CHECK(curve.p_hat.back().p_hat > 0);
}

TEST_CASE("cse regeneration produces censored-terminated increments") {
    auto records = cse_regeneration(1, 2.0, 21, 60, 15);
    REQUIRE(!records.empty());
    CHECK(records.back().censored);
    for (const auto& r : complete_records(records)) {
        // Candidate spacing enforces the minimum time gap; space increments
        // may have either sign since controlling points need not sit at the
        // running maximum.
        CHECK(r.Psi > 0.99);
    }
}

TEST_CASE("cse regeneration speed agrees with the direct edge speed") {
    std::vector<RegenRecord> all;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto r = complete_records(cse_regeneration(1, 2.0, seed, 150, 20));
        for (auto& rec : r) all.push_back(rec);
    }
    REQUIRE(all.size() >= 1000);
    auto alpha = estimate_alpha(all);
    // Direct edge speed of the surviving contact process at mu=2.
    double sum = 0;
    int n = 0;
    for (std::uint64_t seed = 1000; seed < 1400; ++seed) {
        Construction c(seed, pp(2, 2), 200);
        auto traj = evolve_contact({0}, 2.0, c, 200);
        if (traj.died_at) continue;
        sum += static_cast<double>(traj.samples.back().r) / 200.0;
        n += 1;
    }
    REQUIRE(n > 100);
    double direct = sum / n;
    CHECK(std::fabs(alpha.alpha_hat - direct) / direct < 0.05);
}
