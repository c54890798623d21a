#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/subcritical.hpp"

using namespace ipslab;

namespace {
ProcessParams pp(double lambda, double mu, int M = 1) { return {lambda, mu, M}; }
}  // namespace

TEST_CASE("range decay: lambda = 0 never touches any level") {
    auto fit = range_decay(pp(0, 0.5), 5, 2000, 1);
    for (const auto& lvl : fit.levels) CHECK(lvl.p_hat.p_hat == 0.0);
}

TEST_CASE("range decay: touch probabilities are exactly nested") {
    auto fit = range_decay(pp(0.25, 0.25), 8, 5000, 2);
    for (std::size_t i = 1; i < fit.levels.size(); ++i)
        CHECK(fit.levels[i].p_hat.successes <= fit.levels[i - 1].p_hat.successes);
    CHECK(fit.fit.slope < 0);
    CHECK(fit.fit.r2 > 0.9);
}

TEST_CASE("lifetime decay: starts at one and decays") {
    auto fit = lifetime_decay(pp(2, 0.25), {0, 1, 2, 4, 6, 8, 10, 12}, 4000, 3);
    CHECK(fit.levels.front().p_hat.p_hat == 1.0);  // alive at t=0
    for (std::size_t i = 1; i < fit.levels.size(); ++i)
        CHECK(fit.levels[i].p_hat.p_hat <= fit.levels[i - 1].p_hat.p_hat);
    CHECK(fit.fit.slope < 0);
    CHECK(fit.fit.r2 > 0.9);
}

TEST_CASE("containment: no infections at all keeps everything inside") {
    auto rep = containment_probability({1, 2}, pp(0, 0), 500, 4, 20.0);
    for (const auto& pt : rep.points) CHECK(pt.eps_hat.p_hat == 1.0);
    CHECK(rep.exact_violations == 0);
}

TEST_CASE("containment at subcritical rates") {
    auto rep = containment_probability({1, 2, 4}, pp(0.25, 0.25), 4000, 5);
    CHECK(rep.exact_violations == 0);
    for (const auto& pt : rep.points) {
        CHECK(pt.eps_hat.p_hat > 0);
        CHECK(pt.eps_hat.p_hat < 1);
    }
    CHECK(rep.min_ci99_lower > 0);
    CHECK(rep.trend.p_downward > 0.05);
}

TEST_CASE("containment validates the grid") {
    CHECK_THROWS_AS((void)containment_probability({}, pp(0.25, 0.25), 100, 1), parameter_error);
}
