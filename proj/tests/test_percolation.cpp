#include <cmath>
#include <functional>

#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/percolation.hpp"

using namespace ipslab;
using Gen = PercField::Generator;

namespace {

// Independent oracle: explicit enumeration of admissible open paths.
std::vector<Site> reach_by_paths(const PercField& f, std::size_t n, Site start) {
    std::vector<Site> reached;
    std::function<void(Site, std::size_t)> walk = [&](Site y, std::size_t k) {
        if (k == n) {
            reached.push_back(y);
            return;
        }
        for (Site step : {Site{-1}, Site{1}})
            if (f.open(y + step, k + 1)) walk(y + step, k + 1);
    };
    walk(start, 0);
    std::sort(reached.begin(), reached.end());
    reached.erase(std::unique(reached.begin(), reached.end()), reached.end());
    return reached;
}

PercField all_value_field(std::size_t n, Site hw, bool value) {
    std::vector<std::vector<bool>> rows(n + 1,
                                        std::vector<bool>(static_cast<std::size_t>(2 * hw + 1),
                                                          value));
    return PercField::scripted(n, hw, std::move(rows));
}

}  // namespace

TEST_CASE("extreme densities open or close everything") {
    PercField all(Gen::Independent, 1.0, 1, 6, 10);
    PercField none(Gen::Independent, 0.0, 1, 6, 10);
    for (std::size_t k = 1; k <= 6; ++k)
        for (Site y = -6; y <= 6; ++y)
            if (all.in_lattice(y, k)) {
                CHECK(all.open(y, k));
                CHECK_FALSE(none.open(y, k));
            }
}

TEST_CASE("percolate: empty start and all-open spread") {
    PercField f = all_value_field(5, 10, true);
    CHECK_FALSE(percolate(f, {}).survived);
    auto tr = percolate(f, {0});
    CHECK(tr.survived);
    // Row n of the all-open field is the full parity cone.
    std::vector<Site> expect;
    for (Site y = -5; y <= 5; y += 2) expect.push_back(y);
    CHECK(tr.rows[5] == expect);
}

TEST_CASE("percolate: hand-traced five-row field") {
    // Columns are y = -5..5; rows 1..5 listed explicitly.
    auto bit = [](const char* s) {
        std::vector<bool> row;
        for (const char* c = s; *c; ++c) row.push_back(*c == '1');
        return row;
    };
    std::vector<std::vector<bool>> rows{
        bit("00000000000"),  // row 0 ignored
        bit("00001010000"),  // y=-1, y=+1 open
        bit("00000001000"),  // y=+2 open
        bit("00001000100"),  // y=-1 and y=+3 open
        bit("00001010000"),  // no even site open: the cluster dies here
        bit("00000100000"),
    };
    PercField f = PercField::scripted(5, 5, std::move(rows));
    auto tr = percolate(f, {0});
    CHECK(tr.rows[1] == std::vector<Site>{-1, 1});
    CHECK(tr.rows[2] == std::vector<Site>{2});
    CHECK(tr.rows[3] == std::vector<Site>{3});
    CHECK(tr.rows[4].empty());
    CHECK_FALSE(tr.survived);
    CHECK(tr.rows[1] == reach_by_paths(f, 1, 0));
    CHECK(tr.rows[2] == reach_by_paths(f, 2, 0));
    CHECK(tr.rows[3] == reach_by_paths(f, 3, 0));
}

TEST_CASE("dynamic programming equals path enumeration on random fields") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        PercField f(Gen::Independent, 0.55, seed, 5, 8);
        auto tr = percolate(f, {0});
        for (std::size_t k = 1; k <= 5; ++k) CHECK(tr.rows[k] == reach_by_paths(f, k, 0));
    }
}

TEST_CASE("percolate width certificate refuses undersized fields") {
    PercField f(Gen::Independent, 0.9, 3, 10, 8);
    CHECK_THROWS_AS((void)percolate(f, {0}), width_certificate_error);
    CHECK_THROWS_AS((void)percolate(f, {1}), parameter_error);  // odd start site
}

TEST_CASE("monotone coupling in the density through shared uniforms") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        PercField lo(Gen::Independent, 0.55, seed, 12, 16);
        PercField hi(Gen::Independent, 0.8, seed, 12, 16);
        auto tl = percolate(lo, {0});
        auto th = percolate(hi, {0});
        for (std::size_t k = 0; k <= 12; ++k)
            CHECK(std::includes(th.rows[k].begin(), th.rows[k].end(), tl.rows[k].begin(),
                                tl.rows[k].end()));
    }
}

TEST_CASE("overlap generator: density and one-dependence") {
    double q = 0.9;
    PercField f(Gen::Overlap, q, 99, 420, 250);
    CHECK(f.density() == doctest::Approx(1 - (1 - q) * (1 - q)));
    std::size_t open_count = 0, total = 0;
    std::vector<double> here, two_away, far_away;
    for (std::size_t k = 1; k <= 420; ++k)
        for (Site y = -240; y <= 240; ++y) {
            if (!f.in_lattice(y, k)) continue;
            total += 1;
            open_count += f.open(y, k);
            here.push_back(f.open(y, k));
            two_away.push_back(f.open(y + 2, k));
            far_away.push_back(f.open(y + 4, k));
        }
    auto prop = stats::proportion(open_count, total);
    CHECK(std::fabs(prop.p_hat - f.density()) < 3 * prop.se);
    // Distance-2 bits share a base bit and must correlate; distance-4 not.
    auto corr = [&](const std::vector<double>& a, const std::vector<double>& b) {
        auto ma = stats::mean_se(a), mb = stats::mean_se(b);
        double c = 0;
        for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
        double va = 0, vb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            va += (a[i] - ma.mean) * (a[i] - ma.mean);
            vb += (b[i] - mb.mean) * (b[i] - mb.mean);
        }
        return c / std::sqrt(va * vb);
    };
    double bound = 3.0 / std::sqrt(static_cast<double>(here.size()));
    CHECK(std::fabs(corr(here, far_away)) < bound);
    CHECK(corr(here, two_away) > bound);
}

TEST_CASE("restriction identity: zero violations on surviving rows") {
    auto report = restriction_check(0.9, 30, 200, 5);
    CHECK(report.ok());
    CHECK(report.total_checks > 1000);
}

TEST_CASE("rightmost growth: degenerate thresholds") {
    // a < -1: surviving paths cannot be that slow, exactly never.
    auto slow = rightmost_growth(0.8, -1.5, {10, 20}, 400, 6);
    for (const auto& pt : slow.points) {
        CHECK(pt.survivors > 0);
        CHECK(pt.p_hat.p_hat == 0.0);
    }
    // a > 1: every surviving path counts.
    auto fast = rightmost_growth(0.8, 1.5, {10, 20}, 400, 7);
    for (const auto& pt : fast.points) CHECK(pt.p_hat.p_hat == 1.0);
}

TEST_CASE("rightmost growth decays in n") {
    auto rep = rightmost_growth(0.95, 0.3, {10, 20, 30}, 3000, 8);
    CHECK(rep.fit.slope < 0);
}

TEST_CASE("density tail: edge cases and decay") {
    // rho = 0: the event is empty.
    auto zero = density_experiment(Gen::Independent, 0.95, 0.0, 0.5, {20}, 300, 9);
    CHECK(zero[0].tail.p_hat == 0.0);
    auto tail = density_experiment(Gen::Independent, 0.95, 0.8, 0.5, {20, 40}, 1500, 10);
    CHECK(tail[1].tail.p_hat <= tail[0].tail.p_hat + 3 * tail[0].tail.se);
}
