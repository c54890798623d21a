#include "ipslab/subcritical.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/engine.hpp"
#include "ipslab/errors.hpp"

namespace ipslab {

namespace {
constexpr double kSubcriticalHorizon = 400.0;
}

DecayFit range_decay(const ProcessParams& p, Site n_max, std::size_t reps, MasterSeed seed) {
    if (n_max < 1) throw parameter_error("range_decay: n_max must be >= 1");
    if (reps < 100) throw parameter_error("range_decay: too few replicas");
    std::vector<std::size_t> touched(static_cast<std::size_t>(n_max) + 1, 0);
    for (std::size_t i = 0; i < reps; ++i) {
        Construction c(derive_key(seed, rng_domain::generic, i), p, kSubcriticalHorizon);
        Engine eng(c);
        int lay = eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
        eng.run_until(kSubcriticalHorizon);
        Site reach = 0;
        if (eng.ever_max(lay) != kNoSite)
            reach = std::max(eng.ever_max(lay), -eng.ever_min(lay));
        // Touching +-(n+1) implies touching +-n: nested events by construction.
        for (Site n = 1; n <= std::min(reach, n_max); ++n) touched[static_cast<std::size_t>(n)]++;
    }
    DecayFit out;
    std::vector<stats::CountPoint> pts;
    for (Site n = 1; n <= n_max; ++n) {
        auto prop = stats::proportion(touched[static_cast<std::size_t>(n)], reps);
        out.levels.push_back({static_cast<double>(n), prop});
        pts.push_back({static_cast<double>(n), touched[static_cast<std::size_t>(n)], reps});
    }
    out.fit = stats::fit_log_linear(pts);
    return out;
}

DecayFit lifetime_decay(const ProcessParams& p, const std::vector<double>& t_grid,
                        std::size_t reps, MasterSeed seed) {
    if (t_grid.size() < 3) throw parameter_error("lifetime_decay: need at least 3 grid points");
    std::vector<double> grid = t_grid;
    std::sort(grid.begin(), grid.end());
    double t_max = grid.back();
    std::vector<std::size_t> alive(grid.size(), 0);
    for (std::size_t i = 0; i < reps; ++i) {
        Construction c(derive_key(seed, rng_domain::generic, i), p,
                       std::max(t_max, kSubcriticalHorizon));
        auto traj = evolve_three_state(Configuration::standard(), p, c, t_max);
        double death = traj.died_at ? *traj.died_at : t_max + 1;
        for (std::size_t g = 0; g < grid.size(); ++g) alive[g] += death > grid[g];
    }
    DecayFit out;
    std::vector<stats::CountPoint> pts;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out.levels.push_back({grid[g], stats::proportion(alive[g], reps)});
        if (g >= grid.size() / 2) pts.push_back({grid[g], alive[g], reps});
    }
    out.fit = stats::fit_log_linear(pts);
    return out;
}

ContainmentReport containment_probability(const std::vector<Site>& N_grid,
                                          const ProcessParams& p, std::size_t reps,
                                          MasterSeed seed, double S) {
    if (N_grid.empty()) throw parameter_error("containment_probability: empty grid");
    ContainmentReport out;
    if (S <= 0) {
        // Pilot at the largest N picks a horizon the epidemic cannot reach.
        Site n_big = *std::max_element(N_grid.begin(), N_grid.end());
        double max_life = 0;
        for (std::size_t i = 0; i < 200; ++i) {
            Construction c(derive_key(seed, rng_domain::generic, 999, i), p,
                           kSubcriticalHorizon);
            auto traj =
                evolve_three_state(Configuration::interval(-n_big, n_big), p, c,
                                   kSubcriticalHorizon);
            if (traj.died_at) max_life = std::max(max_life, *traj.died_at);
        }
        S = 3 * max_life + 10;
    }
    out.S = S;

    std::vector<double> eps, ses;
    for (std::size_t gi = 0; gi < N_grid.size(); ++gi) {
        Site N = N_grid[gi];
        std::size_t contained = 0;
        for (std::size_t i = 0; i < reps; ++i) {
            Construction c(derive_key(seed, rng_domain::generic, gi, i), p, S);
            Engine eng(c);
            int lay =
                eng.add_layer({LayerKind::ThreeState, Configuration::interval(-N, N), false});
            eng.run_until(S);
            bool inside = eng.ever_min(lay) >= -N && eng.ever_max(lay) <= N;
            bool dead = eng.died_at(lay).has_value();
            if (inside && !dead) out.exact_violations += 1;  // S was too short
            contained += inside && dead;
        }
        auto prop = stats::proportion(contained, reps);
        out.points.push_back({N, prop});
        eps.push_back(prop.p_hat);
        ses.push_back(prop.se);
    }
    out.min_ci99_lower = out.points.front().eps_hat.lo(2.576);
    for (const auto& pt : out.points)
        out.min_ci99_lower = std::min(out.min_ci99_lower, pt.eps_hat.lo(2.576));
    if (eps.size() >= 3) out.trend = stats::kendall_trend(eps, ses);
    return out;
}

}  // namespace ipslab
