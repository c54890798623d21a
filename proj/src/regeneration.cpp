#include "ipslab/regeneration.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/engine.hpp"
#include "ipslab/errors.hpp"

namespace ipslab {

std::vector<RegenRecord> complete_records(const std::vector<RegenRecord>& records) {
    std::vector<RegenRecord> out;
    for (const auto& r : records)
        if (!r.censored) out.push_back(r);
    return out;
}

namespace {

// Full rightmost-edge path of the half-line process on [0, horizon], with
// the truncation certificate enforced over every inter-event interval.
struct EdgePath {
    std::vector<double> times;   // change times, ascending
    std::vector<Site> values;    // r after each change
    std::vector<double> hit_time;  // hit_time[k] = inf{t : r = k}, k >= 1

    Site value_at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return 0;
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
    Site min_on(double a, double b) const {  // min of r over [a, b)
        Site m = value_at(a);
        auto lo = std::upper_bound(times.begin(), times.end(), a);
        for (auto it = lo; it != times.end() && *it < b; ++it)
            m = std::min(m, values[static_cast<std::size_t>(it - times.begin())]);
        return m;
    }
    Site max_before(double b) const {  // max of r over [0, b)
        Site m = 0;
        for (std::size_t i = 0; i < times.size() && times[i] < b; ++i)
            m = std::max(m, values[i]);
        return m;
    }
};

EdgePath half_line_edge_path(const Construction& cons, double horizon) {
    const ProcessParams& p = cons.params();
    Engine::Options opt;
    opt.fixed_left = -certified_width(p, horizon, 8.0, 0.5);
    Engine eng(cons, opt);
    const int bar = eng.add_layer({LayerKind::ThreeState, Configuration::half_line(0), false});
    EdgePath path;
    path.hit_time.assign(1, 0.0);  // level 0 is hit at time 0
    Site last_r = 0;
    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (!(mask & (1ULL << bar))) return;
        Site r = e.rightmost(bar);
        if (r == kNoSite) throw std::logic_error("half-line process emptied");
        // The edge value held since the previous event must clear the front.
        Site f = e.left_front(m.time);
        if (std::min(last_r, r) <= f)
            throw width_certificate_error("half-line edge reached the contamination front");
        if (r != last_r) {
            path.times.push_back(m.time);
            path.values.push_back(r);
            while (static_cast<Site>(path.hit_time.size()) <= r) path.hit_time.push_back(m.time);
            last_r = r;
        }
    });
    eng.run_until(horizon);
    if (last_r <= eng.left_front(horizon))
        throw width_certificate_error("half-line edge reached the contamination front");
    return path;
}

}  // namespace

std::vector<RegenRecord> find_break_points(const ProcessParams& p, MasterSeed seed, double T,
                                           double S) {
    Construction cons(seed, p, T + S);
    return find_break_points(cons, T, S);
}

std::vector<RegenRecord> find_break_points(const Construction& cons, double T, double S) {
    const ProcessParams& p = cons.params();
    if (!(p.mu >= p.lambda && p.lambda > 0))
        throw parameter_error("find_break_points: requires mu >= lambda > 0");
    if (p.range != 1) throw unsupported_combination("find_break_points: nearest neighbours only");
    if (S > T) throw parameter_error("find_break_points: S must not exceed T");
    const double horizon = T + S;
    if (horizon > cons.horizon())
        throw horizon_exceeded("find_break_points: construction horizon too short");
    EdgePath edge = half_line_edge_path(cons, horizon);

    // Probe: does the process restarted from a single site at (k, tau_k)
    // live for S time units?
    auto probe_survives = [&](Site k, double launch) {
        Engine eng(cons);
        eng.run_until(launch);
        int lay = eng.add_layer({LayerKind::ThreeState, Configuration::single(k), false});
        eng.run_until(launch + S);
        return eng.alive(lay) ? std::optional<double>{} : eng.died_at(lay);
    };

    std::vector<RegenRecord> records;
    Site k_prev = 0;
    double t_prev = 0;
    Site candidate = 1;
    Site top_level = static_cast<Site>(edge.hit_time.size()) - 1;
    while (candidate <= top_level && edge.hit_time[static_cast<std::size_t>(candidate)] <= T) {
        double tau = edge.hit_time[static_cast<std::size_t>(candidate)];
        auto death = probe_survives(candidate, tau);
        if (!death) {
            // Accepted break point; the edge sits at its running max there.
            if (edge.max_before(tau) >= candidate)
                throw std::logic_error("find_break_points: break level below the running max");
            records.push_back({candidate - k_prev, tau - t_prev,
                               k_prev - edge.min_on(t_prev, tau), false});
            k_prev = candidate;
            t_prev = tau;
            candidate = k_prev + 1;
        } else {
            candidate = edge.max_before(*death) + 1;
        }
    }

    // Censored tail of the walk.
    RegenRecord tail;
    tail.X = std::max<Site>(1, edge.max_before(T) + 1 - k_prev);
    tail.Psi = std::max(T - t_prev, 1e-12);
    tail.Mback = std::max<Site>(0, k_prev - edge.min_on(t_prev, horizon));
    tail.censored = true;
    records.push_back(tail);
    return records;
}

SpeedEstimate estimate_alpha(const std::vector<RegenRecord>& records) {
    auto recs = complete_records(records);
    if (recs.size() < 30) throw insufficient_data("estimate_alpha: need >= 30 complete records");
    double sx = 0, sp = 0;
    for (const auto& r : recs) {
        sx += static_cast<double>(r.X);
        sp += r.Psi;
    }
    const double n = static_cast<double>(recs.size());
    SpeedEstimate out;
    out.n_records = recs.size();
    out.alpha_hat = sx / sp;
    double ss = 0;
    for (const auto& r : recs) {
        double d = static_cast<double>(r.X) - out.alpha_hat * r.Psi;
        ss += d * d;
    }
    // Delta method for the ratio of means.
    out.se = std::sqrt(ss / n) / (sp / n) / std::sqrt(n);
    return out;
}

double estimate_sigma2(const std::vector<RegenRecord>& records, double alpha_hat) {
    auto recs = complete_records(records);
    if (recs.size() < 30) throw insufficient_data("estimate_sigma2: need >= 30 complete records");
    double ss = 0, sp = 0;
    for (const auto& r : recs) {
        double d = static_cast<double>(r.X) - alpha_hat * r.Psi;
        ss += d * d;
        sp += r.Psi;
    }
    return ss / sp;
}

NormalityReport clt_diagnostic(const std::vector<RegenRecord>& records, double alpha_hat,
                               double sigma2_hat) {
    NormalityReport out;
    auto recs = complete_records(records);
    if (recs.size() < 200) {
        out.refused = true;
        out.reason = "need >= 200 complete records";
        return out;
    }
    double sp = 0;
    for (const auto& r : recs) sp += r.Psi;
    double var_per_record = sigma2_hat * sp / static_cast<double>(recs.size());
    if (!(var_per_record > 0)) {
        out.refused = true;
        out.reason = "degenerate increments";
        return out;
    }
    std::size_t block = std::max<std::size_t>(5, recs.size() / 40);
    std::vector<double> us;
    for (std::size_t start = 0; start + block <= recs.size(); start += block) {
        double sum = 0;
        for (std::size_t i = start; i < start + block; ++i)
            sum += static_cast<double>(recs[i].X) - alpha_hat * recs[i].Psi;
        double z = sum / std::sqrt(var_per_record * static_cast<double>(block));
        us.push_back(stats::normal_cdf(z));
    }
    out.blocks = us.size();
    auto ks = stats::ks_uniform(us);
    out.ks_d = ks.d;
    out.ks_p = ks.p;
    return out;
}

IidDiagnostics regen_iid_diagnostics(const std::vector<RegenRecord>& records) {
    auto recs = complete_records(records);
    if (recs.size() < 20) throw insufficient_data("regen_iid_diagnostics: too few records");
    IidDiagnostics out;
    out.n = recs.size();
    std::vector<double> xs, ps;
    for (const auto& r : recs) {
        xs.push_back(static_cast<double>(r.X));
        ps.push_back(r.Psi);
    }
    std::size_t half = recs.size() / 2;
    out.ks_halves_X = stats::ks_two_sample({xs.data(), half}, {xs.data() + half, xs.size() - half});
    out.ks_halves_Psi =
        stats::ks_two_sample({ps.data(), half}, {ps.data() + half, ps.size() - half});
    out.acf1_X = stats::lag1_autocorrelation(xs);
    out.acf1_Psi = stats::lag1_autocorrelation(ps);
    return out;
}

DensityEstimate estimate_theta(double mu, Site half_window, double T, std::size_t reps,
                               MasterSeed seed) {
    if (reps < 2) throw parameter_error("estimate_theta: need reps >= 2");
    ProcessParams p{mu, mu, 1};
    const Site W = half_window + certified_width(p, T, 8.0, 0.0);
    std::vector<double> dens, dens_half, dens_left, dens_right;
    const double n_sites = static_cast<double>(2 * half_window + 1);
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, i), p, T);
        Engine eng(cons, {.fixed_left = -W, .fixed_right = W});
        int lay = eng.add_layer({LayerKind::Contact, Configuration::all_ones(), false});
        eng.run_until(T / 2);
        std::size_t occ_half = 0;
        for (Site x = -half_window; x <= half_window; ++x) occ_half += eng.state(lay, x) == 1;
        eng.run_until(T);
        if (eng.left_front(T) >= -half_window || eng.right_front(T) <= half_window)
            throw width_certificate_error("estimate_theta: window too narrow");
        std::size_t occ = 0, occ_l = 0, occ_r = 0;
        for (Site x = -half_window; x <= half_window; ++x) {
            bool on = eng.state(lay, x) == 1;
            occ += on;
            if (x < 0) occ_l += on;
            if (x > 0) occ_r += on;
        }
        dens.push_back(static_cast<double>(occ) / n_sites);
        dens_half.push_back(static_cast<double>(occ_half) / n_sites);
        dens_left.push_back(static_cast<double>(occ_l) / static_cast<double>(half_window));
        dens_right.push_back(static_cast<double>(occ_r) / static_cast<double>(half_window));
    }
    auto m = stats::mean_se(dens);
    auto mh = stats::mean_se(dens_half);
    DensityEstimate out;
    out.theta_hat = m.mean;
    out.se = m.se;
    out.reps = reps;
    out.left_half = stats::mean_se(dens_left).mean;
    out.right_half = stats::mean_se(dens_right).mean;
    out.at_half_time = mh.mean;
    out.stationary =
        std::fabs(mh.mean - m.mean) <= 3.0 * std::sqrt(m.se * m.se + mh.se * mh.se);
    return out;
}

SurvivalEstimate estimate_beta(const ProcessParams& p, double S, std::size_t reps,
                               MasterSeed seed) {
    if (reps < 1) throw parameter_error("estimate_beta: reps must be positive");
    std::size_t alive_S = 0, alive_2S = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, i), p, 2 * S);
        auto traj = evolve_three_state(Configuration::standard(), p, cons, 2 * S);
        double death = traj.died_at ? *traj.died_at : 2 * S + 1;
        alive_S += death > S;
        alive_2S += death > 2 * S;
    }
    SurvivalEstimate out;
    out.S = S;
    out.at_S = stats::proportion(alive_S, reps);
    out.at_2S = stats::proportion(alive_2S, reps);
    return out;
}

GrowthReport growth_lln_check(const ProcessParams& p, double T, std::size_t reps,
                              MasterSeed seed) {
    GrowthReport out;
    if (T < 50) {
        out.skipped = true;
        return out;
    }
    // Direct growth of the infected set over surviving replicas.
    std::vector<double> growth;
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, 1, i), p, T);
        auto traj = evolve_three_state(Configuration::standard(), p, cons, T);
        if (traj.died_at) continue;
        growth.push_back(static_cast<double>(traj.samples.back().count) / T);
    }
    out.survivors = growth.size();
    if (growth.size() < 10) {
        out.skipped = true;
        return out;
    }
    auto g = stats::mean_se(growth);
    out.mean_growth = g.mean;
    out.se_growth = g.se;

    // Break-point speed estimate.
    std::vector<RegenRecord> records;
    for (std::size_t i = 0; records.size() < 400 && i < 64; ++i) {
        auto one = find_break_points(p, derive_key(seed, rng_domain::generic, 2, i), 200, 30);
        for (auto& r : one)
            if (!r.censored) {
                r.replica = i;
                records.push_back(r);
            }
    }
    auto alpha = estimate_alpha(records);
    out.alpha_hat = alpha.alpha_hat;
    out.alpha_se = alpha.se;

    double burn_in = p.mu > 1 ? std::max(60.0, 50.0 / (p.mu - 1)) : 60.0;
    auto theta = estimate_theta(p.mu, 30, burn_in, 200, derive_key(seed, rng_domain::generic, 3));
    out.theta_hat = theta.theta_hat;
    out.theta_se = theta.se;

    out.predicted = 2.0 * alpha.alpha_hat * theta.theta_hat;
    out.predicted_se = 2.0 * std::sqrt(alpha.alpha_hat * alpha.alpha_hat * theta.se * theta.se +
                                       theta.theta_hat * theta.theta_hat * alpha.se * alpha.se);
    out.rel_error = std::fabs(out.mean_growth - out.predicted) / out.predicted;
    out.pass = out.rel_error <= 0.10;
    return out;
}

CompleteConvReport check_complete_convergence(const ProcessParams& p, const std::set<Site>& F,
                                              double t, std::size_t reps, MasterSeed seed) {
    CompleteConvReport out;
    // Left side and the survival surrogate from independent replica halves.
    std::size_t empties = 0, alive = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, 1, i), p, t);
        Engine eng(cons);
        int lay = eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
        eng.run_until(t);
        bool hit = false;
        for (Site x : F)
            if (eng.state(lay, x) == 1) hit = true;
        empties += !hit;
    }
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, 2, i), p, t);
        auto traj = evolve_three_state(Configuration::standard(), p, cons, t);
        alive += !traj.died_at.has_value();
    }
    out.lhs = stats::proportion(empties, reps);
    out.beta = stats::proportion(alive, reps);

    // Void probability of the all-occupied contact process over F.
    ProcessParams pc{p.mu, p.mu, p.range};
    Site span = F.empty() ? 0 : std::max(std::llabs(*F.begin()), std::llabs(*F.rbegin()));
    const Site W = span + certified_width(pc, t, 8.0, 0.0);
    std::size_t phi_reps = std::max<std::size_t>(reps / 2, 200), voids = 0;
    for (std::size_t i = 0; i < phi_reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, 3, i), pc, t);
        Engine eng(cons, {.fixed_left = -W, .fixed_right = W});
        int lay = eng.add_layer({LayerKind::Contact, Configuration::all_ones(), false});
        eng.run_until(t);
        if (eng.left_front(t) >= -span || eng.right_front(t) <= span)
            throw width_certificate_error("check_complete_convergence: window too narrow");
        bool hit = false;
        for (Site x : F)
            if (eng.state(lay, x) == 1) hit = true;
        voids += !hit;
    }
    out.phi = stats::proportion(voids, phi_reps);

    out.rhs = (1.0 - out.beta.p_hat) + out.beta.p_hat * out.phi.p_hat;
    out.rhs_se = std::sqrt(std::pow((1.0 - out.phi.p_hat) * out.beta.se, 2) +
                           std::pow(out.beta.p_hat * out.phi.se, 2));
    double comb = std::sqrt(out.lhs.se * out.lhs.se + out.rhs_se * out.rhs_se);
    out.diff_z = comb > 0 ? (out.lhs.p_hat - out.rhs) / comb : 0.0;
    out.pass = std::fabs(out.lhs.p_hat - out.rhs) <= 3.0 * comb;
    return out;
}

namespace {

// First time in [s, s+S] at which the half-line right edge escapes the
// single-seed right edge, or nullopt if they agree throughout.
std::optional<double> first_escape(const Construction& cons, Site x, double s, double S) {
    ProcessParams p = cons.params();
    Engine::Options opt;
    opt.fixed_left = x - certified_width(p, S, 8.0, 0.5);
    opt.front_start_time = s;
    Engine eng(cons, opt);
    eng.run_until(s);
    int single = eng.add_layer({LayerKind::Contact, Configuration::single(x), false});
    int half = eng.add_layer({LayerKind::Contact, Configuration::half_line(x), false});
    std::optional<double> escape;
    Site last_R = x;
    const double end = std::min(s + S, cons.horizon());
    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (escape || !mask) return;
        Site R = e.rightmost(half);
        if (std::min(R, last_R) <= e.left_front(m.time))
            throw width_certificate_error("cse probe: window too narrow");
        last_R = R;
        Site r = e.alive(single) ? e.rightmost(single) : kNoSite;
        if (R != r) escape = m.time;
    });
    eng.run_until(end);
    if (!escape && last_R <= eng.left_front(end))
        throw width_certificate_error("cse probe: window too narrow");
    return escape;
}

}  // namespace

std::vector<RegenRecord> cse_regeneration(int M, double mu, MasterSeed seed, double T, double S) {
    if (M < 1) throw parameter_error("cse_regeneration: range must be >= 1");
    ProcessParams p{mu, mu, M};
    const double horizon = T + S;
    Construction cons(seed, p, horizon);
    Engine main_eng(cons, {});
    int main_layer = main_eng.add_layer({LayerKind::Contact, Configuration::single(0), false});

    std::vector<RegenRecord> records;
    bool anchored = false;
    Site x_prev = 0;
    double t_prev = 0;
    double next_candidate = 1.0;

    while (next_candidate <= T) {
        main_eng.run_until(next_candidate);
        if (!main_eng.alive(main_layer)) break;
        double s = next_candidate;
        Site x = main_eng.rightmost(main_layer);
        auto escape = first_escape(cons, x, s, S);
        if (escape) {
            next_candidate = std::max(*escape, s) + 1e-9;
            continue;
        }
        if (anchored) records.push_back({x - x_prev, s - t_prev, 0, false});
        anchored = true;
        x_prev = x;
        t_prev = s;
        next_candidate = s + 1.0;
    }
    // Tail sentinel: either extinction before the first acceptance or the
    // in-progress increment at the horizon.
    RegenRecord tail;
    tail.X = 1;
    tail.Psi = std::max(T - t_prev, 1e-12);
    tail.censored = true;
    records.push_back(tail);
    return records;
}

double cse_escape_time(int M, double mu, MasterSeed seed, double S) {
    ProcessParams p{mu, mu, M};
    Construction cons(seed, p, S);
    auto esc = first_escape(cons, 0, 0, S);
    return esc ? *esc : S + 1;
}

CseCurve cse_curve_from_escapes(const std::vector<double>& escapes,
                                const std::vector<double>& S_grid) {
    if (S_grid.empty()) throw parameter_error("cse curve: empty grid");
    CseCurve out;
    out.S_grid = S_grid;
    for (double S : S_grid) {
        std::size_t held = 0;
        for (double e : escapes) held += e > S;
        out.p_hat.push_back(stats::proportion(held, escapes.size()));
    }
    return out;
}

CseCurve estimate_cse_probability(int M, double mu, const std::vector<double>& S_grid,
                                  std::size_t reps, MasterSeed seed) {
    if (S_grid.empty()) throw parameter_error("estimate_cse_probability: empty grid");
    double S_max = *std::max_element(S_grid.begin(), S_grid.end());
    std::vector<double> escapes;
    for (std::size_t i = 0; i < reps; ++i)
        escapes.push_back(cse_escape_time(M, mu, derive_key(seed, rng_domain::generic, i), S_max));
    return cse_curve_from_escapes(escapes, S_grid);
}

}  // namespace ipslab
