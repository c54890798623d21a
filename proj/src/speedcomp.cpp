#include "ipslab/speedcomp.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/errors.hpp"

namespace ipslab {

CompetitionTrace competition_trace(double lambda, double mu, MasterSeed seed, double T,
                                   bool check_handoffs) {
    if (lambda > mu)
        throw unsupported_combination("competition_trace: construction requires mu >= lambda");
    if (lambda <= 0) throw parameter_error("competition_trace: lambda must be positive");
    ProcessParams p{lambda, mu, 1};
    Construction cons(seed, p, T);
    Engine::Options opt;
    opt.fixed_left = -certified_width(p, T, 8.0, 0.5);
    Engine eng(cons, opt);
    const int bar = eng.add_layer({LayerKind::ThreeState, Configuration::half_line(0), false});
    const int contact = eng.add_layer({LayerKind::Contact, Configuration::half_line(0), false});

    CompetitionTrace out;
    out.horizon = T;
    out.rbar_path.emplace_back(0.0, 0);
    out.contact_edge_path.emplace_back(0.0, 0);

    Site prev_r = 0, prev_R = 0, xbar = 0;
    std::set<Site> prev_launch;  // launch set of the current cascade
    double prev_launch_time = 0;
    bool have_launch = false;

    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        // Race resolution: while the edge sits at its running maximum, the
        // next mark among the two arrows (prev_r -> prev_r+1) and the
        // recovery clock at prev_r decides the competition.
        if (prev_r == xbar) {
            bool at_edge_arrow = m.clock.kind != ClockKind::Recovery &&
                                 m.clock.source == prev_r && m.clock.target == prev_r + 1;
            bool at_edge_recovery =
                m.clock.kind == ClockKind::Recovery && m.clock.source == prev_r &&
                (mask & (1ULL << bar));
            if (at_edge_arrow && m.clock.kind == ClockKind::LambdaArrow) {
                out.competitions += 1;
                out.lambda_wins += 1;  // the edge advances to a new maximum
            } else if (at_edge_arrow && m.clock.kind == ClockKind::DeltaArrow) {
                out.competitions += 1;
                out.delta_wins += 1;
                out.upsilon_times.push_back(m.time);
                if (check_handoffs) {
                    std::set<Site> bar_set;
                    for (Site x : e.infected_sites(bar)) bar_set.insert(x);
                    if (have_launch) {
                        // The independent path-reachability route and the
                        // evolved window provably agree right of the
                        // contamination front; compare there.
                        Site cutoff = e.left_front(m.time);
                        auto evolved = e.construction().reachable(prev_launch, prev_launch_time,
                                                                  m.time);
                        std::set<Site> lhs(evolved.upper_bound(cutoff), evolved.end());
                        std::set<Site> rhs(bar_set.upper_bound(cutoff), bar_set.end());
                        rhs.insert(prev_r + 1);
                        out.handoff.total_checks += 1;
                        if (lhs != rhs)
                            out.handoff.note(m.time, prev_r + 1, "cascade hand-off mismatch");
                        // Supremum drops by exactly the handed-off site.
                        out.handoff.total_checks += 1;
                        if (lhs.empty() || *lhs.rbegin() != prev_r + 1)
                            out.handoff.note(m.time, prev_r + 1,
                                             "previous cascade edge is not rbar + 1");
                    }
                    prev_launch = std::move(bar_set);
                    prev_launch_time = m.time;
                    have_launch = true;
                }
            } else if (at_edge_recovery) {
                out.competitions += 1;
                out.recovery_wins += 1;
            }
        }
        if (mask & (1ULL << bar)) {
            Site r = e.rightmost(bar);
            if (std::min(r, prev_r) <= e.left_front(m.time))
                throw width_certificate_error("competition_trace: window too narrow");
            if (r != prev_r) {
                out.rbar_path.emplace_back(m.time, r);
                prev_r = r;
                xbar = std::max(xbar, r);
            }
        }
        if (mask & (1ULL << contact)) {
            Site R = e.rightmost(contact);
            if (R != prev_R) {
                out.contact_edge_path.emplace_back(m.time, R);
                prev_R = R;
            }
        }
        if (prev_r > prev_R)
            throw std::logic_error("competition_trace: contact edge fell behind the bar edge");
    });
    eng.run_until(T);
    if (std::min(prev_r, prev_R) <= eng.left_front(T))
        throw width_certificate_error("competition_trace: window too narrow");
    out.xbar_final = xbar;
    out.rbar_final = prev_r;
    out.contact_edge_final = prev_R;
    return out;
}

RatioReport verify_fracpunch(double lambda, double mu, double T, std::size_t reps,
                             MasterSeed seed) {
    RatioReport out;
    out.target = (mu - lambda) / lambda;
    std::vector<double> fs, xs;
    for (std::size_t i = 0; i < reps; ++i) {
        auto tr = competition_trace(lambda, mu, derive_key(seed, rng_domain::generic, i), T);
        fs.push_back(static_cast<double>(tr.delta_wins));
        xs.push_back(static_cast<double>(tr.xbar_final));
    }
    auto mf = stats::mean_se(fs), mx = stats::mean_se(xs);
    out.f_mean = mf.mean;
    out.x_mean = mx.mean;
    if (lambda == mu) {
        out.degenerate = true;
        out.pass = mf.mean == 0.0;
        return out;
    }
    if (mx.mean <= 0) throw insufficient_data("verify_fracpunch: no edge advances observed");
    out.ratio = mf.mean / mx.mean;
    // Delta method for the ratio of means with the replica covariance.
    double n = static_cast<double>(reps);
    double cov = 0;
    for (std::size_t i = 0; i < reps; ++i) cov += (fs[i] - mf.mean) * (xs[i] - mx.mean);
    cov /= n * (n - 1);
    double var = mf.se * mf.se / (mx.mean * mx.mean) +
                 mf.mean * mf.mean * mx.se * mx.se / std::pow(mx.mean, 4) -
                 2 * mf.mean * cov / std::pow(mx.mean, 3);
    out.se = std::sqrt(std::max(var, 0.0));
    out.pass = std::fabs(out.ratio - out.target) <= 0.10 * out.target;
    return out;
}

GapReport verify_gap(double lambda, double mu, double T, std::size_t reps, MasterSeed seed) {
    GapReport out;
    std::vector<double> lhs, diff;
    for (std::size_t i = 0; i < reps; ++i) {
        auto tr = competition_trace(lambda, mu, derive_key(seed, rng_domain::generic, i), T);
        double gap = static_cast<double>(tr.contact_edge_final - tr.rbar_final);
        lhs.push_back(gap);
        diff.push_back(gap - static_cast<double>(tr.delta_wins));
    }
    auto ml = stats::mean_se(lhs), md = stats::mean_se(diff);
    out.lhs_mean = ml.mean;
    out.rhs_mean = ml.mean - md.mean;
    out.diff_se = md.se;
    out.pass = md.mean >= -3.0 * md.se;
    return out;
}

SpeedIneqReport speed_inequality(double lambda, double mu, double T, std::size_t reps,
                                 MasterSeed seed) {
    SpeedIneqReport out;
    std::vector<double> alphas, betas, slacks;
    for (std::size_t i = 0; i < reps; ++i) {
        auto tr = competition_trace(lambda, mu, derive_key(seed, rng_domain::generic, i), T);
        double a = static_cast<double>(tr.rbar_final) / T;
        double b = static_cast<double>(tr.contact_edge_final) / T;
        alphas.push_back(a);
        betas.push_back(b);
        slacks.push_back(lambda / mu * b - a);
    }
    auto ma = stats::mean_se(alphas), mb = stats::mean_se(betas), ms = stats::mean_se(slacks);
    out.alpha_hat = ma.mean;
    out.alpha_se = ma.se;
    out.beta_hat = mb.mean;
    out.beta_se = mb.se;
    out.bound = lambda / mu * mb.mean;
    out.slack_z = ms.se > 0 ? ms.mean / ms.se : 0;
    out.pass = ms.mean >= -3.0 * ms.se;
    return out;
}

SubaddReport subadditivity_check(double lambda, double mu, double s, double u, std::size_t reps,
                                 MasterSeed seed) {
    if (!(0 <= s && s <= u)) throw parameter_error("subadditivity_check: need 0 <= s <= u");
    if (lambda > mu) throw parameter_error("subadditivity_check: requires mu >= lambda");
    ProcessParams p{lambda, mu, 1};
    SubaddReport out;
    out.replicas = reps;
    for (std::size_t i = 0; i < reps; ++i) {
        Construction cons(derive_key(seed, rng_domain::generic, i), p, u);
        // First pass: running maxima of the half-line edge at s and u.
        Engine::Options opt;
        opt.fixed_left = -certified_width(p, u, 8.0, 0.5);
        Engine eng(cons, opt);
        int bar = eng.add_layer({LayerKind::ThreeState, Configuration::half_line(0), false});
        Site xbar_s = 0, xbar_u = 0, last_r = 0;
        eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
            if (!(mask & (1ULL << bar))) return;
            Site r = e.rightmost(bar);
            if (std::min(r, last_r) <= e.left_front(m.time))
                throw width_certificate_error("subadditivity_check: window too narrow");
            last_r = r;
            if (m.time <= s) xbar_s = std::max(xbar_s, r);
            xbar_u = std::max(xbar_u, r);
        });
        eng.run_until(u);

        // Second pass: restart from the half-line at level xbar_s at time s.
        Engine::Options opt2;
        opt2.fixed_left = xbar_s - certified_width(p, u - s, 8.0, 0.5);
        opt2.front_start_time = s;
        Engine eng2(cons, opt2);
        eng2.run_until(s);
        int lay2 =
            eng2.add_layer({LayerKind::ThreeState, Configuration::half_line(xbar_s), false});
        Site last_r2 = xbar_s;
        eng2.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
            if (!(mask & (1ULL << lay2))) return;
            Site r = e.rightmost(lay2);
            if (std::min(r, last_r2) <= e.left_front(m.time))
                throw width_certificate_error("subadditivity_check: window too narrow");
            last_r2 = r;
        });
        eng2.run_until(u);
        Site xbar_su = eng2.ever_max(lay2) - xbar_s;

        Site slack = xbar_s + xbar_su - xbar_u;
        out.max_slack = std::max(out.max_slack, slack);
        if (slack < 0) out.violations += 1;
    }
    return out;
}

}  // namespace ipslab
