#include "ipslab/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/errors.hpp"
#include "ipslab/rng.hpp"

namespace ipslab {

namespace {

bool config_leq(const Configuration& a, const Configuration& b) {
    if (a.left_default > b.left_default || a.right_default > b.right_default) return false;
    std::set<Site> support;
    for (const auto& [x, v] : a.window) support.insert(x);
    for (const auto& [x, v] : b.window) support.insert(x);
    for (Site x : support)
        if (a.at(x) > b.at(x)) return false;
    return true;
}

Engine::Options options_for(const std::vector<Configuration>& etas, const ProcessParams& p,
                            double horizon) {
    Engine::Options opt;
    bool left_inf = false, right_inf = false;
    Site lo = 0, hi = 0;
    for (const auto& eta : etas) {
        left_inf = left_inf || eta.left_infinite();
        right_inf = right_inf || eta.right_infinite();
        if (!eta.window.empty()) {
            lo = std::min(lo, eta.window.begin()->first);
            hi = std::max(hi, eta.window.rbegin()->first);
        }
    }
    if (left_inf) opt.fixed_left = lo - certified_width(p, horizon);
    if (right_inf) opt.fixed_right = hi + certified_width(p, horizon);
    return opt;
}

}  // namespace

CoupledTrajectories co_evolve_shared(const std::vector<Configuration>& etas,
                                     const ProcessParams& p, const Construction& c, double T,
                                     ViolationReport* order_report) {
    const ProcessParams& q = c.params();
    if (p.lambda != q.lambda || p.mu != q.mu || p.range != q.range)
        throw configuration_error("co_evolve_shared: params do not match construction");
    if (T > c.horizon()) throw horizon_exceeded("co_evolve_shared: T exceeds horizon");

    Engine eng(c, options_for(etas, p, c.horizon()));
    std::vector<int> layers;
    for (const auto& eta : etas) layers.push_back(eng.add_layer({LayerKind::ThreeState, eta, false}));

    // Ordered pairs among the initial configurations, checked pathwise.
    std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs;
    if (order_report && p.mu >= p.lambda) {
        for (std::size_t i = 0; i < etas.size(); ++i)
            for (std::size_t j = 0; j < etas.size(); ++j)
                if (i != j && config_leq(etas[i], etas[j])) ordered_pairs.emplace_back(i, j);
    }

    CoupledTrajectories out;
    out.shared_seed = c.seed();
    out.trajectories.resize(etas.size());
    auto record_all = [&](double t) {
        for (std::size_t i = 0; i < layers.size(); ++i)
            out.trajectories[i].samples.push_back({t, eng.rightmost(layers[i]),
                                                   eng.leftmost(layers[i]),
                                                   eng.infected_count(layers[i])});
    };
    record_all(0);

    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (mask) record_all(m.time);
        if (!mask || ordered_pairs.empty()) return;
        Site touched = m.clock.kind == ClockKind::Recovery ? m.clock.source : m.clock.target;
        for (auto [i, j] : ordered_pairs) {
            order_report->total_checks += 1;
            if (e.state(layers[i], touched) > e.state(layers[j], touched))
                order_report->note(m.time, touched, "initial-configuration order violated");
        }
    });
    eng.run_until(T);

    // Full-window sweep at the end as a belt over the event-local checks.
    if (order_report)
        for (auto [i, j] : ordered_pairs)
            for (Site x = eng.window_left(); x <= eng.window_right(); ++x) {
                order_report->total_checks += 1;
                if (eng.state(layers[i], x) > eng.state(layers[j], x))
                    order_report->note(T, x, "initial-configuration order violated (sweep)");
            }

    for (std::size_t i = 0; i < layers.size(); ++i)
        out.trajectories[i].died_at = eng.died_at(layers[i]);
    return out;
}

RightmostCheck assert_rightmost_identity(const ProcessParams& p, const Construction& c, double T) {
    if (p.mu < p.lambda)
        throw parameter_error("assert_rightmost_identity: requires mu >= lambda");
    if (T > c.horizon()) throw horizon_exceeded("assert_rightmost_identity: T exceeds horizon");
    Engine::Options opt;
    opt.fixed_left = -certified_width(p, c.horizon());
    Engine eng(c, opt);
    int lo_layer = eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
    int hl_layer = eng.add_layer({LayerKind::ThreeState, Configuration::half_line(0), false});

    RightmostCheck out;
    auto record = [&](double t) {
        out.standard.samples.push_back(
            {t, eng.rightmost(lo_layer), eng.leftmost(lo_layer), eng.infected_count(lo_layer)});
        out.half_line.samples.push_back(
            {t, eng.rightmost(hl_layer), eng.leftmost(hl_layer), eng.infected_count(hl_layer)});
    };
    record(0);

    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (mask) record(m.time);
        if (!e.alive(lo_layer)) return;  // conditioning on I_t nonempty
        Site l = e.leftmost(lo_layer);
        Site f = e.left_front(m.time);
        if (l <= f)
            throw width_certificate_error("assert_rightmost_identity: front reached l_t");
        out.report.total_checks += 1;
        if (e.rightmost(lo_layer) != e.rightmost(hl_layer))
            out.report.note(m.time, e.rightmost(lo_layer), "sup I_t differs");
        // Stronger statement: states agree on [l_t, infinity).
        Site hi = std::max(e.rightmost(lo_layer), e.rightmost(hl_layer)) + 1;
        for (Site x = l; x <= hi; ++x) {
            out.report.total_checks += 1;
            if (e.state(lo_layer, x) != e.state(hl_layer, x))
                out.report.note(m.time, x, "states differ right of l_t");
        }
    });
    eng.run_until(T);
    out.standard.died_at = eng.died_at(lo_layer);
    return out;
}

SandwichCheck assert_sandwich(const ProcessParams& p, const Construction& c, double T,
                              double width_factor) {
    if (p.mu < p.lambda) throw parameter_error("assert_sandwich: requires mu >= lambda");
    if (T > c.horizon()) throw horizon_exceeded("assert_sandwich: T exceeds horizon");
    double horizon = c.horizon();
    Site W = static_cast<Site>(std::ceil(width_factor * p.contact_rate() * horizon) +
                               4.0 * std::ceil(std::sqrt(p.contact_rate() * horizon)));
    Engine eng(c, {.fixed_left = -W, .fixed_right = W});
    int o_layer = eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
    int z_layer = eng.add_layer({LayerKind::Contact, Configuration::all_ones(), false});

    SandwichCheck out;
    auto record = [&](double t) {
        out.standard.samples.push_back(
            {t, eng.rightmost(o_layer), eng.leftmost(o_layer), eng.infected_count(o_layer)});
    };
    record(0);

    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (mask & 1) record(m.time);
        if (!e.alive(o_layer)) return;
        Site l = e.leftmost(o_layer), r = e.rightmost(o_layer);
        if (l <= e.left_front(m.time) || r >= e.right_front(m.time))
            throw width_certificate_error("assert_sandwich: window too narrow");
        for (Site x = l; x <= r; ++x) {
            out.report.total_checks += 1;
            bool in_I = e.state(o_layer, x) == 1;
            bool in_Z = e.state(z_layer, x) == 1;
            if (in_I != in_Z) out.report.note(m.time, x, "sandwich identity broken");
        }
    });
    eng.run_until(T);
    out.standard.died_at = eng.died_at(o_layer);
    return out;
}

ViolationReport check_restart_domination(const ProcessParams& p, const Construction& c, double T) {
    if (p.mu < p.lambda)
        throw parameter_error("check_restart_domination: requires mu >= lambda");
    Engine eng(c);
    int o_layer = eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
    ViolationReport report;
    std::vector<int> restarts;
    Site running_max = 0;

    eng.set_observer([&](Engine& e, const EventMark& m, std::uint64_t mask) {
        if (mask & 1) {
            Site r = e.rightmost(o_layer);
            while (r != kNoSite && r > running_max && e.layer_count() < 60) {
                running_max += 1;
                // tau_k: first time the edge reaches the new level.
                restarts.push_back(
                    e.add_layer({LayerKind::ThreeState, Configuration::single(running_max), false}));
            }
        }
        if (!mask) return;
        Site touched = m.clock.kind == ClockKind::Recovery ? m.clock.source : m.clock.target;
        for (int lay : restarts) {
            report.total_checks += 1;
            if (e.state(o_layer, touched) < e.state(lay, touched))
                report.note(m.time, touched, "restart process escaped domination");
        }
    });
    eng.run_until(T);
    for (int lay : restarts)
        for (Site x = eng.window_left(); x <= eng.window_right(); ++x) {
            report.total_checks += 1;
            if (eng.state(o_layer, x) < eng.state(lay, x))
                report.note(T, x, "restart domination violated (sweep)");
        }
    return report;
}

namespace {

// Pair states for the rate-table coupling, lower component never above upper.
struct PairSite {
    std::int8_t lower = -1;
    std::int8_t upper = -1;
};

}  // namespace

OrderedCouplingResult co_evolve_ordered(const Configuration& eta, const Configuration& eta2,
                                        const ProcessParams& p, const ProcessParams& p2,
                                        MasterSeed seed, double T) {
    if (!(p.lambda <= p2.lambda && p.mu <= p2.mu && p2.mu >= p.lambda))
        throw parameter_error("co_evolve_ordered: rate table needs lambda<=lambda', mu<=mu', mu'>=lambda");
    if (!config_leq(eta, eta2))
        throw parameter_error("co_evolve_ordered: initial configurations must be ordered");
    if (eta.left_infinite() || eta.right_infinite() || eta2.left_infinite() ||
        eta2.right_infinite())
        throw parameter_error("co_evolve_ordered: finite supports only");

    // Window covering everything reachable gets grown on demand.
    std::map<Site, PairSite> sites;
    auto get = [&](Site x) -> PairSite& {
        auto it = sites.find(x);
        if (it == sites.end()) {
            PairSite fresh;
            fresh.lower = static_cast<std::int8_t>(eta.at(x));
            fresh.upper = static_cast<std::int8_t>(eta2.at(x));
            it = sites.emplace(x, fresh).first;
        }
        return it->second;
    };
    Site lo = 0, hi = 0;
    for (const auto& [x, v] : eta.window) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    for (const auto& [x, v] : eta2.window) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    for (Site x = lo - 1; x <= hi + 1; ++x) get(x);

    SplitRng rng(derive_key(seed, rng_domain::gillespie));
    OrderedCouplingResult out;

    auto n_inf = [&](Site x, bool upper) {
        int n = 0;
        for (Site d : {Site{-1}, Site{1}}) {
            auto it = sites.find(x + d);
            if (it == sites.end()) continue;
            n += (upper ? it->second.upper : it->second.lower) == 1;
        }
        return n;
    };

    // Transition menu per site; rebuilt每 event over the active hull.
    struct Move {
        Site x;
        int branch;  // 0: joint/lower move, 1: upper-only move, 2: recovery
        double rate;
    };

    double t = 0;
    while (true) {
        std::vector<Move> moves;
        double total = 0;
        for (auto& [x, s] : sites) {
            double nl = n_inf(x, false), nu = n_inf(x, true);
            auto add = [&](int branch, double rate) {
                if (rate > 0) {
                    moves.push_back({x, branch, rate});
                    total += rate;
                }
            };
            if (s.upper == 0 && s.lower == -1) {
                add(0, p.lambda * nl);
                add(1, p2.mu * nu - p.lambda * nl);
            } else if (s.upper == -1 && s.lower == -1) {
                add(0, p.lambda * nl);
                add(1, p2.lambda * nu - p.lambda * nl);
            } else if (s.upper == 0 && s.lower == 0) {
                add(0, p.mu * nl);
                add(1, p2.mu * nu - p.mu * nl);
            } else if (s.upper == 1 && s.lower == -1) {
                add(0, p.lambda * nl);
                add(2, 1.0);
            } else if (s.upper == 1 && s.lower == 0) {
                add(0, p.mu * nl);
                add(2, 1.0);
            } else if (s.upper == 1 && s.lower == 1) {
                add(2, 1.0);
            }
        }
        if (total == 0) break;
        t += rng.next_exponential(total);
        if (t > T) break;
        double u = rng.next_uniform() * total;
        double acc = 0;
        const Move* chosen = &moves.back();
        for (const auto& mv : moves) {
            acc += mv.rate;
            if (u < acc) {
                chosen = &mv;
                break;
            }
        }
        PairSite& s = get(chosen->x);
        switch (chosen->branch) {
            case 0:  // joint infection of both components (or lower catching up)
                s.lower = 1;
                s.upper = 1;
                break;
            case 1:  // upper-only infection
                s.upper = 1;
                break;
            case 2:  // recovery: upper always, lower exactly when it was infected
                if (s.lower == 1) s.lower = 0;
                s.upper = 0;
                break;
        }
        out.events += 1;
        out.order.total_checks += 1;
        if (s.lower > s.upper) out.order.note(t, chosen->x, "ordered coupling order violated");
        // Keep one quiescent site of margin around anything upper-infected.
        if (s.upper == 1) {
            get(chosen->x - 1);
            get(chosen->x + 1);
        }
    }

    for (const auto& [x, s] : sites) {
        out.order.total_checks += 1;
        if (s.lower > s.upper) out.order.note(T, x, "ordered coupling order violated (final)");
        if (s.lower == 1) out.lower_infected.insert(x);
        if (s.upper == 1) out.upper_infected.insert(x);
    }
    out.lower_state_origin = get(0).lower;
    out.upper_state_origin = get(0).upper;
    return out;
}

double two_site_exact(double lambda, double t) {
    if (lambda < 0 || t < 0) throw parameter_error("two_site_exact: negative argument");
    if (t == 0 || lambda == 0) return 0;
    if (lambda == 1.0) return t * std::exp(-2.0 * t);
    double d = lambda - 1.0;
    return std::exp(-2.0 * t) * lambda * (-std::expm1(-t * d)) / d;
}

DualityResult check_duality(const std::set<Site>& A, const std::set<Site>& B, double mu, double t,
                            std::size_t reps, MasterSeed seed) {
    if (reps < 1000) throw parameter_error("check_duality: need at least 1e3 reps");
    auto hits = [&](const std::set<Site>& from, const std::set<Site>& probe,
                    std::uint64_t salt) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < reps; ++i) {
            Construction c(derive_key(seed, rng_domain::generic, salt, i), {mu, mu, 1}, t);
            auto reach = c.reachable(from, 0, t);
            bool hit = false;
            for (Site x : probe)
                if (reach.count(x)) {
                    hit = true;
                    break;
                }
            n += hit;
        }
        return n;
    };
    DualityResult out;
    out.p1 = stats::proportion(hits(A, B, 1), reps);
    out.p2 = stats::proportion(hits(B, A, 2), reps);
    out.z = stats::two_proportion_z(out.p1, out.p2);
    return out;
}

}  // namespace ipslab
