#include "ipslab/process.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ipslab/errors.hpp"

namespace ipslab {

const TrajectorySample& Trajectory::at_time(double t) const {
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double tt, const TrajectorySample& s) { return tt < s.time; });
    if (it == samples.begin()) throw parameter_error("Trajectory::at_time before first sample");
    return *std::prev(it);
}

namespace {

void check_params_match(const ProcessParams& p, const Construction& c) {
    const ProcessParams& q = c.params();
    if (p.lambda != q.lambda || p.mu != q.mu || p.range != q.range)
        throw configuration_error("process parameters do not match the construction");
}

struct RecordingRun {
    Engine engine;
    int layer = 0;
    bool contact_kind = false;
    Trajectory traj;

    RecordingRun(const Construction& c, Engine::Options opt) : engine(c, opt) {}

    void start(const Engine::LayerInit& init) {
        contact_kind = init.kind != LayerKind::ThreeState;
        layer = engine.add_layer(init);
        record(engine.now());
        if (engine.infected_count(layer) == 0) traj.died_at = engine.now();
        engine.set_observer([this](Engine& e, const EventMark& m, std::uint64_t mask) {
            if (mask & (1ULL << layer)) record(m.time);
            (void)e;
        });
    }

    void record(double t) {
        traj.samples.push_back({t, engine.rightmost(layer), engine.leftmost(layer),
                                engine.infected_count(layer)});
    }

    void snapshot(double t) {
        std::map<Site, int> snap;
        for (Site x = engine.window_left(); x <= engine.window_right(); ++x) {
            int v = engine.state(layer, x);
            if (contact_kind ? v == 1 : v != -1) snap[x] = v;
        }
        traj.snapshots[t] = std::move(snap);
    }

    Trajectory finish(bool track_ever) {
        if (!traj.died_at) traj.died_at = engine.died_at(layer);
        if (track_ever) traj.ever_infected = engine.ever_set(layer);
        return std::move(traj);
    }
};

void run_with_snapshots(RecordingRun& run, double T, const std::vector<double>& snapshot_times) {
    std::vector<double> snaps = snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    for (double ts : snaps) {
        if (ts > T) break;
        run.engine.run_until(ts);
        run.snapshot(ts);
    }
    run.engine.run_until(T);
}

// The windowed right edge equals the untruncated one while it stays strictly
// right of the worst-case contamination front.
void certify_right_edge(const Trajectory& traj, const Engine& engine, double T) {
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        double until = i + 1 < traj.samples.size() ? traj.samples[i + 1].time : T;
        Site f = engine.left_front(until);  // front is rightmost just before the next change
        if (f != kNoSite && s.r != kNoSite && s.r <= f)
            throw width_certificate_error("right edge reached the contamination front");
    }
}

}  // namespace

Trajectory evolve_three_state(const Configuration& eta, const ProcessParams& p,
                              const Construction& c, double T,
                              const std::vector<double>& snapshot_times) {
    check_params_match(p, c);
    if (T > c.horizon()) throw horizon_exceeded("evolve_three_state: T exceeds horizon");
    Engine::Options opt;
    bool finite = !eta.left_infinite() && !eta.right_infinite();
    if (eta.left_infinite()) {
        Site support = eta.window.empty() ? 0 : eta.window.begin()->first;
        opt.fixed_left = support - certified_width(p, c.horizon());
    }
    if (eta.right_infinite()) {
        Site support = eta.window.empty() ? 0 : eta.window.rbegin()->first;
        opt.fixed_right = support + certified_width(p, c.horizon());
    }
    RecordingRun run(c, opt);
    run.start({LayerKind::ThreeState, eta, finite});
    run_with_snapshots(run, T, snapshot_times);
    if (eta.left_infinite() && !eta.right_infinite()) certify_right_edge(run.traj, run.engine, T);
    return run.finish(finite);
}

Trajectory evolve_contact(const std::set<Site>& A, double mu, const Construction& c, double T,
                          const std::vector<double>& snapshot_times) {
    if (mu != c.params().contact_rate())
        throw configuration_error("evolve_contact: mu does not match the construction");
    if (T > c.horizon()) throw horizon_exceeded("evolve_contact: T exceeds horizon");
    Configuration cfg;
    for (Site x : A) cfg.window[x] = 1;
    RecordingRun run(c, Engine::Options());
    run.start({LayerKind::Contact, cfg, true});
    run_with_snapshots(run, T, snapshot_times);
    return run.finish(true);
}

Trajectory evolve_contact_halfline(Site y0, double mu, const Construction& c, double T) {
    if (mu != c.params().contact_rate())
        throw configuration_error("evolve_contact_halfline: mu does not match the construction");
    if (T > c.horizon()) throw horizon_exceeded("evolve_contact_halfline: T exceeds horizon");
    Engine::Options opt;
    opt.fixed_left = y0 - certified_width(c.params(), c.horizon());
    RecordingRun run(c, opt);
    run.start({LayerKind::Contact, Configuration::half_line(y0), false});
    run.engine.run_until(T);
    certify_right_edge(run.traj, run.engine, T);
    return run.finish(false);
}

Trajectory evolve_range_M(const Configuration& eta, const ProcessParams& p, const Construction& c,
                          double T) {
    check_params_match(p, c);
    if (p.range > 1 && p.lambda != p.mu)
        throw unsupported_combination("evolve_range_M: three-state dynamics need range 1");
    if (p.range == 1 && p.lambda != p.mu) return evolve_three_state(eta, p, c, T);
    std::set<Site> A;
    for (const auto& [x, v] : eta.window)
        if (v == 1) A.insert(x);
    if (eta.left_infinite()) {
        Site y0 = eta.window.empty() ? 0 : eta.window.begin()->first;
        return evolve_contact_halfline(y0, p.mu, c, T);
    }
    return evolve_contact(A, p.mu, c, T);
}

std::set<Site> forest_fire_cluster(Site w, double lambda, const Construction& c) {
    const ProcessParams& p = c.params();
    if (p.mu != 0) throw configuration_error("forest_fire_cluster: construction must have mu = 0");
    if (lambda != p.lambda)
        throw configuration_error("forest_fire_cluster: lambda does not match the construction");
    const double horizon = c.horizon();
    const double inf = horizon * 2 + 1;

    auto first_after = [&](const std::vector<double>& ts, double t) {
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        return it == ts.end() ? inf : *it;
    };

    using Item = std::pair<double, Site>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    std::set<Site> infected;
    pq.push({0.0, w});
    while (!pq.empty()) {
        auto [s_u, u] = pq.top();
        pq.pop();
        if (infected.count(u)) continue;
        infected.insert(u);
        double rho = first_after(c.times({ClockKind::Recovery, u, 0}), s_u);
        for (int d = -p.range; d <= p.range; ++d) {
            if (d == 0) continue;
            Site v = u + d;
            if (infected.count(v)) continue;
            // First-infection arrows: lambda arrows always, delta arrows when
            // the delta stream carries the -1 -> 1 transition.
            double t_arrow = first_after(c.times({ClockKind::LambdaArrow, u, v}), s_u);
            if (!p.delta_reinfects())
                t_arrow = std::min(t_arrow,
                                   first_after(c.times({ClockKind::DeltaArrow, u, v}), s_u));
            if (t_arrow <= rho && t_arrow <= horizon) pq.push({t_arrow, v});
        }
    }
    return infected;
}

}  // namespace ipslab
