#include "ipslab/construction.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/errors.hpp"

namespace ipslab {

std::vector<double> stream_times(MasterSeed seed, const ClockId& id, double rate, double t_max) {
    if (rate < 0) throw parameter_error("stream_times: negative rate");
    if (t_max < 0) throw parameter_error("stream_times: negative horizon");
    std::vector<double> out;
    if (rate == 0 || t_max == 0) return out;
    CounterStream cs(derive_key(seed, rng_domain::clock_stream, static_cast<std::uint64_t>(id.kind),
                                zigzag(id.source), zigzag(id.target)));
    double t = 0;
    for (std::uint64_t n = 0;; ++n) {
        t += cs.exponential(n, rate);
        if (t > t_max) break;
        out.push_back(t);
    }
    return out;
}

Construction::Construction(MasterSeed seed, ProcessParams p, double horizon)
    : seed_(seed), params_(p), horizon_(horizon) {
    if (p.lambda < 0 || p.mu < 0) throw parameter_error("Construction: negative rate");
    if (p.range < 1) throw parameter_error("Construction: range must be >= 1");
    if (horizon < 0) throw parameter_error("Construction: negative horizon");
}

Construction Construction::scripted(ProcessParams p, double horizon,
                                    std::map<ClockId, std::vector<double>> clocks) {
    Construction c(0, p, horizon);
    c.scripted_ = true;
    for (auto& [id, times] : clocks) {
        if (!std::is_sorted(times.begin(), times.end()))
            throw parameter_error("scripted clock times must be sorted");
        if (!times.empty() && times.back() > horizon)
            throw parameter_error("scripted clock time exceeds horizon");
    }
    c.overrides_ = std::move(clocks);
    return c;
}

double Construction::rate_of(ClockKind kind) const {
    switch (kind) {
        case ClockKind::LambdaArrow: return params_.both_rate();
        case ClockKind::DeltaArrow: return params_.delta_rate();
        case ClockKind::Recovery: return 1.0;
    }
    return 0.0;
}

const std::vector<double>& Construction::times(const ClockId& id) const {
    if (id.kind != ClockKind::Recovery) {
        Site d = id.target - id.source;
        if (d == 0 || d > params_.range || -d > params_.range)
            throw parameter_error("Construction::times: arrow outside range");
    }
    if (scripted_) {
        static const std::vector<double> empty;
        auto it = overrides_.find(id);
        return it == overrides_.end() ? empty : it->second;
    }
    std::uint64_t key = derive_key(seed_, rng_domain::clock_stream,
                                   static_cast<std::uint64_t>(id.kind), zigzag(id.source),
                                   zigzag(id.target));
    std::lock_guard<std::mutex> lock(*cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto vec =
        std::make_unique<std::vector<double>>(stream_times(seed_, id, rate_of(id.kind), horizon_));
    auto [pos, ok] = cache_.emplace(key, std::move(vec));
    return *pos->second;
}

std::vector<EventMark> Construction::merged_events(Site lo, Site hi, double t0, double t1) const {
    if (t0 > t1) throw parameter_error("merged_events: t0 > t1");
    if (t1 > horizon_) throw horizon_exceeded("merged_events: window exceeds horizon");
    std::vector<EventMark> out;
    if (lo > hi) return out;
    auto add_clock = [&](const ClockId& id) {
        const auto& ts = times(id);
        auto first = std::upper_bound(ts.begin(), ts.end(), t0);
        for (auto it = first; it != ts.end() && *it <= t1; ++it)
            out.push_back({*it, id, static_cast<std::size_t>(it - ts.begin()) + 1});
    };
    const int M = params_.range;
    for (Site x = lo; x <= hi; ++x) add_clock({ClockKind::Recovery, x, 0});
    // Arrows with source or target in the interval: sources within distance M.
    for (Site x = lo - M; x <= hi + M; ++x) {
        for (int d = -M; d <= M; ++d) {
            if (d == 0) continue;
            Site y = x + d;
            bool touches = (x >= lo && x <= hi) || (y >= lo && y <= hi);
            if (!touches) continue;
            add_clock({ClockKind::LambdaArrow, x, y});
            if (params_.delta_rate() > 0 || scripted_) add_clock({ClockKind::DeltaArrow, x, y});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::set<Site> Construction::reachable(const std::set<Site>& from, double s, double t,
                                       Arrows arrows) const {
    if (s > t) throw parameter_error("reachable: s > t");
    if (t > horizon_) throw horizon_exceeded("reachable: t exceeds horizon");
    std::set<Site> occupied = from;
    if (occupied.empty() || s == t) return occupied;
    const int M = params_.range;
    // Sweep marks in time order, growing the spatial window with the set.
    Site lo = *occupied.begin(), hi = *occupied.rbegin();
    double t_cur = s;
    while (true) {
        Site wlo = lo - M, whi = hi + M;
        auto marks = merged_events(wlo, whi, t_cur, t);
        bool grew = false;
        for (const auto& m : marks) {
            if (m.clock.kind == ClockKind::Recovery) {
                occupied.erase(m.clock.source);
            } else {
                if (arrows == Arrows::LambdaOnly && m.clock.kind != ClockKind::LambdaArrow)
                    continue;
                if (!occupied.count(m.clock.source)) continue;
                if (occupied.insert(m.clock.target).second) {
                    if (m.clock.target < lo || m.clock.target > hi) {
                        // Window no longer covers the set; restart the sweep
                        // from this instant with the enlarged window.
                        lo = std::min(lo, m.clock.target);
                        hi = std::max(hi, m.clock.target);
                        t_cur = m.time;
                        grew = true;
                        break;
                    }
                }
            }
            if (occupied.empty()) return occupied;
        }
        if (!grew) break;
    }
    return occupied;
}

}  // namespace ipslab
