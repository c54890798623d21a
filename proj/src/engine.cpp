#include "ipslab/engine.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/errors.hpp"

namespace ipslab {

Site certified_width(const ProcessParams& p, double duration, double z, double drift_factor) {
    const int M = p.range;
    const double pair_rate = p.contact_rate();
    double m1 = 0, m2 = 0;  // jump moments of the worst-case front
    for (int j = 1; j <= M; ++j) {
        m1 += static_cast<double>(j) * (M - j + 1);
        m2 += static_cast<double>(j) * j * (M - j + 1);
    }
    double speed = pair_rate * m1;
    double var = pair_rate * m2 * duration;
    double w = speed * duration * (1.0 + drift_factor) + z * std::sqrt(var) + 16.0;
    return static_cast<Site>(std::ceil(w));
}

Engine::Engine(const Construction& c, Options opt)
    : cons_(c),
      opt_(opt),
      M_(c.range()),
      use_delta_(c.params().delta_rate() > 0 || c.is_scripted()) {
    if (opt_.fixed_left && opt_.fixed_right && *opt_.fixed_left > *opt_.fixed_right)
        throw parameter_error("Engine: empty window");
    base_ = opt_.fixed_left.value_or(0);
    sites_.resize(1);
}

int Engine::arrow_slot(std::int8_t kind, Site d) const {
    int j = d > 0 ? static_cast<int>(d) - 1 : M_ + static_cast<int>(-d) - 1;
    return kind == static_cast<std::int8_t>(ClockKind::DeltaArrow) ? 2 * M_ + j : j;
}

void Engine::ensure_window(Site lo, Site hi) {
    if (opt_.fixed_left) lo = std::max(lo, *opt_.fixed_left);
    if (opt_.fixed_right) hi = std::min(hi, *opt_.fixed_right);
    Site cur_lo = base_, cur_hi = window_right();
    if (lo < cur_lo) {
        Site new_lo = lo - 64;
        if (opt_.fixed_left) new_lo = std::max(new_lo, *opt_.fixed_left);
        std::vector<SiteData> grown(static_cast<std::size_t>(cur_hi - new_lo + 1));
        for (std::size_t i = 0; i < static_cast<std::size_t>(cur_lo - new_lo); ++i) {
            grown[i].st.resize(layers_.size());
            for (std::size_t li = 0; li < layers_.size(); ++li) grown[i].st[li] = quiescent(li);
        }
        for (std::size_t i = 0; i < sites_.size(); ++i)
            grown[i + static_cast<std::size_t>(cur_lo - new_lo)] = std::move(sites_[i]);
        sites_ = std::move(grown);
        base_ = new_lo;
    }
    if (hi > window_right()) {
        Site new_hi = hi + 64;
        if (opt_.fixed_right) new_hi = std::min(new_hi, *opt_.fixed_right);
        std::size_t old = sites_.size();
        sites_.resize(static_cast<std::size_t>(new_hi - base_ + 1));
        for (std::size_t i = old; i < sites_.size(); ++i) {
            sites_[i].st.resize(layers_.size());
            for (std::size_t li = 0; li < layers_.size(); ++li) sites_[i].st[li] = quiescent(li);
        }
    }
}

int Engine::add_layer(const LayerInit& init) {
    if (layers_.size() >= 64) throw parameter_error("Engine: too many layers");
    const Configuration& cfg = init.config;
    if (cfg.left_infinite() && !opt_.fixed_left)
        throw configuration_error("Engine: left-infinite configuration needs a fixed left edge");
    if (cfg.right_infinite() && !opt_.fixed_right)
        throw configuration_error("Engine: right-infinite configuration needs a fixed right edge");

    Site lo = cfg.window.empty() ? base_ : cfg.window.begin()->first;
    Site hi = cfg.window.empty() ? base_ : cfg.window.rbegin()->first;
    if (cfg.left_infinite()) lo = *opt_.fixed_left;
    if (cfg.right_infinite()) hi = *opt_.fixed_right;
    ensure_window(lo - M_, hi + M_);

    int idx = static_cast<int>(layers_.size());
    Layer lay;
    lay.kind = init.kind;
    lay.track_ever = init.track_ever;
    layers_.push_back(lay);
    Layer& L = layers_.back();

    const bool contact = init.kind != LayerKind::ThreeState;
    for (Site x = base_; x <= window_right(); ++x) {
        SiteData& s = at(x);
        int v = cfg.at(x);
        std::int8_t st =
            contact ? static_cast<std::int8_t>(v == 1 ? 1 : 0) : static_cast<std::int8_t>(v);
        s.st.push_back(st);
        if (st == 1) {
            L.count += 1;
            if (L.r == kNoSite || x > L.r) L.r = x;
            if (L.l == kNoSite || x < L.l) L.l = x;
            if (L.ever_min == kNoSite || x < L.ever_min) L.ever_min = x;
            if (L.ever_max == kNoSite || x > L.ever_max) L.ever_max = x;
            if (L.track_ever) L.ever.insert(x);
            s.refcount += 1;
            if (s.refcount == 1) activate_site(x, now_);
        }
    }
    return idx;
}

void Engine::activate_site(Site x, double t) {
    SiteData& s = at(x);
    if (s.arrows.empty())
        s.arrows.resize(static_cast<std::size_t>(use_delta_ ? 4 * M_ : 2 * M_));
    schedule_skip(x, s.recovery, static_cast<std::int8_t>(ClockKind::Recovery), 0, t);
    for (int d = 1; d <= M_; ++d) {
        schedule_skip(x, s.arrows[static_cast<std::size_t>(arrow_slot(0, d))], 0, d, t);
        schedule_skip(x, s.arrows[static_cast<std::size_t>(arrow_slot(0, -d))], 0, -d, t);
        if (use_delta_) {
            schedule_skip(x, s.arrows[static_cast<std::size_t>(arrow_slot(1, d))], 1, d, t);
            schedule_skip(x, s.arrows[static_cast<std::size_t>(arrow_slot(1, -d))], 1, -d, t);
        }
    }
}

void Engine::schedule_skip(Site x, ClockRec& cr, std::int8_t kind, Site d, double after) {
    if (cr.pending) return;
    if (!cr.times) {
        ClockId id{static_cast<ClockKind>(kind), x,
                   kind == static_cast<std::int8_t>(ClockKind::Recovery) ? 0 : x + d};
        cr.times = &cons_.times(id);
    }
    const auto& ts = *cr.times;
    while (cr.cursor < ts.size() && ts[cr.cursor] <= after) ++cr.cursor;
    schedule_cursor(x, cr, kind, d);
}

void Engine::schedule_cursor(Site x, ClockRec& cr, std::int8_t kind, Site d) {
    if (cr.pending) return;
    const auto& ts = *cr.times;
    if (cr.cursor >= ts.size()) return;
    heap_.push(Ev{ts[cr.cursor], kind, x,
                  kind == static_cast<std::int8_t>(ClockKind::Recovery) ? x : x + d});
    cr.pending = true;
}

void Engine::infect(std::size_t li, Site y, double t, std::uint64_t& mask) {
    Layer& L = layers_[li];
    SiteData& s = at(y);
    s.st[li] = 1;
    mask |= 1ULL << li;
    L.count += 1;
    if (L.r == kNoSite || y > L.r) L.r = y;
    if (L.l == kNoSite || y < L.l) L.l = y;
    if (L.ever_min == kNoSite || y < L.ever_min) L.ever_min = y;
    if (L.ever_max == kNoSite || y > L.ever_max) L.ever_max = y;
    if (L.track_ever) L.ever.insert(y);
    s.refcount += 1;
    if (s.refcount == 1) activate_site(y, t);
}

void Engine::recover_bookkeeping(std::size_t li, Site x, double t) {
    Layer& L = layers_[li];
    L.count -= 1;
    if (L.count == 0) {
        L.r = kNoSite;
        L.l = kNoSite;
        if (!L.died_at) L.died_at = t;
        return;
    }
    if (x == L.r) {
        Site z = x - 1;
        while (state(static_cast<int>(li), z) != 1) --z;
        L.r = z;
    }
    if (x == L.l) {
        Site z = x + 1;
        while (state(static_cast<int>(li), z) != 1) ++z;
        L.l = z;
    }
}

void Engine::apply(const Ev& e) {
    std::size_t mark_index;
    {
        SiteData& src = at(e.src);
        ClockRec& cr = e.kind == static_cast<std::int8_t>(ClockKind::Recovery)
                           ? src.recovery
                           : src.arrows[static_cast<std::size_t>(arrow_slot(e.kind, e.tgt - e.src))];
        cr.pending = false;
        cr.cursor += 1;
        mark_index = cr.cursor;
    }
    std::uint64_t mask = 0;

    if (at(e.src).refcount > 0) {
        if (e.kind == static_cast<std::int8_t>(ClockKind::Recovery)) {
            SiteData& src = at(e.src);
            for (std::size_t li = 0; li < layers_.size(); ++li) {
                if (src.st[li] != 1) continue;
                src.st[li] = 0;
                mask |= 1ULL << li;
                src.refcount -= 1;
                recover_bookkeeping(li, e.src, e.t);
            }
        } else {
            bool in = in_window(e.tgt);
            if (!in) {
                bool free_side = (e.tgt < base_ && !opt_.fixed_left) ||
                                 (e.tgt > window_right() && !opt_.fixed_right);
                if (free_side) {
                    ensure_window(std::min(e.tgt, base_), std::max(e.tgt, window_right()));
                    in = true;
                }
            }
            if (in) {
                const bool lambda_kind =
                    e.kind == static_cast<std::int8_t>(ClockKind::LambdaArrow);
                const bool delta_reinf = cons_.params().delta_reinfects();
                for (std::size_t li = 0; li < layers_.size(); ++li) {
                    if (at(e.src).st[li] != 1) continue;
                    std::int8_t ts = at(e.tgt).st[li];
                    bool fire = false;
                    switch (layers_[li].kind) {
                        case LayerKind::ThreeState:
                            fire = lambda_kind ? (ts == -1 || ts == 0)
                                               : (delta_reinf ? ts == 0 : ts == -1);
                            break;
                        case LayerKind::Contact:
                            fire = ts == 0;
                            break;
                        case LayerKind::ContactLambdaOnly:
                            fire = lambda_kind && ts == 0;
                            break;
                    }
                    if (fire) infect(li, e.tgt, e.t, mask);
                }
            }
        }
    }

    {
        SiteData& src = at(e.src);
        if (src.refcount > 0) {
            ClockRec& cr = e.kind == static_cast<std::int8_t>(ClockKind::Recovery)
                               ? src.recovery
                               : src.arrows[static_cast<std::size_t>(
                                     arrow_slot(e.kind, e.tgt - e.src))];
            schedule_cursor(e.src, cr, e.kind,
                            e.kind == static_cast<std::int8_t>(ClockKind::Recovery)
                                ? 0
                                : e.tgt - e.src);
        }
    }

    if (observer_) {
        EventMark mark{e.t,
                       ClockId{static_cast<ClockKind>(e.kind), e.src,
                               e.kind == static_cast<std::int8_t>(ClockKind::Recovery) ? 0 : e.tgt},
                       mark_index};
        observer_(*this, mark, mask);
    }
}

void Engine::run_until(double t) {
    if (t > cons_.horizon()) throw horizon_exceeded("Engine::run_until past horizon");
    if (t < now_) throw parameter_error("Engine::run_until into the past");
    while (!heap_.empty() && heap_.top().t <= t) {
        Ev e = heap_.top();
        heap_.pop();
        now_ = e.t;
        apply(e);
    }
    now_ = t;
}

int Engine::state(int layer, Site x) const {
    if (!in_window(x)) return quiescent(static_cast<std::size_t>(layer));
    return at(x).st[static_cast<std::size_t>(layer)];
}

const std::set<Site>& Engine::ever_set(int layer) const {
    const Layer& L = layers_[static_cast<std::size_t>(layer)];
    if (!L.track_ever) throw parameter_error("Engine: ever set not tracked for this layer");
    return L.ever;
}

std::vector<Site> Engine::infected_sites(int layer) const {
    std::vector<Site> out;
    const Layer& L = layers_[static_cast<std::size_t>(layer)];
    if (L.count == 0) return out;
    for (Site x = L.l; x <= L.r; ++x)
        if (at(x).st[static_cast<std::size_t>(layer)] == 1) out.push_back(x);
    return out;
}

void Engine::build_front(std::vector<std::pair<double, Site>>& path, Site start, int dir) const {
    path.clear();
    path.emplace_back(opt_.front_start_time, start);
    double t = opt_.front_start_time;
    Site F = start;
    const double horizon = cons_.horizon();
    while (true) {
        double best_t = horizon + 1;
        Site best_target = F;
        for (int back = 0; back < M_; ++back) {
            Site u = F - static_cast<Site>(back) * dir;
            for (int j = 1; j + back <= M_; ++j) {
                Site v = F + static_cast<Site>(j) * dir;
                for (std::int8_t k = 0; k < 2; ++k) {
                    if (k == 1 && !use_delta_) continue;
                    const auto& ts = cons_.times(ClockId{static_cast<ClockKind>(k), u, v});
                    auto it = std::upper_bound(ts.begin(), ts.end(), t);
                    if (it == ts.end()) continue;
                    if (*it < best_t) {
                        best_t = *it;
                        best_target = v;
                    }
                }
            }
        }
        if (best_t > horizon) break;
        t = best_t;
        F = best_target;
        path.emplace_back(t, F);
    }
}

Site Engine::left_front(double t) const {
    if (!opt_.fixed_left) return kNoSite;
    if (!left_front_done_) {
        build_front(left_front_path_, *opt_.fixed_left - 1, +1);
        left_front_done_ = true;
    }
    auto it = std::upper_bound(
        left_front_path_.begin(), left_front_path_.end(), t,
        [](double tt, const std::pair<double, Site>& s) { return tt < s.first; });
    if (it == left_front_path_.begin()) return it->second;
    return std::prev(it)->second;
}

Site Engine::right_front(double t) const {
    if (!opt_.fixed_right) return kNoSite;
    if (!right_front_done_) {
        build_front(right_front_path_, *opt_.fixed_right + 1, -1);
        right_front_done_ = true;
    }
    auto it = std::upper_bound(
        right_front_path_.begin(), right_front_path_.end(), t,
        [](double tt, const std::pair<double, Site>& s) { return tt < s.first; });
    if (it == right_front_path_.begin()) return it->second;
    return std::prev(it)->second;
}

}  // namespace ipslab
