#ifndef IPSLAB_ENGINE_HPP
#define IPSLAB_ENGINE_HPP

#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "ipslab/configuration.hpp"
#include "ipslab/construction.hpp"

namespace ipslab {

enum class LayerKind {
    ThreeState,         // -1/0/1 dynamics driven by the stream decomposition
    Contact,            // set-valued process, both arrow types infect
    ContactLambdaOnly,  // set-valued process moving along lambda arrows only
};

constexpr Site kNoSite = std::numeric_limits<Site>::min();

// Width of the truncation buffer needed so that the worst-case influence
// front from a cut boundary stays clear of observables drifting toward it at
// most drift_factor times the front speed, up to z standard deviations.
Site certified_width(const ProcessParams& p, double duration, double z = 8.0,
                     double drift_factor = 1.0);

// Event-driven co-evolution of several processes on one shared Construction.
// The lattice is materialized over a window that grows on demand on free
// sides; a side may instead be fixed (truncated). For fixed sides the engine
// computes the worst-case contamination front from the boundary, so callers
// can certify that truncation never reached what they measured.
class Engine {
  public:
    struct Options {
        std::optional<Site> fixed_left;
        std::optional<Site> fixed_right;
        // Contamination from a cut boundary is tracked from this time on
        // (the time the windowed processes of interest are launched).
        double front_start_time = 0;
    };

    struct LayerInit {
        LayerKind kind = LayerKind::ThreeState;
        Configuration config;
        bool track_ever = false;
    };

    // Called after each processed mark; bit l of changed_mask is set when
    // layer l changed state at the mark.
    using Observer = std::function<void(Engine&, const EventMark&, std::uint64_t changed_mask)>;

    explicit Engine(const Construction& c) : Engine(c, Options()) {}
    Engine(const Construction& c, Options opt);

    int add_layer(const LayerInit& init);  // joins at the current time
    void set_observer(Observer obs) { observer_ = std::move(obs); }

    void run_until(double t);

    double now() const { return now_; }
    const Construction& construction() const { return cons_; }
    std::size_t layer_count() const { return layers_.size(); }

    int state(int layer, Site x) const;
    Site rightmost(int layer) const { return layers_[static_cast<std::size_t>(layer)].r; }
    Site leftmost(int layer) const { return layers_[static_cast<std::size_t>(layer)].l; }
    std::size_t infected_count(int layer) const {
        return layers_[static_cast<std::size_t>(layer)].count;
    }
    bool alive(int layer) const { return layers_[static_cast<std::size_t>(layer)].count > 0; }
    std::optional<double> died_at(int layer) const {
        return layers_[static_cast<std::size_t>(layer)].died_at;
    }
    Site ever_min(int layer) const { return layers_[static_cast<std::size_t>(layer)].ever_min; }
    Site ever_max(int layer) const { return layers_[static_cast<std::size_t>(layer)].ever_max; }
    const std::set<Site>& ever_set(int layer) const;
    std::vector<Site> infected_sites(int layer) const;

    Site window_left() const { return base_; }
    Site window_right() const { return base_ + static_cast<Site>(sites_.size()) - 1; }

    // Rightmost site whose windowed state could differ from the untruncated
    // process at time t (worst-case arrow closure from the left boundary);
    // kNoSite when the left side is not truncated. right_front mirrors it.
    Site left_front(double t) const;
    Site right_front(double t) const;

  private:
    struct ClockRec {
        const std::vector<double>* times = nullptr;
        std::uint32_t cursor = 0;
        bool pending = false;
    };

    struct SiteData {
        std::vector<std::int8_t> st;
        int refcount = 0;
        ClockRec recovery;
        std::vector<ClockRec> arrows;  // lambda block then delta block, 2M each
    };

    struct Layer {
        LayerKind kind;
        std::size_t count = 0;
        Site r = kNoSite;
        Site l = kNoSite;
        Site ever_min = kNoSite;
        Site ever_max = kNoSite;
        std::optional<double> died_at;
        bool track_ever = false;
        std::set<Site> ever;
    };

    struct Ev {
        double t;
        std::int8_t kind;
        Site src;
        Site tgt;
        friend bool operator>(const Ev& a, const Ev& b) {
            if (a.t != b.t) return a.t > b.t;
            if (a.kind != b.kind) return a.kind > b.kind;
            if (a.src != b.src) return a.src > b.src;
            return a.tgt > b.tgt;
        }
    };

    const Construction& cons_;
    Options opt_;
    double now_ = 0;
    Site base_ = 0;
    std::vector<SiteData> sites_;
    std::vector<Layer> layers_;
    std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> heap_;
    Observer observer_;
    int M_;
    bool use_delta_;

    mutable std::vector<std::pair<double, Site>> left_front_path_;
    mutable std::vector<std::pair<double, Site>> right_front_path_;
    mutable bool left_front_done_ = false;
    mutable bool right_front_done_ = false;

    bool in_window(Site x) const {
        return x >= base_ && x < base_ + static_cast<Site>(sites_.size());
    }
    SiteData& at(Site x) { return sites_[static_cast<std::size_t>(x - base_)]; }
    const SiteData& at(Site x) const { return sites_[static_cast<std::size_t>(x - base_)]; }
    std::int8_t quiescent(std::size_t layer) const {
        return layers_[layer].kind == LayerKind::ThreeState ? -1 : 0;
    }

    int arrow_slot(std::int8_t kind, Site d) const;
    void ensure_window(Site lo, Site hi);
    void activate_site(Site x, double t);
    void schedule_skip(Site x, ClockRec& cr, std::int8_t kind, Site d, double after);
    void schedule_cursor(Site x, ClockRec& cr, std::int8_t kind, Site d);
    void infect(std::size_t layer_idx, Site y, double t, std::uint64_t& mask);
    void recover_bookkeeping(std::size_t layer_idx, Site x, double t);
    void apply(const Ev& e);
    void build_front(std::vector<std::pair<double, Site>>& path, Site start, int dir) const;
};

}  // namespace ipslab

#endif
