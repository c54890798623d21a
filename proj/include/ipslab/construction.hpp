#ifndef IPSLAB_CONSTRUCTION_HPP
#define IPSLAB_CONSTRUCTION_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_map>
#include <vector>

#include "ipslab/rng.hpp"

namespace ipslab {

using Site = long long;

// A master seed fully determines every clock stream downstream of it.
using MasterSeed = std::uint64_t;

enum class ClockKind : int {
    LambdaArrow = 0,  // triggers both first infections and reinfections
    DeltaArrow = 1,   // triggers only the restricted transition
    Recovery = 2,
};

struct ClockId {
    ClockKind kind = ClockKind::Recovery;
    Site source = 0;
    Site target = 0;  // unused for Recovery

    friend bool operator==(const ClockId&, const ClockId&) = default;
    friend auto operator<=>(const ClockId&, const ClockId&) = default;
};

struct EventMark {
    double time = 0;
    ClockId clock;
    std::size_t index = 0;  // n-th event of its clock, 1-based

    // Global tie-break: (time, kind, source, target).
    friend bool operator<(const EventMark& a, const EventMark& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.clock < b.clock;
    }
};

struct ProcessParams {
    double lambda = 1;  // first-infection rate
    double mu = 1;      // reinfection rate
    int range = 1;      // arrows reach sites at distance <= range

    double both_rate() const { return lambda < mu ? lambda : mu; }
    double delta_rate() const { return lambda < mu ? mu - lambda : lambda - mu; }
    // Which transition the delta stream triggers.
    bool delta_reinfects() const { return mu >= lambda; }
    // The coupled set-valued process moves along both arrow types.
    double contact_rate() const { return lambda > mu ? lambda : mu; }
};

// One realization of the whole field of Poisson clocks, horizon-bounded.
// Streams are derived on demand from the seed and memoized; an override table
// allows fully scripted realizations for hand-traced tests (unspecified
// clocks are then empty).
class Construction {
  public:
    Construction(MasterSeed seed, ProcessParams p, double horizon);

    static Construction scripted(ProcessParams p, double horizon,
                                 std::map<ClockId, std::vector<double>> clocks);

    const ProcessParams& params() const { return params_; }
    double horizon() const { return horizon_; }
    MasterSeed seed() const { return seed_; }
    int range() const { return params_.range; }
    bool is_scripted() const { return scripted_; }

    double rate_of(ClockKind kind) const;

    // All event times of the clock in (0, horizon], sorted ascending.
    const std::vector<double>& times(const ClockId& id) const;

    // Marks whose source or target lies in [lo, hi], times in (t0, t1],
    // sorted by the global tie-break order.
    std::vector<EventMark> merged_events(Site lo, Site hi, double t0, double t1) const;

    // Oriented-path reachability from a finite set: {y : A x s -> y x t}.
    enum class Arrows { Both, LambdaOnly };
    std::set<Site> reachable(const std::set<Site>& from, double s, double t,
                             Arrows arrows = Arrows::Both) const;

  private:
    MasterSeed seed_ = 0;
    ProcessParams params_;
    double horizon_ = 0;
    bool scripted_ = false;
    std::map<ClockId, std::vector<double>> overrides_;
    mutable std::unordered_map<std::uint64_t, std::unique_ptr<std::vector<double>>> cache_;
    std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();
};

// Pure function of (seed, id): all event times of the clock in (0, t_max].
std::vector<double> stream_times(MasterSeed seed, const ClockId& id, double rate, double t_max);

}  // namespace ipslab

#endif
