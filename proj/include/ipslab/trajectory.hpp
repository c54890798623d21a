#ifndef IPSLAB_TRAJECTORY_HPP
#define IPSLAB_TRAJECTORY_HPP

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ipslab/construction.hpp"

namespace ipslab {

struct TrajectorySample {
    double time = 0;
    Site r = 0;  // kNoSite when the infected set is empty
    Site l = 0;
    std::size_t count = 0;
};

// Time-ordered summaries of one process realization, recorded at every event
// that changed its state. For half-line starts the leftmost site and the
// count refer to the materialized window.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::map<double, std::map<Site, int>> snapshots;
    std::optional<double> died_at;
    std::set<Site> ever_infected;  // tracked for finite-support starts

    const TrajectorySample& at_time(double t) const;
    Site r_at(double t) const { return at_time(t).r; }
    std::size_t count_at(double t) const { return at_time(t).count; }
    Site final_r() const { return samples.back().r; }
    bool alive_at(double t) const { return at_time(t).count > 0; }
};

}  // namespace ipslab

#endif
