#ifndef IPSLAB_PROCESS_HPP
#define IPSLAB_PROCESS_HPP

#include "ipslab/configuration.hpp"
#include "ipslab/engine.hpp"
#include "ipslab/trajectory.hpp"

namespace ipslab {

// Exact realization of the three-state process on the given construction.
// Lambda arrows trigger both first infections and reinfections, delta arrows
// only the restricted transition; recovery marks set 1 -> 0.
Trajectory evolve_three_state(const Configuration& eta, const ProcessParams& p,
                              const Construction& c, double T,
                              const std::vector<double>& snapshot_times = {});

// Set-valued process started from A, moving along both arrow types.
Trajectory evolve_contact(const std::set<Site>& A, double mu, const Construction& c, double T,
                          const std::vector<double>& snapshot_times = {});

// Contact process from a half-line start (occupied on (-inf, y0]); windowed
// on the left with a certified truncation buffer sized for duration T.
Trajectory evolve_contact_halfline(Site y0, double mu, const Construction& c, double T);

// Symmetric range-M contact dynamics (requires lambda == mu when M > 1).
Trajectory evolve_range_M(const Configuration& eta, const ProcessParams& p, const Construction& c,
                          double T);

// mu = 0 cluster of w: sites reachable through arrows that beat the source's
// recovery clock, expanded in time order. Equals the ever-infected set of
// the mu = 0 process driven by the same clocks.
std::set<Site> forest_fire_cluster(Site w, double lambda, const Construction& c);

}  // namespace ipslab

#endif
