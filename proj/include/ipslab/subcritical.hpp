#ifndef IPSLAB_SUBCRITICAL_HPP
#define IPSLAB_SUBCRITICAL_HPP

#include "ipslab/process.hpp"
#include "ipslab/stats.hpp"

namespace ipslab {

struct DecayLevel {
    double x = 0;  // n (sites) or t (time)
    stats::Proportion p_hat;
};

struct DecayFit {
    std::vector<DecayLevel> levels;
    stats::LogLinearFit fit;
};

// P(the epidemic ever touches +-n) for n = 1..n_max, with a weighted
// log-linear fit of the decay.
DecayFit range_decay(const ProcessParams& p, Site n_max, std::size_t reps, MasterSeed seed);

// Survival curve P(I_t nonempty) over t_grid; the log-linear fit uses the
// tail half of the grid.
DecayFit lifetime_decay(const ProcessParams& p, const std::vector<double>& t_grid,
                        std::size_t reps, MasterSeed seed);

struct ContainmentPoint {
    Site N = 0;
    stats::Proportion eps_hat;
};

struct ContainmentReport {
    std::vector<ContainmentPoint> points;
    double S = 0;                    // extinction horizon used by the surrogate
    std::size_t exact_violations = 0;  // contained-but-alive-at-S replicas
    double min_ci99_lower = 0;       // min over the grid of the 99% lower bound
    stats::KendallTrend trend;       // noise-aware downward-trend test over N
};

// P(started from [-N,N] fully infected, the epidemic never leaves [-N,N] and
// is extinct by S), per N. S <= 0 selects the horizon from a pilot run.
ContainmentReport containment_probability(const std::vector<Site>& N_grid,
                                          const ProcessParams& p, std::size_t reps,
                                          MasterSeed seed, double S = 0);

}  // namespace ipslab

#endif
