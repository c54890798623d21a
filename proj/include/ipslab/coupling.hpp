#ifndef IPSLAB_COUPLING_HPP
#define IPSLAB_COUPLING_HPP

#include <string>

#include "ipslab/process.hpp"
#include "ipslab/stats.hpp"

namespace ipslab {

struct Violation {
    double time = 0;
    Site site = 0;
    std::string detail;
};

struct ViolationReport {
    std::size_t total_checks = 0;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    void merge(const ViolationReport& other) {
        total_checks += other.total_checks;
        violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    }
    void note(double t, Site x, std::string detail) {
        if (violations.size() < 100) violations.push_back({t, x, std::move(detail)});
        else violations.push_back({t, x, ""});
    }
};

struct CoupledTrajectories {
    std::vector<Trajectory> trajectories;
    MasterSeed shared_seed = 0;
};

// Evolve several initial configurations on one shared construction. When
// order_report is given, component-wise order between every ordered pair of
// initial configurations is asserted at every event (exact, mu >= lambda).
CoupledTrajectories co_evolve_shared(const std::vector<Configuration>& etas,
                                     const ProcessParams& p, const Construction& c, double T,
                                     ViolationReport* order_report = nullptr);

// Couples the standard start with a half-line start and asserts that their
// rightmost infected sites agree whenever the standard process is alive,
// together with the stronger sitewise statement right of the leftmost.
struct RightmostCheck {
    Trajectory standard;
    Trajectory half_line;
    ViolationReport report;
};
RightmostCheck assert_rightmost_identity(const ProcessParams& p, const Construction& c, double T);

// Couples the standard start with the all-occupied contact process and
// asserts I_t = xi_t^Z intersected with [l_t, r_t] whenever I_t is nonempty.
// The all-occupied process is windowed; a certificate failure raises
// width_certificate_error instead of reporting an unsound comparison.
struct SandwichCheck {
    Trajectory standard;
    ViolationReport report;
};
SandwichCheck assert_sandwich(const ProcessParams& p, const Construction& c, double T,
                              double width_factor = 2.0);

// Launches the restart process from the single site k at each hitting time
// tau_k of the rightmost edge and asserts domination by the standard process.
ViolationReport check_restart_domination(const ProcessParams& p, const Construction& c, double T);

// Joint chain of a lower (lambda, mu) and an upper (lambda', mu') process,
// simulated from its transition rate table with a dedicated generator.
struct OrderedCouplingResult {
    ViolationReport order;
    std::size_t events = 0;
    // State of both marginals at the end of the run, infected sites only.
    std::set<Site> lower_infected;
    std::set<Site> upper_infected;
    int lower_state_origin = -1;
    int upper_state_origin = -1;
};
OrderedCouplingResult co_evolve_ordered(const Configuration& eta, const Configuration& eta2,
                                        const ProcessParams& p, const ProcessParams& p2,
                                        MasterSeed seed, double T);

// P(both sites infected at t) for the two-site (lambda, 0) process started
// from one seed; continuous at lambda = 1.
double two_site_exact(double lambda, double t);

struct DualityResult {
    stats::Proportion p1;  // P(xi_t^A hits B)
    stats::Proportion p2;  // P(xi_t^B hits A)
    double z = 0;
};
DualityResult check_duality(const std::set<Site>& A, const std::set<Site>& B, double mu, double t,
                            std::size_t reps, MasterSeed seed);

}  // namespace ipslab

#endif
