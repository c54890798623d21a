#ifndef IPSLAB_SPEEDCOMP_HPP
#define IPSLAB_SPEEDCOMP_HPP

#include "ipslab/coupling.hpp"

namespace ipslab {

// Competition bookkeeping along the rightmost edge of the half-line process,
// coupled with the half-line contact process on the same construction. Each
// time the edge sits at its running maximum, the next arrow or recovery mark
// at the edge resolves a three-way race.
struct CompetitionTrace {
    double horizon = 0;
    std::size_t competitions = 0;   // N_t
    std::size_t delta_wins = 0;     // F_t, cascade hand-offs
    std::size_t lambda_wins = 0;    // running-max advances
    std::size_t recovery_wins = 0;  // D_t
    Site xbar_final = 0;            // running max of the edge at the horizon
    Site rbar_final = 0;
    Site contact_edge_final = 0;    // R_t of the coupled half-line contact process
    std::vector<double> upsilon_times;
    std::vector<std::pair<double, Site>> rbar_path;
    std::vector<std::pair<double, Site>> contact_edge_path;
    ViolationReport handoff;  // cascade hand-off identity, when checked
};

CompetitionTrace competition_trace(double lambda, double mu, MasterSeed seed, double T,
                                   bool check_handoffs = false);

struct RatioReport {
    bool degenerate = false;  // lambda == mu: both counters are exactly zero
    double f_mean = 0, x_mean = 0;
    double ratio = 0;
    double se = 0;
    double target = 0;  // (mu - lambda) / lambda
    bool pass = false;
};

// E(F_t) = (mu-lambda)/lambda E(xbar_t), tested as a ratio of sample means.
RatioReport verify_fracpunch(double lambda, double mu, double T, std::size_t reps,
                             MasterSeed seed);

struct GapReport {
    double lhs_mean = 0;  // mean (R_T - rbar_T)
    double rhs_mean = 0;  // mean F_T
    double diff_se = 0;   // paired SE of the difference
    bool pass = false;    // lhs - rhs >= -3 se
};

GapReport verify_gap(double lambda, double mu, double T, std::size_t reps, MasterSeed seed);

struct SpeedIneqReport {
    double alpha_hat = 0, alpha_se = 0;  // rbar_T / T
    double beta_hat = 0, beta_se = 0;    // R_T / T of the contact process
    double bound = 0;                    // (lambda/mu) beta_hat
    double slack_z = 0;                  // (bound - alpha) / paired se
    bool pass = false;
};

SpeedIneqReport speed_inequality(double lambda, double mu, double T, std::size_t reps,
                                 MasterSeed seed);

struct SubaddReport {
    std::size_t replicas = 0;
    std::size_t violations = 0;
    Site max_slack = 0;  // max of xbar_{0,s} + xbar_{s,u} - xbar_{0,u}
};

// Pathwise subadditivity of the running maximum across a restart at time s.
SubaddReport subadditivity_check(double lambda, double mu, double s, double u, std::size_t reps,
                                 MasterSeed seed);

}  // namespace ipslab

#endif
