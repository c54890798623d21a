#ifndef IPSLAB_REGENERATION_HPP
#define IPSLAB_REGENERATION_HPP

#include <string>

#include "ipslab/process.hpp"
#include "ipslab/stats.hpp"

namespace ipslab {

// One regeneration increment. The last record of a run may be censored; all
// others are complete.
struct RegenRecord {
    Site X = 0;          // spatial increment, >= 1 when complete
    double Psi = 0;      // temporal increment, > 0
    Site Mback = 0;      // backtrack depth below the break level, >= 0
    bool censored = false;
    std::size_t replica = 0;
};

std::vector<RegenRecord> complete_records(const std::vector<RegenRecord>& records);

// Walks the half-line process, restarts a single-site process at each
// candidate level, and accepts a break point when the restart is still alive
// S time units after launch. Emits one record per accepted point plus a
// censored sentinel for the in-progress tail.
std::vector<RegenRecord> find_break_points(const ProcessParams& p, MasterSeed seed, double T,
                                           double S);

// Same walk on an existing construction (horizon must cover T + S).
std::vector<RegenRecord> find_break_points(const Construction& cons, double T, double S);

struct SpeedEstimate {
    double alpha_hat = 0;
    double se = 0;
    std::size_t n_records = 0;
    double horizon_used = 0;
};

// Ratio-of-means speed estimator with a regenerative delta-method SE.
SpeedEstimate estimate_alpha(const std::vector<RegenRecord>& records);

// Regenerative CLT variance: E[(X - alpha Psi)^2] / E[Psi].
double estimate_sigma2(const std::vector<RegenRecord>& records, double alpha_hat);

struct NormalityReport {
    bool refused = false;
    std::string reason;
    std::size_t blocks = 0;
    double ks_d = 0;
    double ks_p = 0;
};

// KS test of standardized block sums of X - alpha Psi against the standard
// normal; refused on degenerate or insufficient data.
NormalityReport clt_diagnostic(const std::vector<RegenRecord>& records, double alpha_hat,
                               double sigma2_hat);

struct IidDiagnostics {
    std::size_t n = 0;
    stats::KsResult ks_halves_X;
    stats::KsResult ks_halves_Psi;
    double acf1_X = 0;
    double acf1_Psi = 0;
};

// First-half vs second-half KS plus lag-1 autocorrelations over the
// complete records in sequence order.
IidDiagnostics regen_iid_diagnostics(const std::vector<RegenRecord>& records);

struct DensityEstimate {
    double theta_hat = 0;
    double se = 0;
    std::size_t reps = 0;
    double left_half = 0, right_half = 0;   // spatial symmetry check
    double at_half_time = 0;                // stationarity check value
    bool stationary = true;
};

// Long-run occupancy of the all-occupied contact process, measured over the
// central window [-half_window, half_window] at time T.
DensityEstimate estimate_theta(double mu, Site half_window, double T, std::size_t reps,
                               MasterSeed seed);

struct SurvivalEstimate {
    double S = 0;
    stats::Proportion at_S;
    stats::Proportion at_2S;  // sensitivity of the survival surrogate
};

SurvivalEstimate estimate_beta(const ProcessParams& p, double S, std::size_t reps,
                               MasterSeed seed);

struct GrowthReport {
    bool skipped = false;
    double mean_growth = 0;  // mean |I_T| / T over surviving replicas
    double se_growth = 0;
    std::size_t survivors = 0;
    double alpha_hat = 0, alpha_se = 0;
    double theta_hat = 0, theta_se = 0;
    double predicted = 0;  // 2 alpha theta
    double predicted_se = 0;
    double rel_error = 0;
    bool pass = false;
};

GrowthReport growth_lln_check(const ProcessParams& p, double T, std::size_t reps,
                              MasterSeed seed);

struct CompleteConvReport {
    stats::Proportion lhs;      // P(I_t cap F = empty)
    stats::Proportion beta;     // survival surrogate at t
    stats::Proportion phi;      // void probability of the all-occupied process
    double rhs = 0;
    double rhs_se = 0;
    double diff_z = 0;
    bool pass = false;
};

CompleteConvReport check_complete_convergence(const ProcessParams& p, const std::set<Site>& F,
                                              double t, std::size_t reps, MasterSeed seed);

// Regeneration of the range-M contact process at points where the single-seed
// right edge controls the half-line right edge for S time units.
std::vector<RegenRecord> cse_regeneration(int M, double mu, MasterSeed seed, double T, double S);

struct CseCurve {
    std::vector<double> S_grid;
    std::vector<stats::Proportion> p_hat;  // P(R_u = r_u for all u <= S)
};

CseCurve estimate_cse_probability(int M, double mu, const std::vector<double>& S_grid,
                                  std::size_t reps, MasterSeed seed);

// First time in [0, S] at which the half-line right edge escapes the
// single-seed right edge from the origin; S + 1 when it holds throughout.
double cse_escape_time(int M, double mu, MasterSeed seed, double S);

CseCurve cse_curve_from_escapes(const std::vector<double>& escapes,
                                const std::vector<double>& S_grid);

}  // namespace ipslab

#endif
