#ifndef IPSLAB_STATS_HPP
#define IPSLAB_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace ipslab::stats {

struct MeanSe {
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

struct Proportion {
    double p_hat = 0;
    double se = 0;
    std::size_t successes = 0;
    std::size_t n = 0;
    // Normal-approximation CI bounds at the given z; clamped to [0,1].
    double lo(double z) const;
    double hi(double z) const;
};

Proportion proportion(std::size_t successes, std::size_t n);

// Pooled-variance two-proportion z statistic.
double two_proportion_z(const Proportion& a, const Proportion& b);

double normal_cdf(double x);

// Kolmogorov distribution survival Q(z) = P(D* > z).
double kolmogorov_q(double z);

struct KsResult {
    double d = 0;
    double p = 1;
};

// Classical two-sample KS with asymptotic p-value (finite-n corrected argument).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS against U(0,1); used to calibrate p-value uniformity.
KsResult ks_uniform(std::span<const double> xs);

struct LogLinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    double slope_se = 0;
    std::size_t n_used = 0;
};

struct CountPoint {
    double x = 0;
    std::size_t successes = 0;
    std::size_t trials = 0;
};

// Weighted least squares of log p_hat on x with binomial-variance weights.
// Zero counts are replaced by the continuity value 0.5/(trials+1) and enter
// with the correspondingly small weight.
LogLinearFit fit_log_linear(std::span<const CountPoint> points);

// Plain weighted least squares on (x, y, weight) triples, same output shape.
LogLinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> w);

// Upper regularized incomplete gamma Q(a, x); chi-square survival is
// Q(k/2, x/2).
double gamma_q(double a, double x);

double chi_square_sf(double x, int dof);

// Pearson chi-square independence test on an r x c contingency table
// (row-major). Returns (statistic, p).
struct ChiSquare {
    double statistic = 0;
    double p = 1;
    int dof = 0;
};
ChiSquare chi_square_independence(const std::vector<std::vector<double>>& table);

double lag1_autocorrelation(std::span<const double> xs);

// Noise-aware Kendall trend test for a short sequence of estimates with
// standard errors, ordered by the predictor. Pairs within `z_tie` combined
// standard errors count as ties; the one-sided p-value for a downward trend
// is computed by exact enumeration of predictor permutations (n <= 10).
struct KendallTrend {
    double tau = 0;
    double p_downward = 1;
    int significant_pairs = 0;
};
KendallTrend kendall_trend(std::span<const double> estimates, std::span<const double> ses,
                           double z_tie = 3.0);

}  // namespace ipslab::stats

#endif
