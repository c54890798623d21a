#include "ipslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ipslab/errors.hpp"

namespace ipslab::stats {

MeanSe mean_se(std::span<const double> xs) {
    MeanSe out;
    out.n = xs.size();
    if (out.n == 0) return out;
    double sum = 0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(out.n);
    if (out.n < 2) return out;
    double ss = 0;
    for (double x : xs) {
        double d = x - out.mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(out.n - 1);
    out.se = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

Proportion proportion(std::size_t successes, std::size_t n) {
    Proportion out;
    out.successes = successes;
    out.n = n;
    if (n == 0) return out;
    out.p_hat = static_cast<double>(successes) / static_cast<double>(n);
    out.se = std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(n));
    return out;
}

double Proportion::lo(double z) const { return std::max(0.0, p_hat - z * se); }
double Proportion::hi(double z) const { return std::min(1.0, p_hat + z * se); }

double two_proportion_z(const Proportion& a, const Proportion& b) {
    if (a.n == 0 || b.n == 0) throw insufficient_data("two_proportion_z: empty sample");
    double pooled = static_cast<double>(a.successes + b.successes) /
                    static_cast<double>(a.n + b.n);
    double se = std::sqrt(pooled * (1.0 - pooled) *
                          (1.0 / static_cast<double>(a.n) + 1.0 / static_cast<double>(b.n)));
    if (se == 0) return 0;
    return (a.p_hat - b.p_hat) / se;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_q(double z) {
    if (z <= 0) return 1.0;
    if (z < 0.2) return 1.0;
    // Two complementary series, switched where both converge fast.
    if (z < 1.18) {
        double v = std::exp(-M_PI * M_PI / (8 * z * z));
        double series = v + std::pow(v, 9) + std::pow(v, 25) + std::pow(v, 49);
        return 1.0 - std::sqrt(2 * M_PI) / z * series;
    }
    double v = std::exp(-2.0 * z * z);
    double q = 0;
    double sign = 1;
    for (int k = 1; k <= 8; ++k) {
        q += sign * std::pow(v, k * k);
        sign = -sign;
    }
    return std::clamp(2.0 * q, 0.0, 1.0);
}

namespace {

// Two-sample KS distance on sorted copies.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 5 || b.size() < 5)
        throw insufficient_data("ks_two_sample: need at least 5 points per sample");
    KsResult out;
    out.d = ks_distance(std::vector<double>(a.begin(), a.end()),
                        std::vector<double>(b.begin(), b.end()));
    double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                static_cast<double>(a.size() + b.size());
    double rt = std::sqrt(ne);
    // Stephens' finite-sample adjustment of the asymptotic argument.
    out.p = kolmogorov_q((rt + 0.12 + 0.11 / rt) * out.d);
    return out;
}

KsResult ks_uniform(std::span<const double> xs) {
    if (xs.size() < 5) throw insufficient_data("ks_uniform: need at least 5 points");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    double n = static_cast<double>(s.size());
    double d = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double f = std::clamp(s[i], 0.0, 1.0);
        d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - f));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    }
    KsResult out;
    out.d = d;
    double rt = std::sqrt(n);
    out.p = kolmogorov_q((rt + 0.12 + 0.11 / rt) * d);
    return out;
}

LogLinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 3)
        throw insufficient_data("weighted_least_squares: need >= 3 points");
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    if (sw <= 0) throw parameter_error("weighted_least_squares: nonpositive total weight");
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - xbar, dy = y[i] - ybar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if (sxx == 0) throw parameter_error("weighted_least_squares: degenerate design");
    LogLinearFit fit;
    fit.n_used = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ss_res = syy - fit.slope * sxy;
    fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    // Residual-scaled slope standard error; floor the dof at 1.
    double dof = std::max<double>(1.0, static_cast<double>(x.size()) - 2.0);
    double sigma2 = std::max(0.0, ss_res) / dof;
    fit.slope_se = std::sqrt(sigma2 / sxx);
    return fit;
}

LogLinearFit fit_log_linear(std::span<const CountPoint> points) {
    std::vector<double> xs, ys, ws;
    for (const auto& pt : points) {
        if (pt.trials == 0) continue;
        double n = static_cast<double>(pt.trials);
        double p = pt.successes == 0 ? 0.5 / (n + 1.0)
                                     : static_cast<double>(pt.successes) / n;
        p = std::min(p, 1.0 - 0.5 / (n + 1.0));
        // Var(log p_hat) ~ (1-p)/(n p) by the delta method.
        double var_log = (1.0 - p) / (n * p);
        xs.push_back(pt.x);
        ys.push_back(std::log(p));
        ws.push_back(1.0 / var_log);
    }
    if (xs.size() < 3) throw insufficient_data("fit_log_linear: need >= 3 usable points");
    return weighted_least_squares(xs, ys, ws);
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw parameter_error("gamma_q: bad arguments");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi_square_sf(double x, int dof) {
    if (dof <= 0) throw parameter_error("chi_square_sf: dof must be positive");
    if (x <= 0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquare chi_square_independence(const std::vector<std::vector<double>>& table) {
    std::size_t r = table.size();
    if (r < 2) throw insufficient_data("chi_square_independence: need >= 2 rows");
    std::size_t c = table[0].size();
    if (c < 2) throw insufficient_data("chi_square_independence: need >= 2 columns");
    std::vector<double> row(r, 0), col(c, 0);
    double total = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) throw parameter_error("chi_square_independence: ragged table");
        for (std::size_t j = 0; j < c; ++j) {
            row[i] += table[i][j];
            col[j] += table[i][j];
            total += table[i][j];
        }
    }
    if (total <= 0) throw insufficient_data("chi_square_independence: empty table");
    ChiSquare out;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double expected = row[i] * col[j] / total;
            if (expected <= 0) continue;
            double d = table[i][j] - expected;
            out.statistic += d * d / expected;
        }
    out.dof = static_cast<int>((r - 1) * (c - 1));
    out.p = chi_square_sf(out.statistic, out.dof);
    return out;
}

double lag1_autocorrelation(std::span<const double> xs) {
    if (xs.size() < 3) throw insufficient_data("lag1_autocorrelation: need >= 3 points");
    MeanSe m = mean_se(xs);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i] - m.mean;
        den += d * d;
        if (i + 1 < xs.size()) num += d * (xs[i + 1] - m.mean);
    }
    if (den == 0) return 0;
    return num / den;
}

KendallTrend kendall_trend(std::span<const double> estimates, std::span<const double> ses,
                           double z_tie) {
    std::size_t n = estimates.size();
    if (n != ses.size() || n < 3 || n > 10)
        throw parameter_error("kendall_trend: need 3..10 matched points");
    // Pairwise comparison of values, ties when the gap is within noise.
    auto cmp = [&](std::size_t i, std::size_t j) -> int {
        double gap = estimates[j] - estimates[i];
        double se = std::sqrt(ses[i] * ses[i] + ses[j] * ses[j]);
        if (gap > z_tie * se) return 1;
        if (gap < -z_tie * se) return -1;
        return 0;
    };
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto score = [&](const std::vector<std::size_t>& order) {
        int s = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += cmp(order[i], order[j]);
        return s;
    };
    int s_obs = score(idx);
    double total_pairs = static_cast<double>(n * (n - 1) / 2);
    KendallTrend out;
    out.tau = static_cast<double>(s_obs) / total_pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (cmp(i, j) != 0) ++out.significant_pairs;
    // Exact permutation distribution of the score.
    std::vector<std::size_t> perm = idx;
    std::sort(perm.begin(), perm.end());
    std::size_t at_most = 0, count = 0;
    do {
        ++count;
        if (score(perm) <= s_obs) ++at_most;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p_downward = static_cast<double>(at_most) / static_cast<double>(count);
    return out;
}

}  // namespace ipslab::stats
