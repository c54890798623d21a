#include "ipslab/percolation.hpp"

#include <algorithm>
#include <cmath>

#include "ipslab/errors.hpp"
#include "ipslab/rng.hpp"

namespace ipslab {

PercField::PercField(Generator gen, double param, MasterSeed seed, std::size_t n_rows,
                     Site half_width)
    : gen_(gen), param_(param), seed_(seed), n_rows_(n_rows), half_width_(half_width) {
    if (param < 0 || param > 1) throw parameter_error("PercField: density outside [0,1]");
    if (half_width < 1) throw parameter_error("PercField: half width must be >= 1");
    bits_.resize(n_rows_ + 1);
    auto site_uniform = [&](std::uint64_t domain, Site y, std::size_t k) {
        return CounterStream(derive_key(seed_, domain, zigzag(y), k)).uniform(0);
    };
    for (std::size_t k = 1; k <= n_rows_; ++k) {
        bits_[k].assign(static_cast<std::size_t>(2 * half_width_ + 1), false);
        for (Site y = -half_width_; y <= half_width_; ++y) {
            if (!in_lattice(y, k)) continue;
            bool b;
            if (gen_ == Generator::Independent) {
                b = site_uniform(rng_domain::perc_site, y, k) < param_;
            } else {
                // Two-neighbour OR over an i.i.d. base field on the
                // complementary parity: genuinely 1-dependent within rows.
                b = site_uniform(rng_domain::perc_base, y - 1, k) < param_ ||
                    site_uniform(rng_domain::perc_base, y + 1, k) < param_;
            }
            bits_[k][col(y)] = b;
        }
    }
}

PercField PercField::scripted(std::size_t n_rows, Site half_width,
                              std::vector<std::vector<bool>> open_rows) {
    if (open_rows.size() != n_rows + 1)
        throw parameter_error("PercField::scripted: need one bit row per lattice row");
    for (const auto& row : open_rows)
        if (row.size() != static_cast<std::size_t>(2 * half_width + 1))
            throw parameter_error("PercField::scripted: row width mismatch");
    PercField f;
    f.scripted_ = true;
    f.n_rows_ = n_rows;
    f.half_width_ = half_width;
    f.bits_ = std::move(open_rows);
    return f;
}

bool PercField::open(Site y, std::size_t k) const {
    if (k < 1 || k > n_rows_ || !in_lattice(y, k)) return false;
    return bits_[k][col(y)];
}

double PercField::density() const {
    if (gen_ == Generator::Independent) return param_;
    return 1.0 - (1.0 - param_) * (1.0 - param_);
}

PercTrace percolate(const PercField& field, const std::vector<Site>& A) {
    PercTrace out;
    out.rows.resize(field.rows() + 1);
    out.R.assign(field.rows() + 1, kNoSite);
    out.L.assign(field.rows() + 1, kNoSite);
    if (A.empty()) return out;
    std::vector<Site> start = A;
    std::sort(start.begin(), start.end());
    start.erase(std::unique(start.begin(), start.end()), start.end());
    for (Site y : start) {
        if ((y & 1) != 0) throw parameter_error("percolate: start sites must be even");
        if (y - static_cast<Site>(field.rows()) < -field.half_width() ||
            y + static_cast<Site>(field.rows()) > field.half_width())
            throw width_certificate_error("percolate: start hull plus height exceeds the field");
    }
    out.rows[0] = start;
    out.L[0] = start.front();
    out.R[0] = start.back();
    std::vector<Site> cur = start;
    for (std::size_t k = 1; k <= field.rows() && !cur.empty(); ++k) {
        // cur is sorted with gaps >= 2, so candidates arrive nondecreasing.
        std::vector<Site> next;
        for (Site parent : cur)
            for (Site y : {parent - 1, parent + 1}) {
                if (!next.empty() && next.back() >= y) continue;
                if (field.open(y, k)) next.push_back(y);
            }
        out.rows[k] = next;
        if (!next.empty()) {
            out.L[k] = next.front();
            out.R[k] = next.back();
        }
        cur = std::move(next);
    }
    out.survived = !out.rows[field.rows()].empty();
    return out;
}

ViolationReport restriction_check(double p, std::size_t n, std::size_t fields, MasterSeed seed) {
    ViolationReport report;
    const Site hw = static_cast<Site>(2 * n);
    std::vector<Site> full;
    const Site even_n = static_cast<Site>(n) - (static_cast<Site>(n) & 1);
    for (Site y = -even_n; y <= even_n; y += 2) full.push_back(y);
    for (std::size_t f = 0; f < fields; ++f) {
        PercField field(PercField::Generator::Independent, p,
                        derive_key(seed, rng_domain::generic, f), n, hw);
        auto origin = percolate(field, {0});
        auto all = percolate(field, full);
        for (std::size_t k = 0; k <= n; ++k) {
            if (origin.rows[k].empty()) break;  // identity is conditioned on survival
            report.total_checks += 1;
            std::vector<Site> restricted;
            for (Site y : all.rows[k])
                if (y >= origin.L[k] && y <= origin.R[k]) restricted.push_back(y);
            if (restricted != origin.rows[k])
                report.note(static_cast<double>(k), origin.L[k], "restriction identity broken");
        }
    }
    return report;
}

GrowthReportPerc rightmost_growth(double p, double a, const std::vector<std::size_t>& n_grid,
                                  std::size_t reps, MasterSeed seed) {
    GrowthReportPerc out;
    out.a = a;
    std::vector<stats::CountPoint> pts;
    for (std::size_t n : n_grid) {
        std::size_t survived = 0, slow = 0;
        for (std::size_t i = 0; i < reps; ++i) {
            PercField field(PercField::Generator::Independent, p,
                            derive_key(seed, rng_domain::generic, n, i), n,
                            static_cast<Site>(n + 2));
            auto tr = percolate(field, {0});
            if (!tr.survived) continue;
            survived += 1;
            slow += static_cast<double>(tr.R[n]) < a * static_cast<double>(n);
        }
        GrowthPoint pt;
        pt.n = n;
        pt.survivors = survived;
        pt.p_hat = stats::proportion(slow, survived);
        out.points.push_back(pt);
        pts.push_back({static_cast<double>(n), slow, survived});
    }
    if (pts.size() >= 3) out.fit = stats::fit_log_linear(pts);
    return out;
}

std::vector<DensityTailPoint> density_experiment(PercField::Generator gen, double param,
                                                 double rho, double beta,
                                                 const std::vector<std::size_t>& n_grid,
                                                 std::size_t reps, MasterSeed seed) {
    if (rho < 0 || rho > 1 || beta <= 0 || beta > 1)
        throw parameter_error("density_experiment: rho in [0,1], beta in (0,1]");
    std::vector<DensityTailPoint> out;
    for (std::size_t n : n_grid) {
        std::vector<Site> Y;
        Site b = static_cast<Site>(std::floor(beta * static_cast<double>(n)));
        for (Site y = -b; y <= b; ++y)
            if (((y + static_cast<Site>(n)) & 1) == 0) Y.push_back(y);
        std::size_t low = 0;
        for (std::size_t i = 0; i < reps; ++i) {
            PercField field(gen, param, derive_key(seed, rng_domain::generic, n, i), n,
                            static_cast<Site>(n + 2));
            auto tr = percolate(field, {0});
            if (!tr.survived) continue;
            std::size_t hits = 0;
            for (Site y : Y)
                hits += std::binary_search(tr.rows[n].begin(), tr.rows[n].end(), y);
            if (static_cast<double>(hits) < rho * static_cast<double>(Y.size())) low += 1;
        }
        DensityTailPoint pt;
        pt.n = n;
        pt.y_sites = Y.size();
        pt.tail = stats::proportion(low, reps);
        out.push_back(pt);
    }
    return out;
}

}  // namespace ipslab
