#ifndef IPSLAB_PERCOLATION_HPP
#define IPSLAB_PERCOLATION_HPP

#include <vector>

#include "ipslab/coupling.hpp"
#include "ipslab/stats.hpp"

namespace ipslab {

// Oriented site percolation on L = {(y,k): y+k even, k >= 0}. Row 0 carries
// the start set; openness constrains rows k >= 1 only. Bits are keyed by
// (seed, y, k), so fields with the same seed and increasing density are
// coupled through shared uniforms.
class PercField {
  public:
    enum class Generator {
        Independent,  // i.i.d. bits at density p
        Overlap,      // OR of two adjacent i.i.d. base bits: 1-dependent,
                      // density 1-(1-q)^2
    };

    PercField(Generator gen, double param, MasterSeed seed, std::size_t n_rows, Site half_width);

    // Fully scripted field for hand traces and exhaustive oracles: bit k-1
    // rows of row-major parity-packed bits.
    static PercField scripted(std::size_t n_rows, Site half_width,
                              std::vector<std::vector<bool>> open_rows);

    bool open(Site y, std::size_t k) const;
    bool in_lattice(Site y, std::size_t k) const {
        return ((y + static_cast<Site>(k)) & 1) == 0 && y >= -half_width_ && y <= half_width_;
    }
    std::size_t rows() const { return n_rows_; }
    Site half_width() const { return half_width_; }
    double density() const;  // analytic open density of the generator
    Generator generator() const { return gen_; }

  private:
    PercField() = default;
    Generator gen_ = Generator::Independent;
    double param_ = 0;
    MasterSeed seed_ = 0;
    std::size_t n_rows_ = 0;
    Site half_width_ = 0;
    bool scripted_ = false;
    std::vector<std::vector<bool>> bits_;  // [k][y + half_width], k >= 1

    std::size_t col(Site y) const { return static_cast<std::size_t>(y + half_width_); }
};

struct PercTrace {
    std::vector<std::vector<Site>> rows;  // occupied sites per row, ascending
    std::vector<Site> R, L;               // row extremes (kNoSite when empty)
    bool survived = false;                // reached the last row
};

// Row-by-row reachability from the start set A (row 0, even sites). The
// start hull plus the height must fit inside the field width.
PercTrace percolate(const PercField& field, const std::vector<Site>& A);

// On fields where the origin start reaches row k, asserts
// W_k^0 = W_k^{2Z} cap [L_k, R_k] for every such k, exactly.
ViolationReport restriction_check(double p, std::size_t n, std::size_t fields, MasterSeed seed);

struct GrowthPoint {
    std::size_t n = 0;
    std::size_t survivors = 0;
    stats::Proportion p_hat;  // P(R_n < a n | survival to row n)
};

struct GrowthReportPerc {
    double a = 0;
    std::vector<GrowthPoint> points;
    stats::LogLinearFit fit;  // log p_hat against n (survivor-conditional)
};

GrowthReportPerc rightmost_growth(double p, double a, const std::vector<std::size_t>& n_grid,
                                  std::size_t reps, MasterSeed seed);

struct DensityTailPoint {
    std::size_t n = 0;
    std::size_t y_sites = 0;
    stats::Proportion tail;  // P(occupied fraction of Y < rho, survival)
};

std::vector<DensityTailPoint> density_experiment(PercField::Generator gen, double param,
                                                 double rho, double beta,
                                                 const std::vector<std::size_t>& n_grid,
                                                 std::size_t reps, MasterSeed seed);

}  // namespace ipslab

#endif
