#include "ipslab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "ipslab/coupling.hpp"
#include "ipslab/errors.hpp"
#include "ipslab/percolation.hpp"
#include "ipslab/regeneration.hpp"
#include "ipslab/speedcomp.hpp"
#include "ipslab/subcritical.hpp"

namespace ipslab {

const char* kVersion = "ips-lab 1.0.0";

double ExperimentConfig::get(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw usage_error("missing parameter: " + key);
    return it->second;
}

std::size_t ExperimentConfig::count(const std::string& key) const {
    double v = get(key);
    if (v < 0 || v != std::floor(v)) throw usage_error("parameter must be a count: " + key);
    return static_cast<std::size_t>(v);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config file: " + path);
    std::map<std::string, std::string> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            std::size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string flat = strip(line);
        if (flat.empty()) continue;
        auto eq = flat.find('=');
        if (eq == std::string::npos)
            throw usage_error("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = strip(flat.substr(0, eq));
        std::string value = strip(flat.substr(eq + 1));
        if (key.empty() || value.empty())
            throw usage_error("config line " + std::to_string(lineno) + ": empty key or value");
        raw[key] = value;
    }
    return raw;
}

namespace {

struct ParamSpec {
    double def = 0;
    double lo = -1e300;
    double hi = 1e300;
};

struct ExperimentDef {
    std::map<std::string, ParamSpec> schema;
    std::function<void(const ExperimentConfig&, ExperimentResult&)> run;
};

using Registry = std::map<std::string, ExperimentDef>;
const Registry& registry();

nlohmann::ordered_json estimate(double value, double se) {
    return nlohmann::ordered_json{{"value", value}, {"se", se}};
}

void add_flag(ExperimentResult& res, const std::string& name, bool ok) {
    res.summary["checks"][name] = ok;
    res.pass = res.pass && ok;
}

std::vector<CompetitionTrace> competition_traces(const ExperimentConfig& cfg, double lambda,
                                                 double mu, double T, std::size_t reps) {
    std::vector<CompetitionTrace> traces(reps);
    run_replicas(reps, cfg.workers, cfg.master_seed,
                 [&](std::size_t i, MasterSeed s) { traces[i] = competition_trace(lambda, mu, s, T); });
    return traces;
}

// ---------------------------------------------------------------- two-site

void run_two_site(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), t = cfg.get("t");
    std::size_t reps = cfg.count("reps");
    double exact = two_site_exact(lambda, t);

    std::vector<std::uint8_t> single(reps), both(reps);
    run_replicas(reps, cfg.workers, cfg.master_seed, [&](std::size_t i, MasterSeed s) {
        ProcessParams p{lambda, 0, 1};
        Construction c_single(derive_key(s, rng_domain::generic, 1), p, t);
        Engine e1(c_single);
        int l1 = e1.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
        e1.run_until(t);
        single[i] = e1.state(l1, 0) == 1 && e1.state(l1, 1) == 1;
        Construction c_both(derive_key(s, rng_domain::generic, 2), p, t);
        Engine e2(c_both);
        int l2 = e2.add_layer({LayerKind::ThreeState, Configuration::interval(0, 1), false});
        e2.run_until(t);
        both[i] = e2.state(l2, 0) == 1 && e2.state(l2, 1) == 1;
    });
    std::size_t hits = 0, hits_both = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        hits += single[i];
        hits_both += both[i];
    }
    auto mc = stats::proportion(hits, reps);
    auto mc_both = stats::proportion(hits_both, reps);

    res.summary["estimates"]["closed_form"] = exact;
    res.summary["estimates"]["mc_single_seed"] = estimate(mc.p_hat, mc.se);
    res.summary["estimates"]["mc_both_seeds"] = estimate(mc_both.p_hat, mc_both.se);
    res.summary["estimates"]["both_seeds_exact"] = std::exp(-2.0 * t);
    add_flag(res, "mc_matches_closed_form", std::fabs(mc.p_hat - exact) <= 3 * mc.se);
    bool witness = lambda > 1 && t > std::log(lambda) / (lambda - 1);
    res.summary["estimates"]["coupling_obstruction_expected"] = witness;
    if (witness) {
        add_flag(res, "single_seed_beats_both_seeds_analytically", exact > std::exp(-2.0 * t));
        add_flag(res, "mc_both_seeds_strictly_below", mc_both.p_hat + 3 * mc_both.se < exact);
    }

    Table tab{"two_site", {"lambda", "t", "reps", "mc_p11", "mc_se", "closed_form"}, {}};
    tab.rows.push_back({lambda, t, static_cast<double>(reps), mc.p_hat, mc.se, exact});
    res.tables.push_back(std::move(tab));
}

// ------------------------------------------------------------ couple-check

void run_couple_check(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), T = cfg.get("T");
    std::size_t reps = cfg.count("reps");
    ProcessParams p{lambda, mu, 1};

    struct Counts {
        std::size_t checks = 0, violations = 0;
    };
    std::vector<Counts> order(reps), rightmost(reps), sandwich(reps), domination(reps);
    run_replicas(reps, cfg.workers, cfg.master_seed, [&](std::size_t i, MasterSeed s) {
        {
            Construction c(derive_key(s, rng_domain::generic, 1), p, T);
            ViolationReport rep;
            co_evolve_shared({Configuration::standard(), Configuration::interval(-1, 1)}, p, c, T,
                             &rep);
            order[i] = {rep.total_checks, rep.violations.size()};
        }
        {
            Construction c(derive_key(s, rng_domain::generic, 2), p, T);
            auto chk = assert_rightmost_identity(p, c, T);
            rightmost[i] = {chk.report.total_checks, chk.report.violations.size()};
        }
        {
            Construction c(derive_key(s, rng_domain::generic, 3), p, T);
            auto chk = assert_sandwich(p, c, T);
            sandwich[i] = {chk.report.total_checks, chk.report.violations.size()};
        }
        {
            Construction c(derive_key(s, rng_domain::generic, 4), p, T);
            auto rep = check_restart_domination(p, c, T);
            domination[i] = {rep.total_checks, rep.violations.size()};
        }
    });

    Table tab{"pathwise_checks", {"check_id", "replicas", "total_checks", "violations"}, {}};
    auto summarize = [&](const char* name, const std::vector<Counts>& v, int id) {
        std::size_t checks = 0, bad = 0;
        for (const auto& c : v) {
            checks += c.checks;
            bad += c.violations;
        }
        res.summary["estimates"][name] =
            nlohmann::ordered_json{{"checks", checks}, {"violations", bad}};
        add_flag(res, std::string(name) + "_zero_violations", bad == 0);
        tab.rows.push_back({static_cast<double>(id), static_cast<double>(v.size()),
                            static_cast<double>(checks), static_cast<double>(bad)});
    };
    summarize("initial_order", order, 0);
    summarize("rightmost_identity", rightmost, 1);
    summarize("sandwich_identity", sandwich, 2);
    summarize("restart_domination", domination, 3);
    res.tables.push_back(std::move(tab));

    // Ordered rate-table coupling: order soundness plus one marginal check.
    std::size_t runs = cfg.count("ordered_runs");
    double l2 = cfg.get("lambda2"), m2 = cfg.get("mu2"), t_marginal = cfg.get("t_marginal");
    ProcessParams lo{lambda, mu, 1}, hi{l2, m2, 1};
    std::vector<std::size_t> bad_order(runs);
    run_replicas(runs, cfg.workers, derive_key(cfg.master_seed, rng_domain::generic, 10),
                 [&](std::size_t i, MasterSeed s) {
                     auto out = co_evolve_ordered(Configuration::standard(),
                                                  Configuration::standard(), lo, hi, s, T);
                     bad_order[i] = out.order.violations.size();
                 });
    std::size_t ordered_bad = 0;
    for (auto v : bad_order) ordered_bad += v;
    add_flag(res, "ordered_coupling_zero_violations", ordered_bad == 0);

    std::size_t marg_reps = cfg.count("marginal_reps");
    std::vector<std::uint8_t> joint(marg_reps), direct(marg_reps);
    run_replicas(marg_reps, cfg.workers, derive_key(cfg.master_seed, rng_domain::generic, 11),
                 [&](std::size_t i, MasterSeed s) {
                     auto out = co_evolve_ordered(Configuration::standard(),
                                                  Configuration::standard(), lo, hi,
                                                  derive_key(s, rng_domain::generic, 1),
                                                  t_marginal);
                     joint[i] = out.lower_state_origin == 1;
                     Construction c(derive_key(s, rng_domain::generic, 2), lo, t_marginal);
                     Engine eng(c);
                     int lay =
                         eng.add_layer({LayerKind::ThreeState, Configuration::standard(), false});
                     eng.run_until(t_marginal);
                     direct[i] = eng.state(lay, 0) == 1;
                 });
    std::size_t hits_j = 0, hits_d = 0;
    for (std::size_t i = 0; i < marg_reps; ++i) {
        hits_j += joint[i];
        hits_d += direct[i];
    }
    auto pj = stats::proportion(hits_j, marg_reps);
    auto pd = stats::proportion(hits_d, marg_reps);
    double z = stats::two_proportion_z(pj, pd);
    res.summary["estimates"]["ordered_marginal"] = estimate(pj.p_hat, pj.se);
    res.summary["estimates"]["direct_marginal"] = estimate(pd.p_hat, pd.se);
    res.summary["estimates"]["marginal_z"] = z;
    add_flag(res, "ordered_marginal_within_3se", std::fabs(z) <= 3.0);
}

// ------------------------------------------------------------- breakpoints

void run_breakpoints(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), T = cfg.get("T"), S = cfg.get("S");
    std::size_t walks = cfg.count("walks");
    ProcessParams p{lambda, mu, 1};

    std::vector<std::vector<RegenRecord>> per_walk(walks);
    run_replicas(walks, cfg.workers, cfg.master_seed, [&](std::size_t i, MasterSeed s) {
        per_walk[i] = find_break_points(p, s, T, S);
    });
    std::vector<RegenRecord> records;
    Table rec_tab{"records", {"replica", "idx", "X", "Psi", "Mback", "censored"}, {}};
    for (std::size_t w = 0; w < walks; ++w) {
        std::size_t idx = 0;
        for (auto r : per_walk[w]) {
            r.replica = w;
            rec_tab.rows.push_back({static_cast<double>(w), static_cast<double>(idx++),
                                    static_cast<double>(r.X), r.Psi,
                                    static_cast<double>(r.Mback), r.censored ? 1.0 : 0.0});
            if (!r.censored) records.push_back(r);
        }
    }
    res.tables.push_back(std::move(rec_tab));
    res.summary["estimates"]["complete_records"] = records.size();
    add_flag(res, "enough_records", records.size() >= cfg.count("min_records"));
    if (records.size() < 30) return;

    auto alpha = estimate_alpha(records);
    double sigma2 = estimate_sigma2(records, alpha.alpha_hat);
    auto iid = regen_iid_diagnostics(records);
    auto clt = clt_diagnostic(records, alpha.alpha_hat, sigma2);
    res.summary["estimates"]["alpha_hat"] = estimate(alpha.alpha_hat, alpha.se);
    res.summary["estimates"]["sigma2_hat"] = sigma2;
    res.summary["estimates"]["ks_halves_X_p"] = iid.ks_halves_X.p;
    res.summary["estimates"]["ks_halves_Psi_p"] = iid.ks_halves_Psi.p;
    res.summary["estimates"]["acf1_X"] = iid.acf1_X;
    res.summary["estimates"]["acf1_Psi"] = iid.acf1_Psi;
    add_flag(res, "ks_halves_X", iid.ks_halves_X.p > 0.01);
    add_flag(res, "ks_halves_Psi", iid.ks_halves_Psi.p > 0.01);
    double acf_bound = 3.0 / std::sqrt(static_cast<double>(iid.n));
    add_flag(res, "acf1_small",
             std::fabs(iid.acf1_X) < acf_bound && std::fabs(iid.acf1_Psi) < acf_bound);
    add_flag(res, "sigma2_positive", sigma2 > 0);
    if (!clt.refused) {
        res.summary["estimates"]["clt_ks_p"] = clt.ks_p;
        add_flag(res, "clt_normal_blocks", clt.ks_p > 0.01);
    }

    // Direct estimator comparison over surviving long runs.
    double direct_T = cfg.get("direct_T");
    std::size_t direct_reps = cfg.count("direct_reps");
    std::vector<double> slopes(direct_reps, -1);
    run_replicas(direct_reps, cfg.workers,
                 derive_key(cfg.master_seed, rng_domain::generic, 20),
                 [&](std::size_t i, MasterSeed s) {
                     Construction c(s, p, direct_T);
                     auto traj = evolve_three_state(Configuration::standard(), p, c, direct_T);
                     if (!traj.died_at)
                         slopes[i] = static_cast<double>(traj.samples.back().r) / direct_T;
                 });
    std::vector<double> surviving;
    for (double v : slopes)
        if (v >= 0) surviving.push_back(v);
    auto direct = stats::mean_se(surviving);
    res.summary["estimates"]["direct_speed"] = estimate(direct.mean, direct.se);
    double rel = std::fabs(alpha.alpha_hat - direct.mean) / direct.mean;
    res.summary["estimates"]["speed_rel_error"] = rel;
    add_flag(res, "alpha_matches_direct_5pct", rel <= 0.05);
}

// ------------------------------------------------------------------ lln-clt

void run_lln_clt(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), T = cfg.get("T");
    ProcessParams p{lambda, mu, 1};
    auto growth = growth_lln_check(p, T, cfg.count("reps"), cfg.master_seed);
    if (growth.skipped) {
        res.summary["estimates"]["skipped"] = true;
        return;
    }
    res.summary["estimates"]["mean_growth"] = estimate(growth.mean_growth, growth.se_growth);
    res.summary["estimates"]["alpha_hat"] = estimate(growth.alpha_hat, growth.alpha_se);
    res.summary["estimates"]["theta_hat"] = estimate(growth.theta_hat, growth.theta_se);
    res.summary["estimates"]["predicted_2at"] = estimate(growth.predicted, growth.predicted_se);
    res.summary["estimates"]["rel_error"] = growth.rel_error;
    add_flag(res, "growth_matches_2_alpha_theta_10pct", growth.pass);
    Table tab{"growth",
              {"T", "survivors", "mean_growth", "se", "predicted", "predicted_se"},
              {{T, static_cast<double>(growth.survivors), growth.mean_growth, growth.se_growth,
                growth.predicted, growth.predicted_se}}};
    res.tables.push_back(std::move(tab));
}

// ------------------------------------------------------------ complete-conv

void run_complete_conv(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), t = cfg.get("t");
    Site f = static_cast<Site>(cfg.get("f_halfwidth"));
    std::set<Site> F;
    for (Site x = -f; x <= f; ++x) F.insert(x);
    auto rep = check_complete_convergence({lambda, mu, 1}, F, t, cfg.count("reps"),
                                          cfg.master_seed);
    res.summary["estimates"]["void_probability"] = estimate(rep.lhs.p_hat, rep.lhs.se);
    res.summary["estimates"]["beta_hat"] = estimate(rep.beta.p_hat, rep.beta.se);
    res.summary["estimates"]["phi_void"] = estimate(rep.phi.p_hat, rep.phi.se);
    res.summary["estimates"]["mixture_rhs"] = estimate(rep.rhs, rep.rhs_se);
    res.summary["estimates"]["diff_z"] = rep.diff_z;
    add_flag(res, "mixture_matches_within_3se", rep.pass);
}

// ------------------------------------------------------- subcritical decay

void run_subcritical_range(const ExperimentConfig& cfg, ExperimentResult& res) {
    auto fit = range_decay({cfg.get("lambda"), cfg.get("mu"), 1},
                           static_cast<Site>(cfg.count("n_max")), cfg.count("reps"),
                           cfg.master_seed);
    Table tab{"range_decay", {"n", "touched", "reps", "p_hat", "se"}, {}};
    for (const auto& lvl : fit.levels)
        tab.rows.push_back({lvl.x, static_cast<double>(lvl.p_hat.successes),
                            static_cast<double>(lvl.p_hat.n), lvl.p_hat.p_hat, lvl.p_hat.se});
    res.tables.push_back(std::move(tab));
    res.summary["estimates"]["slope"] = estimate(fit.fit.slope, fit.fit.slope_se);
    res.summary["estimates"]["r2"] = fit.fit.r2;
    res.summary["estimates"]["p10"] =
        fit.levels.size() >= 10 ? fit.levels[9].p_hat.p_hat : 1.0;
    add_flag(res, "slope_negative", fit.fit.slope < 0);
    add_flag(res, "r2_above_0.95", fit.fit.r2 > 0.95);
    add_flag(res, "p10_below_0.01",
             fit.levels.size() >= 10 && fit.levels[9].p_hat.p_hat < 0.01);
}

void run_subcritical_lifetime(const ExperimentConfig& cfg, ExperimentResult& res) {
    double t_max = cfg.get("t_max");
    std::size_t points = cfg.count("grid_points");
    std::vector<double> grid;
    for (std::size_t i = 0; i <= points; ++i)
        grid.push_back(t_max * static_cast<double>(i) / static_cast<double>(points));
    auto fit = lifetime_decay({cfg.get("lambda"), cfg.get("mu"), 1}, grid, cfg.count("reps"),
                              cfg.master_seed);
    Table tab{"lifetime", {"t", "alive", "reps", "p_hat", "se"}, {}};
    for (const auto& lvl : fit.levels)
        tab.rows.push_back({lvl.x, static_cast<double>(lvl.p_hat.successes),
                            static_cast<double>(lvl.p_hat.n), lvl.p_hat.p_hat, lvl.p_hat.se});
    res.tables.push_back(std::move(tab));
    res.summary["estimates"]["slope"] = estimate(fit.fit.slope, fit.fit.slope_se);
    res.summary["estimates"]["r2"] = fit.fit.r2;
    add_flag(res, "slope_negative", fit.fit.slope < 0);
    add_flag(res, "r2_above_0.9", fit.fit.r2 > 0.9);
}

void run_containment(const ExperimentConfig& cfg, ExperimentResult& res) {
    std::vector<Site> grid;
    Site n = 1;
    for (std::size_t i = 0; i < cfg.count("n_levels"); ++i, n *= 2) grid.push_back(n);
    auto rep = containment_probability(grid, {cfg.get("lambda"), cfg.get("mu"), 1},
                                       cfg.count("reps"), cfg.master_seed, cfg.get("S"));
    Table tab{"containment", {"N", "contained", "reps", "eps_hat", "se", "ci99_lo"}, {}};
    for (const auto& pt : rep.points)
        tab.rows.push_back({static_cast<double>(pt.N),
                            static_cast<double>(pt.eps_hat.successes),
                            static_cast<double>(pt.eps_hat.n), pt.eps_hat.p_hat, pt.eps_hat.se,
                            pt.eps_hat.lo(2.576)});
    res.tables.push_back(std::move(tab));
    res.summary["estimates"]["S_used"] = rep.S;
    res.summary["estimates"]["min_ci99_lower"] = rep.min_ci99_lower;
    res.summary["estimates"]["kendall_p_downward"] = rep.trend.p_downward;
    add_flag(res, "containment_exact_consistency", rep.exact_violations == 0);
    add_flag(res, "uniformly_positive_99ci", rep.min_ci99_lower > 0);
    add_flag(res, "no_significant_downward_trend", rep.trend.p_downward > 0.05);
}

// ---------------------------------------------------------------- speedcomp

void run_speedcomp(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), T = cfg.get("T");
    std::size_t reps = cfg.count("reps");
    auto traces = competition_traces(cfg, lambda, mu, T, reps);

    Table tab{"speeds", {"replica", "rbar_T", "R_T", "F_T", "xbar_T", "D_T"}, {}};
    std::vector<double> alphas, betas, slacks, gap_minus_F;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& tr = traces[i];
        tab.rows.push_back({static_cast<double>(i), static_cast<double>(tr.rbar_final),
                            static_cast<double>(tr.contact_edge_final),
                            static_cast<double>(tr.delta_wins),
                            static_cast<double>(tr.xbar_final),
                            static_cast<double>(tr.recovery_wins)});
        alphas.push_back(static_cast<double>(tr.rbar_final) / T);
        betas.push_back(static_cast<double>(tr.contact_edge_final) / T);
        slacks.push_back(lambda / mu * betas.back() - alphas.back());
        gap_minus_F.push_back(static_cast<double>(tr.contact_edge_final - tr.rbar_final) -
                              static_cast<double>(tr.delta_wins));
    }
    res.tables.push_back(std::move(tab));
    auto ma = stats::mean_se(alphas), mb = stats::mean_se(betas), ms = stats::mean_se(slacks),
         mg = stats::mean_se(gap_minus_F);
    res.summary["estimates"]["alpha_hat"] = estimate(ma.mean, ma.se);
    res.summary["estimates"]["beta_speed_hat"] = estimate(mb.mean, mb.se);
    res.summary["estimates"]["bound_lambda_over_mu_beta"] = lambda / mu * mb.mean;
    add_flag(res, "speed_inequality", ms.mean >= -3.0 * ms.se);
    res.summary["estimates"]["gap_minus_F"] = estimate(mg.mean, mg.se);
    add_flag(res, "gap_dominates_F", mg.mean >= -3.0 * mg.se);
}

void run_fracpunch(const ExperimentConfig& cfg, ExperimentResult& res) {
    double lambda = cfg.get("lambda"), mu = cfg.get("mu"), T = cfg.get("T");
    std::size_t reps = cfg.count("reps");
    auto traces = competition_traces(cfg, lambda, mu, T, reps);
    Table tab{"competitions", {"replica", "N", "F", "xbar", "D"}, {}};
    std::vector<double> fs, xs;
    bool partition_ok = true;
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& tr = traces[i];
        partition_ok = partition_ok && tr.competitions == tr.delta_wins + tr.lambda_wins +
                                                              tr.recovery_wins;
        tab.rows.push_back({static_cast<double>(i), static_cast<double>(tr.competitions),
                            static_cast<double>(tr.delta_wins),
                            static_cast<double>(tr.xbar_final),
                            static_cast<double>(tr.recovery_wins)});
        fs.push_back(static_cast<double>(tr.delta_wins));
        xs.push_back(static_cast<double>(tr.xbar_final));
    }
    res.tables.push_back(std::move(tab));
    add_flag(res, "counter_partition_exact", partition_ok);
    auto mf = stats::mean_se(fs), mx = stats::mean_se(xs);
    double target = (mu - lambda) / lambda;
    res.summary["estimates"]["target_ratio"] = target;
    if (lambda == mu) {
        add_flag(res, "ratio_within_10pct", mf.mean == 0.0);
        return;
    }
    double ratio = mf.mean / mx.mean;
    res.summary["estimates"]["F_mean"] = estimate(mf.mean, mf.se);
    res.summary["estimates"]["xbar_mean"] = estimate(mx.mean, mx.se);
    res.summary["estimates"]["ratio"] = ratio;
    add_flag(res, "ratio_within_10pct", std::fabs(ratio - target) <= 0.10 * target);
}

void run_subadd(const ExperimentConfig& cfg, ExperimentResult& res) {
    auto rep = subadditivity_check(cfg.get("lambda"), cfg.get("mu"), cfg.get("s"), cfg.get("u"),
                                   cfg.count("reps"), cfg.master_seed);
    res.summary["estimates"]["replicas"] = rep.replicas;
    res.summary["estimates"]["violations"] = rep.violations;
    res.summary["estimates"]["max_slack"] = rep.max_slack;
    add_flag(res, "subadditivity_zero_violations", rep.violations == 0);
}

// ---------------------------------------------------------------------- cse

void run_cse(const ExperimentConfig& cfg, ExperimentResult& res) {
    int M = static_cast<int>(cfg.count("M"));
    double mu = cfg.get("mu"), S = cfg.get("S");
    std::size_t reps = cfg.count("reps");
    std::vector<double> S_grid;
    for (double s = 0; s <= S + 1e-9; s += S / 8) S_grid.push_back(s);

    // Plateau curve, replica-parallel over escape times.
    std::vector<double> escapes(reps);
    run_replicas(reps, cfg.workers, cfg.master_seed,
                 [&](std::size_t i, MasterSeed s) { escapes[i] = cse_escape_time(M, mu, s, S); });
    auto curve = cse_curve_from_escapes(escapes, S_grid);
    Table tab{"cse_curve", {"S", "held", "reps", "p_hat", "se"}, {}};
    bool monotone = true;
    for (std::size_t i = 0; i < curve.S_grid.size(); ++i) {
        const auto& pr = curve.p_hat[i];
        tab.rows.push_back({curve.S_grid[i], static_cast<double>(pr.successes),
                            static_cast<double>(pr.n), pr.p_hat, pr.se});
        if (i > 0) monotone = monotone && pr.p_hat <= curve.p_hat[i - 1].p_hat + 1e-12;
    }
    res.tables.push_back(std::move(tab));
    add_flag(res, "curve_nonincreasing", monotone);
    auto tail = curve.p_hat.back();
    res.summary["estimates"]["plateau_at_S"] = estimate(tail.p_hat, tail.se);
    add_flag(res, "plateau_positive_99ci", tail.lo(2.576) > 0);

    std::size_t walks = cfg.count("walks");
    double walk_T = cfg.get("walk_T");
    std::vector<std::vector<RegenRecord>> per_walk(walks);
    run_replicas(walks, cfg.workers, derive_key(cfg.master_seed, rng_domain::generic, 2),
                 [&](std::size_t i, MasterSeed s) {
                     per_walk[i] = cse_regeneration(M, mu, s, walk_T, cfg.get("walk_S"));
                 });
    std::vector<RegenRecord> records;
    Table rec_tab{"cse_records", {"replica", "idx", "X", "Psi"}, {}};
    for (std::size_t w = 0; w < walks; ++w) {
        std::size_t idx = 0;
        for (const auto& r : per_walk[w]) {
            if (r.censored) continue;
            rec_tab.rows.push_back({static_cast<double>(w), static_cast<double>(idx++),
                                    static_cast<double>(r.X), r.Psi});
            records.push_back(r);
        }
    }
    res.tables.push_back(std::move(rec_tab));
    res.summary["estimates"]["cse_records"] = records.size();
    if (records.size() >= 40) {
        auto iid = regen_iid_diagnostics(records);
        res.summary["estimates"]["ks_halves_X_p"] = iid.ks_halves_X.p;
        res.summary["estimates"]["ks_halves_Psi_p"] = iid.ks_halves_Psi.p;
        add_flag(res, "ks_halves_X", iid.ks_halves_X.p > 0.01);
        add_flag(res, "ks_halves_Psi", iid.ks_halves_Psi.p > 0.01);
    }
}

// --------------------------------------------------------------- percolation

void run_percolation_growth(const ExperimentConfig& cfg, ExperimentResult& res) {
    std::vector<std::size_t> grid;
    std::size_t n = cfg.count("n_min");
    for (std::size_t i = 0; i < cfg.count("n_count"); ++i, n += cfg.count("n_step"))
        grid.push_back(n);
    auto rep = rightmost_growth(cfg.get("p"), cfg.get("a"), grid, cfg.count("reps"),
                                cfg.master_seed);
    Table tab{"growth", {"n", "survivors", "slow", "p_hat", "se"}, {}};
    for (const auto& pt : rep.points)
        tab.rows.push_back({static_cast<double>(pt.n), static_cast<double>(pt.survivors),
                            static_cast<double>(pt.p_hat.successes), pt.p_hat.p_hat,
                            pt.p_hat.se});
    res.tables.push_back(std::move(tab));
    res.summary["estimates"]["slope"] = estimate(rep.fit.slope, rep.fit.slope_se);
    add_flag(res, "slope_negative", rep.fit.slope < 0);

    auto restrict_rep =
        restriction_check(cfg.get("restrict_p"), cfg.count("restrict_n"),
                          cfg.count("restrict_fields"),
                          derive_key(cfg.master_seed, rng_domain::generic, 5));
    Table rtab{"restriction",
               {"fields", "checks", "violations"},
               {{static_cast<double>(cfg.count("restrict_fields")),
                 static_cast<double>(restrict_rep.total_checks),
                 static_cast<double>(restrict_rep.violations.size())}}};
    res.tables.push_back(std::move(rtab));
    add_flag(res, "restriction_zero_violations", restrict_rep.ok());
}

void run_percolation_density(const ExperimentConfig& cfg, ExperimentResult& res) {
    std::vector<std::size_t> grid;
    std::size_t n = cfg.count("n_min");
    for (std::size_t i = 0; i < cfg.count("n_count"); ++i, n += cfg.count("n_step"))
        grid.push_back(n);
    auto pts = density_experiment(PercField::Generator::Independent, cfg.get("p"),
                                  cfg.get("rho"), cfg.get("beta"), grid, cfg.count("reps"),
                                  cfg.master_seed);
    Table tab{"density_tail", {"n", "y_sites", "low", "reps", "p_hat", "se"}, {}};
    for (const auto& pt : pts)
        tab.rows.push_back({static_cast<double>(pt.n), static_cast<double>(pt.y_sites),
                            static_cast<double>(pt.tail.successes),
                            static_cast<double>(pt.tail.n), pt.tail.p_hat, pt.tail.se});
    res.tables.push_back(std::move(tab));
    res.summary["estimates"]["tail_at_max_n"] = pts.back().tail.p_hat;
    add_flag(res, "tail_below_threshold", pts.back().tail.p_hat < cfg.get("tail_threshold"));

    // Overlap generator: empirical density against the closed form.
    double q = cfg.get("overlap_q");
    std::size_t bit_rows = cfg.count("overlap_rows");
    PercField f(PercField::Generator::Overlap, q,
                derive_key(cfg.master_seed, rng_domain::generic, 6),
                bit_rows, static_cast<Site>(bit_rows));
    std::size_t open_count = 0, total = 0;
    for (std::size_t k = 1; k <= f.rows(); ++k)
        for (Site y = -f.half_width(); y <= f.half_width(); ++y) {
            if (!f.in_lattice(y, k)) continue;
            total += 1;
            open_count += f.open(y, k);
        }
    auto prop = stats::proportion(open_count, total);
    res.summary["estimates"]["overlap_density"] = estimate(prop.p_hat, prop.se);
    res.summary["estimates"]["overlap_density_exact"] = f.density();
    add_flag(res, "overlap_density_within_3se",
             std::fabs(prop.p_hat - f.density()) <= 3 * prop.se);
}

// ------------------------------------------------------------------ duality

void run_duality(const ExperimentConfig& cfg, ExperimentResult& res) {
    Site b = static_cast<Site>(cfg.get("b_halfwidth"));
    std::set<Site> A{0}, B;
    for (Site x = -b; x <= b; ++x) B.insert(x);
    auto rep = check_duality(A, B, cfg.get("mu"), cfg.get("t"), cfg.count("reps"),
                             cfg.master_seed);
    res.summary["estimates"]["p_forward"] = estimate(rep.p1.p_hat, rep.p1.se);
    res.summary["estimates"]["p_backward"] = estimate(rep.p2.p_hat, rep.p2.se);
    res.summary["estimates"]["z"] = rep.z;
    double comb = std::sqrt(rep.p1.se * rep.p1.se + rep.p2.se * rep.p2.se);
    add_flag(res, "duality_within_3se",
             std::fabs(rep.p1.p_hat - rep.p2.p_hat) <= 3 * comb);
}

const Registry& registry() {
    static const Registry reg = [] {
        Registry r;
        r["two-site"] = {{{"lambda", {2, 0, 100}},
                          {"t", {1, 0, 100}},
                          {"reps", {100000, 0, 1e9}}},
                         run_two_site};
        r["couple-check"] = {{{"lambda", {1, 0, 100}},
                              {"mu", {2, 0, 100}},
                              {"T", {20, 0, 1000}},
                              {"reps", {1000, 0, 1e9}},
                              {"ordered_runs", {1000, 0, 1e9}},
                              {"marginal_reps", {100000, 0, 1e9}},
                              {"lambda2", {1, 0, 100}},
                              {"mu2", {2, 0, 100}},
                              {"t_marginal", {1, 0, 100}}},
                             run_couple_check};
        r["breakpoints"] = {{{"lambda", {1, 0, 100}},
                             {"mu", {2, 0, 100}},
                             {"T", {200, 1, 10000}},
                             {"S", {30, 1, 1000}},
                             {"walks", {8, 0, 10000}},
                             {"min_records", {200, 1, 1e9}},
                             {"direct_T", {400, 1, 10000}},
                             {"direct_reps", {300, 0, 1e9}}},
                            run_breakpoints};
        r["lln-clt"] = {{{"lambda", {1, 0, 100}},
                         {"mu", {2, 0, 100}},
                         {"T", {200, 1, 10000}},
                         {"reps", {400, 0, 1e9}}},
                        run_lln_clt};
        r["complete-conv"] = {{{"lambda", {1, 0, 100}},
                               {"mu", {2, 0, 100}},
                               {"t", {40, 0, 1000}},
                               {"f_halfwidth", {1, 0, 100}},
                               {"reps", {10000, 0, 1e9}}},
                              run_complete_conv};
        r["subcritical-range"] = {{{"lambda", {0.25, 0, 100}},
                                   {"mu", {0.25, 0, 100}},
                                   {"n_max", {12, 1, 1000}},
                                   {"reps", {100000, 0, 1e9}}},
                                  run_subcritical_range};
        r["subcritical-lifetime"] = {{{"lambda", {2, 0, 100}},
                                      {"mu", {0.25, 0, 100}},
                                      {"t_max", {12, 1, 1000}},
                                      {"grid_points", {8, 3, 1000}},
                                      {"reps", {100000, 0, 1e9}}},
                                     run_subcritical_lifetime};
        r["containment"] = {{{"lambda", {0.25, 0, 100}},
                             {"mu", {0.25, 0, 100}},
                             {"n_levels", {4, 1, 16}},
                             {"reps", {100000, 0, 1e9}},
                             {"S", {0, 0, 10000}}},
                            run_containment};
        r["speedcomp"] = {{{"lambda", {1, 0, 100}},
                           {"mu", {2, 0, 100}},
                           {"T", {50, 1, 1000}},
                           {"reps", {500, 0, 1e9}}},
                          run_speedcomp};
        r["fracpunch"] = {{{"lambda", {1, 0, 100}},
                           {"mu", {2, 0, 100}},
                           {"T", {50, 1, 1000}},
                           {"reps", {500, 0, 1e9}}},
                          run_fracpunch};
        r["subadd"] = {{{"lambda", {1, 0, 100}},
                        {"mu", {2, 0, 100}},
                        {"s", {5, 0, 1000}},
                        {"u", {10, 0, 1000}},
                        {"reps", {1000, 0, 1e9}}},
                       run_subadd};
        r["cse"] = {{{"M", {1, 1, 8}},
                     {"mu", {2, 0.1, 100}},
                     {"S", {40, 1, 1000}},
                     {"reps", {400, 0, 1e9}},
                     {"walks", {30, 0, 10000}},
                     {"walk_T", {150, 10, 10000}},
                     {"walk_S", {20, 1, 1000}}},
                    run_cse};
        r["percolation-growth"] = {{{"p", {0.95, 0, 1}},
                                    {"a", {0.3, -10, 10}},
                                    {"n_min", {20, 1, 10000}},
                                    {"n_step", {20, 1, 10000}},
                                    {"n_count", {3, 1, 100}},
                                    {"reps", {3000, 0, 1e9}},
                                    {"restrict_p", {0.9, 0, 1}},
                                    {"restrict_n", {50, 1, 10000}},
                                    {"restrict_fields", {1000, 0, 1e9}}},
                                   run_percolation_growth};
        r["percolation-density"] = {{{"p", {0.95, 0, 1}},
                                     {"rho", {0.8, 0, 1}},
                                     {"beta", {0.5, 0, 1}},
                                     {"n_min", {60, 1, 10000}},
                                     {"n_step", {20, 1, 10000}},
                                     {"n_count", {1, 1, 100}},
                                     {"reps", {2000, 0, 1e9}},
                                     {"tail_threshold", {0.01, 0, 1}},
                                     {"overlap_q", {0.9, 0, 1}},
                                     {"overlap_rows", {320, 10, 100000}}},
                                    run_percolation_density};
        r["duality"] = {{{"mu", {1, 0, 100}},
                         {"t", {3, 0, 100}},
                         {"b_halfwidth", {2, 0, 100}},
                         {"reps", {100000, 0, 1e9}}},
                        run_duality};
        return r;
    }();
    return reg;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& [name, def] : registry()) names.push_back(name);
    return names;
}

ExperimentConfig resolve_config(const std::string& experiment,
                                const std::map<std::string, std::string>& raw) {
    auto it = registry().find(experiment);
    if (it == registry().end()) throw usage_error("unknown experiment: " + experiment);
    const auto& schema = it->second.schema;
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    for (const auto& [key, spec] : schema) cfg.params[key] = spec.def;
    for (const auto& [key, value] : raw) {
        if (key == "seed") {
            cfg.master_seed = std::stoull(value);
            continue;
        }
        if (key == "workers") {
            cfg.workers = std::stoull(value);
            if (cfg.workers < 1 || cfg.workers > 256) throw usage_error("workers out of range");
            continue;
        }
        if (key == "out") {
            cfg.output_dir = value;
            continue;
        }
        auto sit = schema.find(key);
        if (sit == schema.end()) throw usage_error("unknown key for " + experiment + ": " + key);
        double v;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw usage_error("key " + key + ": not a number: " + value);
        }
        if (v < sit->second.lo || v > sit->second.hi)
            throw usage_error("key " + key + ": value out of range");
        cfg.params[key] = v;
    }
    return cfg;
}

void run_replicas(std::size_t reps, std::size_t workers, MasterSeed seed,
                  const std::function<void(std::size_t, MasterSeed)>& fn) {
    if (reps == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, reps));
    if (workers == 1) {
        for (std::size_t i = 0; i < reps; ++i) fn(i, replica_seed(seed, i));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= reps) return;
            try {
                fn(i, replica_seed(seed, i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    auto it = registry().find(config.experiment);
    if (it == registry().end()) throw usage_error("unknown experiment: " + config.experiment);
    ExperimentResult res;
    res.summary["experiment"] = config.experiment;
    nlohmann::ordered_json prov;
    prov["seed"] = config.master_seed;
    prov["version"] = kVersion;
    nlohmann::ordered_json params;
    for (const auto& [key, value] : config.params) params[key] = value;
    prov["params"] = params;
    res.summary["provenance"] = prov;

    if (config.params.count("reps") && config.params.at("reps") == 0) {
        res.summary["checks"]["insufficient_data"] = true;
        res.pass = false;
        return res;
    }
    auto t0 = std::chrono::steady_clock::now();
    it->second.run(config, res);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.summary["pass"] = res.pass;
    return res;
}

namespace {

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_result(const ExperimentResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/summary.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + dir + "/summary.json");
        out << result.summary.dump(2) << "\n";
    }
    for (const auto& table : result.tables) {
        std::ofstream out(dir + "/" + table.name + ".csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write table " + table.name);
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            out << (i ? "," : "") << table.columns[i];
        out << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << format_cell(row[i]);
            out << "\n";
        }
    }
}

}  // namespace ipslab
