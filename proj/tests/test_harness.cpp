#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ipslab/errors.hpp"
#include "ipslab/harness.hpp"

using namespace ipslab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> kv(std::initializer_list<std::pair<std::string, std::string>> xs) {
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : xs) m[k] = v;
    return m;
}

}  // namespace

TEST_CASE("config parsing: comments, whitespace, and rejects") {
    auto dir = std::filesystem::temp_directory_path() / "ipslab_cfg";
    std::filesystem::create_directories(dir);
    auto path = (dir / "a.cfg").string();
    {
        std::ofstream out(path);
        out << "# comment line\n  lambda = 2.0  \nt=0.5 # trailing\n\n";
    }
    auto raw = parse_config_file(path);
    CHECK(raw.at("lambda") == "2.0");
    CHECK(raw.at("t") == "0.5");

    {
        std::ofstream out(path);
        out << "lambda\n";
    }
    CHECK_THROWS_AS((void)parse_config_file(path), usage_error);
}

TEST_CASE("config resolution: defaults, overrides, unknown keys, ranges") {
    auto cfg = resolve_config("two-site", kv({{"reps", "2000"}, {"seed", "7"}}));
    CHECK(cfg.get("lambda") == 2.0);
    CHECK(cfg.count("reps") == 2000);
    CHECK(cfg.master_seed == 7);
    CHECK_THROWS_AS((void)resolve_config("two-site", kv({{"bogus", "1"}})), usage_error);
    CHECK_THROWS_AS((void)resolve_config("two-site", kv({{"lambda", "-1"}})), usage_error);
    CHECK_THROWS_AS((void)resolve_config("two-site", kv({{"lambda", "abc"}})), usage_error);
    CHECK_THROWS_AS((void)resolve_config("nonsense", {}), usage_error);
}

TEST_CASE("replica fan-out is worker-count independent") {
    auto run = [](std::size_t workers) {
        std::vector<double> out(500);
        run_replicas(500, workers, 42, [&](std::size_t i, MasterSeed s) {
            SplitRng rng(s);
            out[i] = rng.next_exponential(1.0);
        });
        return out;
    };
    auto a = run(1), b = run(8);
    CHECK(a == b);
}

TEST_CASE("two-site experiment: reruns and worker counts are bit-identical") {
    auto cfg = resolve_config("two-site", kv({{"reps", "4000"}}));
    auto dir = std::filesystem::temp_directory_path() / "ipslab_out";
    std::filesystem::remove_all(dir);

    cfg.workers = 1;
    auto r1 = run_experiment(cfg);
    write_result(r1, (dir / "a").string());
    auto r2 = run_experiment(cfg);
    write_result(r2, (dir / "b").string());
    cfg.workers = 8;
    auto r3 = run_experiment(cfg);
    write_result(r3, (dir / "c").string());

    CHECK(slurp((dir / "a" / "summary.json").string()) ==
          slurp((dir / "b" / "summary.json").string()));
    CHECK(slurp((dir / "a" / "summary.json").string()) ==
          slurp((dir / "c" / "summary.json").string()));
    CHECK(slurp((dir / "a" / "two_site.csv").string()) ==
          slurp((dir / "c" / "two_site.csv").string()));
    CHECK(r1.pass);
}

TEST_CASE("reps=0 flags insufficient data and fails") {
    auto cfg = resolve_config("duality", kv({{"reps", "0"}}));
    auto res = run_experiment(cfg);
    CHECK_FALSE(res.pass);
    CHECK(res.summary["checks"]["insufficient_data"] == true);
}

TEST_CASE("csv cells carry 17 significant digits") {
    ExperimentResult res;
    res.summary["x"] = 1;
    res.tables.push_back({"t", {"v"}, {{1.0 / 3.0}}});
    auto dir = std::filesystem::temp_directory_path() / "ipslab_csv";
    write_result(res, dir.string());
    auto text = slurp((dir / "t.csv").string());
    CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("merges are canonical: shuffled completion order changes nothing") {
    // The reduction discipline sorts per-replica results by index before
    // any floating-point accumulation.
    std::vector<std::pair<std::size_t, double>> slots;
    run_replicas(200, 1, 9, [&](std::size_t i, MasterSeed s) {
        slots.emplace_back(i, SplitRng(s).next_exponential(1.0));
    });
    auto reduce = [](std::vector<std::pair<std::size_t, double>> v) {
        std::sort(v.begin(), v.end());
        double sum = 0;
        for (const auto& [i, x] : v) sum += x;
        return sum;
    };
    double canonical = reduce(slots);
    std::mt19937 shuffle_rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(slots.begin(), slots.end(), shuffle_rng);
        CHECK(reduce(slots) == canonical);
    }
}

TEST_CASE("duality experiment passes at spec scale parameters") {
    auto cfg = resolve_config("duality", kv({{"reps", "20000"}}));
    cfg.workers = 2;
    auto res = run_experiment(cfg);
    CHECK(res.pass);
}
