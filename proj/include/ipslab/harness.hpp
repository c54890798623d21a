#ifndef IPSLAB_HARNESS_HPP
#define IPSLAB_HARNESS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ipslab/construction.hpp"

namespace ipslab {

struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, double> params;  // resolved numeric parameters
    MasterSeed master_seed = 1;
    std::size_t workers = 1;
    std::string output_dir = "out";

    double get(const std::string& key) const;
    std::size_t count(const std::string& key) const;
};

// Flat key=value text; '#' starts a comment. Returns raw strings.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Validates raw keys against the experiment schema, applies defaults and
// range checks. Unknown keys are rejected.
ExperimentConfig resolve_config(const std::string& experiment,
                                const std::map<std::string, std::string>& raw);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
    nlohmann::ordered_json summary;
    std::vector<Table> tables;
    bool pass = true;
    double wall_seconds = 0;  // reported to the console, never serialized
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// summary.json plus one CSV per table, written with 17 significant digits.
void write_result(const ExperimentResult& result, const std::string& dir);

std::vector<std::string> experiment_names();

// Deterministic replica fan-out: slot i is computed from replica_seed(seed,i)
// regardless of the worker count, so merges are order independent.
void run_replicas(std::size_t reps, std::size_t workers, MasterSeed seed,
                  const std::function<void(std::size_t replica, MasterSeed replica_seed)>& fn);

extern const char* kVersion;

}  // namespace ipslab

#endif
