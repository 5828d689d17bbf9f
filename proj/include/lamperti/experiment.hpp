#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lamperti/ssmp.hpp"
#include "lamperti/verify.hpp"

namespace lamperti {

// Flat key = value file with dotted keys; '#' starts a comment. Keys:
//   model, d, start, stable.alpha, stable.rho, grid.dt, grid.horizon, grid.delta, absorb.epsilon,
//   ensemble.paths, ensemble.seed, output.dir, output.paths, verify.tests, verify.significance,
//   and per-test knobs under killing.*, compensation.*, corrective.*, dynkin.*, sde.*, cf.*, sampler.*,
//   roundtrip.*, algebra.* (see the defaults below).
struct ExperimentConfig {
    Model model = Model::killed;
    std::size_t d = 2;
    std::vector<double> start{0.5, 0.5};
    double alpha = 1.0;
    std::vector<double> rho{0.5, 0.5};  // empty for skorokhod-bm
    double grid_dt = 1e-3;
    double horizon = 1.0;
    double delta = 0.1;
    double epsilon = 1e-6;
    std::uint64_t paths = 1000;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::uint64_t dump_paths = 0;  // ssMp/MAP path CSVs written by the simulate stage
    std::vector<std::string> tests;
    double significance = 0.01;

    double killing_window = 0.01;
    double killing_map_dt = 1e-4;
    double killing_delta = 0.01;
    double killing_reference_alpha = 0.0;

    double compensation_horizon = 0.5;
    double compensation_cutoff = 0.5;
    double compensation_map_dt = 5e-4;
    double compensation_delta = 0.01;

    double corrective_map_dt = 1e-3;
    double corrective_delta = 0.01;
    int corrective_bins = 5;
    int corrective_oracle_draws = 4;
    std::vector<double> corrective_survival_times{0.1, 0.25, 0.5};

    double dynkin_t = 0.1;
    double dynkin_map_dt = 1e-4;
    std::vector<std::string> dynkin_variants{"literal", "reconciled"};
    double dynkin_generator_bound = 1e6;

    double sde_t = 0.25;
    double sde_dt = 1e-4;
    double sde_variance_t = 0.01;

    std::uint64_t cf_samples = 1000000;
    std::vector<double> cf_z{0.5, 1.0, 2.0};

    std::uint64_t sampler_tail = 10000;

    std::vector<std::size_t> roundtrip_dims{2, 3};
    double roundtrip_tol = 1e-9;

    int algebra_cases = 1000;

    // SsmpConfig invariants for the chosen model, plus test names and ranges
    void validate() const;
    SsmpConfig ssmp() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline const std::vector<std::string>& known_tests() {
    static const std::vector<std::string> t{"roundtrip", "killing", "compensation", "corrective", "dynkin",
                                            "sde",       "cf",      "sampler",      "algebra"};
    return t;
}

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& p);
void write_config(std::ostream& os, const ExperimentConfig& c);

struct ExperimentResult {
    std::vector<TestReport> reports;
    std::vector<std::string> failures;
    std::vector<std::filesystem::path> files;
    bool pass() const { return failures.empty(); }
};

// one selected test, without writing anything
TestReport run_test(const ExperimentConfig& c, const std::string& name);

// simulate -> transform -> verify; writes path CSVs, one JSON report per test, plot CSVs,
// failures.json and metadata.json into out_dir
ExperimentResult run_experiment(const ExperimentConfig& c);

// rows: path, kind, estimate, std_error, reference, statistic, p_value, n_paths, significance, pass
void write_report_csv(std::ostream& os, const TestReport& r);

}  // namespace lamperti
