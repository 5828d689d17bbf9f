#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lamperti/analytics.hpp"
#include "lamperti/core.hpp"
#include "lamperti/levy_sim.hpp"
#include "lamperti/ssmp.hpp"

namespace lamperti {

struct TestReport {
    enum class Kind { moment, distribution, exact, composite };

    std::string name;
    Kind kind = Kind::moment;
    double estimate = 0.0;
    double std_error = 0.0;
    double reference = 0.0;
    std::string reference_tag;  // for distributional references
    double statistic = 0.0;
    double p_value = 1.0;
    std::uint64_t n_paths = 0;
    double significance = 0.01;
    bool pass = false;
    std::string note;
    std::vector<TestReport> parts;

    // |estimate - reference| <= 3 std_error
    static TestReport moment(std::string name, double estimate, double se, double reference, std::uint64_t n);
    // p_value > significance
    static TestReport distribution(std::string name, double statistic, double p, std::string reference_tag,
                                   std::uint64_t n, double significance = 0.01);
    // |estimate - reference| <= tol
    static TestReport exact(std::string name, double estimate, double reference, double tol);
    // passes iff every part passes
    static TestReport composite(std::string name, std::vector<TestReport> parts);
};

nlohmann::json to_json(const TestReport& r);
TestReport report_from_json(const nlohmann::json& j);

// ---- statistics

struct MeanStat {
    double n = 0.0, sum = 0.0, sumsq = 0.0;
    void add(double v) {
        n += 1.0;
        sum += v;
        sumsq += v * v;
    }
    void merge(const MeanStat& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return sum / n; }
    double variance() const;  // unbiased
    double se() const;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// asymptotic Kolmogorov tail P(K > lambda)
double kolmogorov_tail(double lambda);
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// ---- criteria

struct KillingConfig {
    double alpha = 1.0;
    std::vector<double> rho{0.5, 0.5};
    std::vector<double> theta{0.5, 0.5};
    double window = 0.01;
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 1;
    double map_dt = 1e-4;
    double delta = 0.01;
    double reference_alpha = 0.0;  // > 0: reference computed at this alpha (power check)
};
// occurrence/exposure hazard of the transformed MAP over [0, window]; lifetimes (inf if censored) on request
TestReport estimate_killing_rate(const KillingConfig& c, std::vector<double>* lifetimes = nullptr);

struct CompensationConfig {
    double alpha = 1.0;
    std::vector<double> rho{0.5, 0.5};
    std::vector<double> theta{0.5, 0.5};
    double horizon = 0.5;  // MAP time
    double cutoff = 0.5;   // |dxi| resolution
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 2;
    double map_dt = 5e-4;
    double delta = 0.01;
};

// bounded functional of (xi_{s-}, dxi, Xi_{s-}, Xi_s)
struct JumpFunctional {
    std::string name;
    std::function<double(double, double, std::span<const double>, std::span<const double>)> f;
    // marginal in dxi only, used for the kernel side: int f(y) L(theta, dy) is tabulated in theta
    std::function<double(double)> of_jump;
};
JumpFunctional functional_one();
JumpFunctional functional_upward();

// sum_j int_{|y| > cutoff} h(y) jump_kernel_density(theta, j, y) dy
double kernel_mass(double alpha, std::span<const double> rho, std::span<const double> theta, double cutoff,
                   const std::function<double(double)>& h);
TestReport compensation_test(const CompensationConfig& c, std::span<const JumpFunctional> fs);
// q(theta) against quadrature of the orthant-exiting mass, over random (alpha, rho, theta)
TestReport kernel_mass_identity(std::uint64_t seed, int n_cases, double tol = 1e-8);

struct CorrectiveConfig {
    double alpha = 1.0;
    std::vector<double> start{0.5, 0.5};
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 3;
    double map_dt = 1e-3;
    double delta = 0.01;
    int bins = 5;
    int oracle_draws = 4;  // sampler draws per observed event
    std::vector<double> survival_times{0.1, 0.25, 0.5};
    double significance = 0.01;  // family level, split over bins
};

struct CorrectiveEvent {
    double time;                // MAP time L
    std::vector<double> before; // Xi_{L-}
    double dxi;
    std::vector<double> after;  // Xi_L
    std::size_t direction;
};

TestReport corrective_jump_gof(const CorrectiveConfig& c, std::vector<CorrectiveEvent>* events = nullptr);

struct DynkinConfig {
    Model model = Model::skorokhod_bm;
    double alpha = 1.5;  // stable models
    std::vector<double> start{0.5, 0.5};
    double t = 0.1;  // MAP time
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 4;
    double map_dt = 1e-4;
    double delta = 0.1;
    double generator_bound = 1e6;
};
// variants apply to the stable model; for Brownian drivers the BM-MAP generator is used
TestReport dynkin_test(const DynkinConfig& c, std::span<const TestFunction> fs,
                       std::span<const GeneratorVariant> variants = {});

struct SdeConfig {
    std::vector<double> theta0{0.5, 0.5};
    double t = 0.25;
    double dt = 1e-4;
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 5;
    double variance_t = 0.01;
    double significance = 0.01;
};
// Euler scheme with symmetric fold-back of Theta^1 into [0,1]; the overshoot feeds the local time
MapPath sde_simulate(std::span<const double> theta0, double t, double dt, RngStream& rng);
TestReport sde_vs_transform_test(const SdeConfig& c);

struct SamplerConfig {
    std::uint64_t n_cf = 1000000;
    std::vector<double> z{0.5, 1.0, 2.0};
    std::uint64_t n_paths = 100000;
    double grid_dt = 1e-3;
    std::uint64_t n_tail = 10000;
    std::uint64_t seed = 6;
    double significance = 0.01;
};
TestReport cf_test(const StableParams& p, std::uint64_t n, std::span<const double> z, std::uint64_t seed);
TestReport sampler_fidelity(const SamplerConfig& c);

// ---- quick structural checks

TestReport lamperti_roundtrip(std::size_t d, std::uint64_t n_paths, std::uint64_t seed, double tol = 1e-9);
TestReport algebraic_identities(std::uint64_t seed, int n_cases);

}  // namespace lamperti
