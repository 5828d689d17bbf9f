#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lamperti/core.hpp"
#include "lamperti/levy_sim.hpp"

namespace lamperti {

enum class Model { killed, symmetric, skorokhod_stable, skorokhod_bm };

const char* to_string(Model m);
Model parse_model(const std::string& s);

struct SsmpConfig {
    Model model = Model::killed;
    std::size_t d = 2;
    std::vector<StableParams> params;  // one per coordinate; empty for skorokhod_bm
    double epsilon = 1e-6;             // absorption threshold on |.|_1
    double horizon = 1.0;
    double grid_dt = 0.0;              // 0 means 1e-3 * horizon
    double delta = 0.1;                // jump-mark threshold of the drivers

    void validate() const;
    double index() const;  // self-similarity index: alpha, or 2 for Brownian drivers
    double step() const { return grid_dt > 0.0 ? grid_dt : 1e-3 * horizon; }
};

// N^{(j)}: negate coordinate j
std::vector<double> negate_coordinate(std::span<const double> x, std::size_t j);
// R: negate the negative coordinates
std::vector<double> reflect_orthant(std::span<const double> x);

SkeletonPath kill_at_orthant_exit(std::span<const SkeletonPath> x);
// recursive construction: apply R whenever a coordinate leaves the orthant, tagging the event corrective
SkeletonPath reflect_symmetric(std::span<const SkeletonPath> x, double epsilon = 1e-6);
// coordinatewise |X^{(i)}|, for the pathwise comparison with the recursive construction
SkeletonPath abs_join(std::span<const SkeletonPath> x, double epsilon = 1e-6);
SkeletonPath skorokhod_reflect(std::span<const SkeletonPath> x, double epsilon = 1e-6);

// Driver streams: coordinate i of path `stream` draws from RngStream(seed, stream, i).
std::vector<SkeletonPath> sample_drivers(const SsmpConfig& cfg, std::span<const double> start,
                                         std::span<const double> grid, const RngStream& rng);
SkeletonPath construct(const SsmpConfig& cfg, std::span<const SkeletonPath> drivers);
// drivers on the uniform grid of cfg, then construct
SkeletonPath simulate_ssmp(const SsmpConfig& cfg, std::span<const double> start, const RngStream& rng);

// Streaming simulation with cell sizes h = map_dt * |Z|_1^index, so each cell advances the
// Lamperti clock by map_dt; stops once the clock passes map_horizon or the path dies.
// With map_dt <= 0 the cells have the fixed size cfg.step() up to cfg.horizon, and the
// result equals simulate_ssmp for the same streams.
SkeletonPath simulate_ssmp_clocked(const SsmpConfig& cfg, std::span<const double> start, double map_horizon,
                                   double map_dt, const RngStream& rng, double max_cell = 0.05);

}  // namespace lamperti
