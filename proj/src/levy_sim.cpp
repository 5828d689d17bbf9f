#include "lamperti/levy_sim.hpp"

#include <numbers>
#include <stdexcept>

namespace lamperti {

using std::numbers::pi;

double stable_constant(double alpha, double r) { return std::tgamma(1.0 + alpha) * std::sin(pi * alpha * r) / pi; }

StableParams::StableParams(double alpha, double rho) : alpha_(alpha), rho_(rho) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable: alpha must lie in (0,2)");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("stable: rho must lie in (0,1)");
    c1_ = stable_constant(alpha, rho);
    c2_ = stable_constant(alpha, 1.0 - rho);
    if (c1_ < -1e-12 || c2_ < -1e-12)
        throw std::invalid_argument("stable: rho outside the admissible range for this alpha");
    if (std::abs(c1_) <= 1e-12) c1_ = 0.0;
    if (std::abs(c2_) <= 1e-12) c2_ = 0.0;
    cms_b_ = pi * (rho - 0.5);
}

bool StableParams::spectrally_positive() const {
    return alpha_ > 1.0 && std::abs(alpha_ * (1.0 - rho_) - 1.0) <= 1e-12;
}

double StableParams::levy_density(double x) const {
    if (x == 0.0) return 0.0;
    double c = x > 0.0 ? c1_ : c2_;
    return c * std::pow(std::abs(x), -(1.0 + alpha_));
}

std::complex<double> StableParams::char_exponent(double z) const {
    if (z == 0.0) return {0.0, 0.0};
    double phase = pi * alpha_ * (0.5 - rho_) * (z > 0.0 ? 1.0 : -1.0);
    return std::pow(std::abs(z), alpha_) * std::polar(1.0, phase);
}

double StableParams::sample_unit(RngStream& rng) const {
    double v = pi * (rng.uniform() - 0.5);
    double w = rng.exponential();
    if (alpha_ == 1.0) {
        double phi = pi * (0.5 - rho_);
        return std::cos(phi) * std::tan(v) - std::sin(phi);
    }
    // Chambers-Mallows-Stuck in Zolotarev's form; the skewness angle pi(rho - 1/2)
    // makes the scale factor exactly one for exp(-Psi).
    double a = alpha_ * (v + cms_b_);
    return std::sin(a) / std::pow(std::cos(v), 1.0 / alpha_) *
           std::pow(std::cos(v - a) / w, (1.0 - alpha_) / alpha_);
}

StableDescriptors stable_descriptors(const StableParams& params) {
    return {params.c1(), params.c2(), [params](double x) { return params.levy_density(x); },
            [params](double z) { return params.char_exponent(z); }};
}

double sample_stable_increment(const StableParams& params, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_stable_increment: dt must be positive");
    return std::pow(dt, 1.0 / params.alpha()) * params.sample_unit(rng);
}

StableStepper::StableStepper(StableParams params, double delta, double max_jumps_per_cell)
    : params_(params), delta_(delta), cap_(max_jumps_per_cell) {
    if (!(delta > 0.0)) throw std::invalid_argument("big-jump threshold must be positive");
}

CellDraw StableStepper::step(double h, RngStream& rng, double delta) const {
    if (std::isfinite(delta) && params_.tail_mass(delta) * h > cap_)
        throw std::invalid_argument("big-jump threshold too small for the grid: expected jumps per cell exceed cap");
    CellDraw c;
    c.increment = sample_stable_increment(params_, h, rng);
    if (std::abs(c.increment) > delta) {
        c.marked = true;
        c.mark_fraction = rng.uniform();
    }
    return c;
}

CellDraw BrownianStepper::step(double h, RngStream& rng) const {
    CellDraw c;
    c.increment = std::sqrt(h) * rng.normal();
    double e = rng.exponential();
    c.minimum = 0.5 * (c.increment - std::sqrt(c.increment * c.increment + 2.0 * h * e));
    return c;
}

namespace {

void check_grid(std::span<const double> grid) {
    if (grid.size() < 2 || grid[0] != 0.0) throw std::invalid_argument("grid must start at 0 and have a cell");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("grid must be strictly increasing");
}

}  // namespace

SkeletonPath sample_stable_path(const StableParams& params, std::span<const double> grid, double delta,
                                RngStream& rng, double x0, double max_jumps_per_cell) {
    check_grid(grid);
    StableStepper stepper(params, delta, max_jumps_per_cell);
    SkeletonPath p(1);
    double x = x0;
    p.push(grid[0], {&x, 1}, EventTag::start);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        double h = grid[k] - grid[k - 1];
        CellDraw c = stepper.step(h, rng);
        x += c.increment;
        if (c.marked) {
            double tj = grid[k - 1] + c.mark_fraction * h;
            if (!(tj > grid[k - 1] && tj < grid[k])) tj = grid[k - 1] + 0.5 * h;
            p.push(tj, {&x, 1}, EventTag::jump, JumpMark{0, c.increment});
        }
        p.push(grid[k], {&x, 1}, EventTag::grid);
    }
    p.horizon = grid.back();
    return p;
}

SkeletonPath sample_bm_path(std::span<const double> grid, RngStream& rng, double x0) {
    check_grid(grid);
    BrownianStepper stepper;
    SkeletonPath p(1);
    double x = x0;
    p.push(grid[0], {&x, 1}, EventTag::start);
    p.cell_min.push_back(x0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        CellDraw c = stepper.step(grid[k] - grid[k - 1], rng);
        p.cell_min.push_back(x + c.minimum);
        x += c.increment;
        p.push(grid[k], {&x, 1}, EventTag::grid);
    }
    p.horizon = grid.back();
    return p;
}

std::vector<double> uniform_grid(double horizon, double dt) {
    if (!(horizon > 0.0 && dt > 0.0)) throw std::invalid_argument("grid needs positive horizon and step");
    auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g[k] = std::min(horizon, static_cast<double>(k) * dt);
    g[n] = horizon;
    return g;
}

}  // namespace lamperti
