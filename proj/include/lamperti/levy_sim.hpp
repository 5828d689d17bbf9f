#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>

#include "lamperti/core.hpp"
#include "lamperti/rng.hpp"

namespace lamperti {

class StableParams {
public:
    // rejects alpha outside (0,2), rho outside (0,1), and (alpha, rho) pairs with a negative Levy constant
    StableParams(double alpha, double rho);

    double alpha() const { return alpha_; }
    double rho() const { return rho_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    bool spectrally_positive() const;
    bool two_sided() const { return c1_ > 0.0 && c2_ > 0.0; }

    // |x|^{-(1+alpha)} (c1 1_{x>0} + c2 1_{x<0})
    double levy_density(double x) const;
    // Psi with E exp(i z X_t) = exp(-t Psi(z))
    std::complex<double> char_exponent(double z) const;
    // Pi(|x| > delta)
    double tail_mass(double delta) const { return (c1_ + c2_) * std::pow(delta, -alpha_) / alpha_; }
    // one draw with the unit-time law
    double sample_unit(RngStream& rng) const;

    friend bool operator==(const StableParams& a, const StableParams& b) {
        return a.alpha_ == b.alpha_ && a.rho_ == b.rho_;
    }

private:
    double alpha_, rho_, c1_, c2_;
    double cms_b_;  // pi (rho - 1/2)
};

// c = Gamma(1+alpha) sin(pi alpha r) / pi
double stable_constant(double alpha, double r);

struct StableDescriptors {
    double c1, c2;
    std::function<double(double)> levy_density;
    std::function<std::complex<double>(double)> char_exponent;
};

StableDescriptors stable_descriptors(const StableParams& params);

double sample_stable_increment(const StableParams& params, double dt, RngStream& rng);

// One grid cell of a driving process.
struct CellDraw {
    double increment = 0.0;
    bool marked = false;       // increment exceeds the jump threshold
    double mark_fraction = 1;  // position of the marked jump inside the cell, in (0,1)
    double minimum = 0.0;      // minimum over the cell relative to its start (Brownian cells only)
};

class StableStepper {
public:
    StableStepper(StableParams params, double delta, double max_jumps_per_cell = 0.1);
    CellDraw step(double h, RngStream& rng) const { return step(h, rng, delta_); }
    CellDraw step(double h, RngStream& rng, double delta) const;
    const StableParams& params() const { return params_; }
    double delta() const { return delta_; }

private:
    StableParams params_;
    double delta_, cap_;
};

class BrownianStepper {
public:
    // increment N(0,h) and the exact minimum of the Brownian bridge over the cell
    CellDraw step(double h, RngStream& rng) const;
};

// Grid increments are exact stable increments; a cell whose increment exceeds delta in
// absolute value is recorded as a marked jump at a uniform position inside the cell.
SkeletonPath sample_stable_path(const StableParams& params, std::span<const double> grid, double delta,
                                RngStream& rng, double x0 = 0.0, double max_jumps_per_cell = 0.1);

SkeletonPath sample_bm_path(std::span<const double> grid, RngStream& rng, double x0 = 0.0);

std::vector<double> uniform_grid(double horizon, double dt);

}  // namespace lamperti
