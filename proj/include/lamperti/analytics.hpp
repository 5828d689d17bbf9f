#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lamperti/core.hpp"
#include "lamperti/rng.hpp"

namespace lamperti {

// ---- killed stable MAP

// (1/alpha) sum_k c2^{(k)} (x_k/|x|_1)^{-alpha}
double killing_rate(double alpha, std::span<const double> rho, std::span<const double> x);

// e^{-y} theta + (1 - e^{-y}) e_j
SimplexPoint jump_vector_v(const SimplexPoint& theta, std::size_t j, double y);
void jump_vector_v(std::span<const double> theta, std::size_t j, double y, std::span<double> out);

// (c1^{(j)} 1_{y>0} + c2^{(j)} 1_{log(1-theta_j)<y<0}) e^y / |e^y - 1|^{1+alpha}
double jump_kernel_density(double alpha, std::span<const double> rho, std::span<const double> theta, std::size_t j,
                           double y);

// ---- corrective jumps of the reflected symmetric MAP

// Gamma(1+alpha) sin(pi alpha/2) / pi
double corrective_constant(double alpha);
// joint density of (direction j, jump x), normalized to a probability law
double corrective_jump_density(double alpha, std::span<const double> xi, std::size_t j, double x);
// the unnormalized bracket as displayed, q(Xi)^{-1} (e^x + 2 Xi_j - 1)^{-1-alpha} e^x; total mass 1/c
double corrective_jump_density_raw(double alpha, std::span<const double> xi, std::size_t j, double x);
// P(direction j) and P(Delta xi <= x | direction j)
double corrective_direction_probability(double alpha, std::span<const double> xi, std::size_t j);
double corrective_jump_cdf(double alpha, std::span<const double> xi, std::size_t j, double x);

struct CorrectiveJump {
    std::size_t direction;
    double dxi;
    std::vector<double> landing;  // Xi_L
};

// direction by u_dir against the cumulative direction weights, jump by inverse CDF at u
CorrectiveJump corrective_jump_from_uniforms(double alpha, std::span<const double> xi, double u_dir, double u);
CorrectiveJump corrective_jump_sampler(double alpha, std::span<const double> xi, RngStream& rng);

// ---- test functions

// f on R x simplex; gradient has d+1 entries (index 0 = ordinate), Hessian is (d+1)^2 row-major
struct TestFunction {
    std::size_t d = 2;
    std::string name;
    std::function<double(double, std::span<const double>)> value;
    std::function<void(double, std::span<const double>, std::span<double>)> gradient;
    std::function<void(double, std::span<const double>, std::span<double>)> hessian;  // may be empty
    double bound = inf;

    double operator()(double x, std::span<const double> theta) const { return value(x, theta); }
};

// g on the closed orthant with derivatives
struct OrthantFunction {
    std::size_t d = 2;
    std::string name;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::function<void(std::span<const double>, std::span<double>)> hessian;  // d x d row-major
    double bound = inf;
};

// (e_0 + e_i - sum_{j != i} theta_j e_j) . grad f(x, theta) at a face point theta_i = 0
double class_d_residual(const TestFunction& f, double x, std::size_t i, std::span<const double> theta);

// f(x, theta) = g(e^x theta); rejects g whose face derivatives fail a spot check (20 points, 1e-8)
TestFunction make_class_d(const OrthantFunction& g);

OrthantFunction gaussian_bump(std::size_t d);         // exp(-|w|^2)
OrthantFunction rational_bump(std::size_t d);         // 1/(1+|w|^2)
OrthantFunction cosine_gaussian(std::size_t d);       // prod cos(w_k) e^{-w_k^2/2}
OrthantFunction constant_function(std::size_t d, double c = 1.0);

// ---- generators

// one coordinate of an orthant Levy process: drift, Gaussian part, Levy density on (0, inf)
struct LevyTriple {
    double b = 0.0;
    double sigma = 0.0;
    std::function<double(double)> density;  // empty for no jumps
};

// sum_i b_i g_i + sigma_i^2/2 g_ii + int (g(w + u e_i) - g(w) - g_i u 1_{u<1}) Pi_i(du)
double generator_orthant_levy(const OrthantFunction& g, std::span<const double> w, std::span<const LevyTriple> coords);

// triple of the spectrally positive stable coordinate with index alpha (drift keeps it strictly stable)
LevyTriple spectrally_positive_triple(double alpha);

enum class GeneratorVariant { literal, reconciled };
const char* to_string(GeneratorVariant v);
GeneratorVariant parse_variant(const std::string& s);

// |Gamma(1+alpha) sin(pi alpha) / pi|
double skorokhod_c1(double alpha);
// Throws std::domain_error for the literal variant when its integral diverges at y = 0.
double generator_skorokhod_map(const TestFunction& f, double x, std::span<const double> theta, double alpha,
                               GeneratorVariant variant);

struct BmMapCoefficients {
    std::vector<double> b;  // d+1
    std::vector<double> a;  // (d+1)^2 row-major
};
BmMapCoefficients bm_map_coefficients(std::span<const double> theta);
double generator_bm_map(const TestFunction& f, double x, std::span<const double> theta);

struct SdeCoefficients {
    std::array<double, 3> a{};
    std::array<std::array<double, 2>, 3> b{};  // b-tilde, driven by noise of covariance diag(1, 2)
    std::array<double, 3> gamma{};
    double lambda2 = 0.0, lambda3 = 0.0;
};
SdeCoefficients sde_coefficients(std::span<const double> theta);
// effective diffusion matrix of the (rho, Theta) SDE, 3x3 row-major
std::array<double, 9> sde_sigma(std::span<const double> theta);

// Bilinear interpolation on a uniform grid; outside the grid the fallback is called.
class Table2D {
public:
    Table2D(double x0, double x1, std::size_t nx, double y0, double y1, std::size_t ny,
            const std::function<double(double, double)>& fn);
    bool contains(double x, double y) const { return x >= x0_ && x <= x1_ && y >= y0_ && y <= y1_; }
    double operator()(double x, double y) const;

private:
    double x0_, x1_, y0_, y1_, hx_, hy_;
    std::size_t nx_, ny_;
    std::vector<double> v_;
};

}  // namespace lamperti
