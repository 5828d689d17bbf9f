#include "lamperti/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lamperti/levy_sim.hpp"

namespace lamperti {

using std::numbers::pi;

namespace {

constexpr std::size_t max_dim = 16;
using Buf = std::array<double, max_dim>;
using Hess = std::array<double, (max_dim + 1) * (max_dim + 1)>;

void check_theta(std::span<const double> theta) {
    if (theta.empty() || theta.size() > max_dim) throw std::invalid_argument("simplex dimension out of range");
    double s = 0.0;
    for (double v : theta) {
        if (!(v >= 0.0)) throw std::invalid_argument("simplex component negative");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("angle not on the simplex");
}

void check_interior(std::span<const double> theta) {
    check_theta(theta);
    for (double v : theta)
        if (!(v > 0.0)) throw std::invalid_argument("angle must be interior");
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

// Running quadrature total with a global accuracy check. `floor` is the rounding noise of the
// integrand on a piece (cancellation in the compensated difference near y = 0); the adaptive
// error estimate cannot go below it.
struct Quad {
    double value = 0.0, error = 0.0, l1 = 0.0, floor = 0.0;

    template <class F>
    void finite(F f, double a, double b, double noise = 0.0) {
        floor += noise;
        if (!(b > a)) return;
        double err = 0.0, l1p = 0.0;
        value += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-11, &err, &l1p);
        error += err;
        l1 += l1p;
    }
    template <class F>
    void tail(F f, double a) {
        double err = 0.0, l1p = 0.0;
        boost::math::quadrature::exp_sinh<double> es;
        value += es.integrate([&](double u) { return f(a + u); }, 0.0, inf, 1e-12, &err, &l1p);
        error += err;
        l1 += l1p;
    }
    double result(const char* what) const {
        // mixed tolerance: relative to the L1 mass, absolute once that mass falls below 1
        if (!std::isfinite(value) || error > 1e-8 * std::max(l1, 1.0) + floor)
            throw std::runtime_error(std::string(what) + ": quadrature did not reach tolerance 1e-8 (error " +
                                     fmt(error) + ", L1 " + fmt(l1) + ", noise floor " + fmt(floor) + ")");
        return value;
    }
};

// int_0^eps y^2 e^y (e^y - 1)^{-1-alpha} dy via y = eps r^{1/(2-alpha)}
double inner_weight_moment(double alpha, double eps) {
    double k = 1.0 / (2.0 - alpha);
    auto h = [&](double r) {
        double y = eps * std::pow(r, k);
        if (y == 0.0) return 1.0;
        return std::pow(y / std::expm1(y), 1.0 + alpha) * std::exp(y);
    };
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(h, 0.0, 1.0, 10, 1e-13);
    return std::pow(eps, 2.0 - alpha) * k * v;
}

// e^y (e^y - 1)^{-p}, without overflow for large y
double jump_weight(double y, double p) {
    if (y > 30.0) return std::exp((1.0 - p) * y) * std::pow(-std::expm1(-y), -p);
    return std::exp(y) * std::pow(std::expm1(y), -p);
}

// rounding noise of sum_j (f(.) - f0 - ...) integrated against y^{-p} over [a, b]
double cancellation_floor(double scale, double p, double a, double b) {
    constexpr double u = 64.0 * std::numeric_limits<double>::epsilon();
    double m = p == 1.0 ? std::log(b / a) : (std::pow(a, 1.0 - p) - std::pow(b, 1.0 - p)) / (p - 1.0);
    return u * scale * m;
}

// below this the integrands are replaced by their Taylor terms
constexpr double taylor_radius = 1e-5;
constexpr double quad_split = 1e-3;

}  // namespace

double killing_rate(double alpha, std::span<const double> rho, std::span<const double> x) {
    if (rho.size() != x.size() || x.empty()) throw std::invalid_argument("killing_rate: rho and x differ in length");
    double n = 0.0;
    for (double v : x) {
        if (!(v > 0.0)) throw std::invalid_argument("killing_rate: x must lie in the open orthant");
        n += v;
    }
    double q = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) q += StableParams(alpha, rho[k]).c2() * std::pow(x[k] / n, -alpha);
    return q / alpha;
}

void jump_vector_v(std::span<const double> theta, std::size_t j, double y, std::span<double> out) {
    if (j >= theta.size() || out.size() != theta.size()) throw std::invalid_argument("jump_vector_v: bad index");
    if (!(y > std::log1p(-theta[j]))) throw std::invalid_argument("jump_vector_v: y <= log(1 - theta_j)");
    double e = std::exp(-y), s = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        out[k] = k == j ? theta[k] * e - std::expm1(-y) : theta[k] * e;
        s += out[k];
    }
    for (double& v : out) v /= s;
}

SimplexPoint jump_vector_v(const SimplexPoint& theta, std::size_t j, double y) {
    std::vector<double> out(theta.dim());
    jump_vector_v(theta.components(), j, y, out);
    return SimplexPoint(std::move(out));
}

double jump_kernel_density(double alpha, std::span<const double> rho, std::span<const double> theta, std::size_t j,
                           double y) {
    if (j >= theta.size() || rho.size() != theta.size()) throw std::invalid_argument("jump_kernel_density: bad index");
    if (y == 0.0) throw std::invalid_argument("jump_kernel_density: y = 0");
    StableParams p(alpha, rho[j]);
    if (y > 0.0) return p.c1() * jump_weight(y, 1.0 + alpha);
    if (y <= std::log1p(-theta[j])) return 0.0;
    return p.c2() * std::exp(y) * std::pow(-std::expm1(y), -1.0 - alpha);
}

double corrective_constant(double alpha) { return stable_constant(alpha, 0.5); }

namespace {

double xi_power_sum(double alpha, std::span<const double> xi) {
    double s = 0.0;
    for (double v : xi) s += std::pow(v, -alpha);
    return s;
}

void check_corrective(double alpha, std::span<const double> xi, std::size_t j) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("corrective jump: alpha outside (0,2)");
    check_interior(xi);
    if (j >= xi.size()) throw std::invalid_argument("corrective jump: bad direction");
}

}  // namespace

double corrective_jump_density(double alpha, std::span<const double> xi, std::size_t j, double x) {
    check_corrective(alpha, xi, j);
    double u = std::exp(x) + 2.0 * xi[j] - 1.0;
    if (!(x > std::log1p(-xi[j]))) return 0.0;
    return alpha * std::pow(u, -1.0 - alpha) * std::exp(x) / xi_power_sum(alpha, xi);
}

double corrective_jump_density_raw(double alpha, std::span<const double> xi, std::size_t j, double x) {
    check_corrective(alpha, xi, j);
    if (!(x > std::log1p(-xi[j]))) return 0.0;
    double q = corrective_constant(alpha) * xi_power_sum(alpha, xi) / alpha;
    return std::pow(std::exp(x) + 2.0 * xi[j] - 1.0, -1.0 - alpha) * std::exp(x) / q;
}

double corrective_direction_probability(double alpha, std::span<const double> xi, std::size_t j) {
    check_corrective(alpha, xi, j);
    return std::pow(xi[j], -alpha) / xi_power_sum(alpha, xi);
}

double corrective_jump_cdf(double alpha, std::span<const double> xi, std::size_t j, double x) {
    check_corrective(alpha, xi, j);
    if (!(x > std::log1p(-xi[j]))) return 0.0;
    return 1.0 - std::pow(xi[j] / (std::exp(x) + 2.0 * xi[j] - 1.0), alpha);
}

CorrectiveJump corrective_jump_from_uniforms(double alpha, std::span<const double> xi, double u_dir, double u) {
    check_corrective(alpha, xi, 0);
    if (!(u >= 0.0 && u < 1.0 && u_dir >= 0.0 && u_dir <= 1.0)) throw std::invalid_argument("uniforms outside [0,1)");
    double total = xi_power_sum(alpha, xi), acc = 0.0;
    std::size_t j = xi.size() - 1;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        acc += std::pow(xi[k], -alpha) / total;
        if (u_dir < acc) {
            j = k;
            break;
        }
    }
    double ex = xi[j] * std::pow(1.0 - u, -1.0 / alpha) - 2.0 * xi[j] + 1.0;
    CorrectiveJump c{j, std::log(ex), std::vector<double>(xi.begin(), xi.end())};
    c.landing[j] += ex - 1.0;
    double s = 0.0;
    for (double& v : c.landing) {
        v = std::max(0.0, v / ex);
        s += v;
    }
    for (double& v : c.landing) v /= s;
    return c;
}

CorrectiveJump corrective_jump_sampler(double alpha, std::span<const double> xi, RngStream& rng) {
    double u_dir = rng.uniform();
    return corrective_jump_from_uniforms(alpha, xi, u_dir, rng.uniform());
}

// ---- test functions

double class_d_residual(const TestFunction& f, double x, std::size_t i, std::span<const double> theta) {
    check_theta(theta);
    if (i >= theta.size() || theta[i] != 0.0) throw std::invalid_argument("class_d_residual: theta_i must be 0");
    Buf g{};
    f.gradient(x, theta, std::span<double>(g.data(), theta.size() + 1));
    double r = g[0] + g[i + 1];
    for (std::size_t j = 0; j < theta.size(); ++j)
        if (j != i) r -= theta[j] * g[j + 1];
    return r;
}

TestFunction make_class_d(const OrthantFunction& g) {
    const std::size_t d = g.d;
    if (d == 0 || d > max_dim) throw std::invalid_argument("make_class_d: dimension out of range");
    {
        RngStream rng(0x6e65756du, 0);
        Buf w{}, gr{};
        for (int n = 0; n < 20; ++n) {
            std::size_t face = static_cast<std::size_t>(n) % d;
            for (std::size_t k = 0; k < d; ++k) w[k] = k == face ? 0.0 : 2.0 * rng.uniform();
            g.gradient(std::span<const double>(w.data(), d), std::span<double>(gr.data(), d));
            if (std::abs(gr[face]) > 1e-8)
                throw std::invalid_argument("make_class_d: " + g.name + " fails the Neumann condition on a face");
        }
    }
    TestFunction f;
    f.d = d;
    f.name = g.name;
    f.bound = g.bound;
    f.value = [g, d](double x, std::span<const double> th) {
        Buf z{};
        double e = std::exp(x);
        for (std::size_t k = 0; k < d; ++k) z[k] = e * th[k];
        return g.value(std::span<const double>(z.data(), d));
    };
    f.gradient = [g, d](double x, std::span<const double> th, std::span<double> out) {
        Buf z{}, gr{};
        double e = std::exp(x);
        for (std::size_t k = 0; k < d; ++k) z[k] = e * th[k];
        g.gradient(std::span<const double>(z.data(), d), std::span<double>(gr.data(), d));
        out[0] = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            out[0] += z[k] * gr[k];
            out[k + 1] = e * gr[k];
        }
    };
    if (g.hessian) {
        f.hessian = [g, d](double x, std::span<const double> th, std::span<double> out) {
            Buf z{}, gr{};
            std::array<double, max_dim * max_dim> h{};
            double e = std::exp(x);
            for (std::size_t k = 0; k < d; ++k) z[k] = e * th[k];
            std::span<const double> zs(z.data(), d);
            g.gradient(zs, std::span<double>(gr.data(), d));
            g.hessian(zs, std::span<double>(h.data(), d * d));
            const std::size_t n = d + 1;
            double zg = 0.0, zhz = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                zg += z[k] * gr[k];
                double hz = 0.0;
                for (std::size_t l = 0; l < d; ++l) hz += h[l * d + k] * z[l];
                zhz += z[k] * hz;
                out[k + 1] = out[(k + 1) * n] = e * (gr[k] + hz);
                for (std::size_t l = 0; l < d; ++l) out[(k + 1) * n + l + 1] = e * e * h[k * d + l];
            }
            out[0] = zg + zhz;
        };
    }
    return f;
}

OrthantFunction gaussian_bump(std::size_t d) {
    OrthantFunction g;
    g.d = d;
    g.name = "gaussian";
    g.bound = 1.0;
    g.value = [](std::span<const double> w) {
        double s = 0.0;
        for (double v : w) s += v * v;
        return std::exp(-s);
    };
    g.gradient = [v = g.value](std::span<const double> w, std::span<double> out) {
        double e = v(w);
        for (std::size_t k = 0; k < w.size(); ++k) out[k] = -2.0 * w[k] * e;
    };
    g.hessian = [v = g.value](std::span<const double> w, std::span<double> out) {
        double e = v(w);
        std::size_t d = w.size();
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l) out[k * d + l] = e * (4.0 * w[k] * w[l] - (k == l ? 2.0 : 0.0));
    };
    return g;
}

OrthantFunction rational_bump(std::size_t d) {
    OrthantFunction g;
    g.d = d;
    g.name = "rational";
    g.bound = 1.0;
    auto s2 = [](std::span<const double> w) {
        double s = 0.0;
        for (double v : w) s += v * v;
        return s;
    };
    g.value = [s2](std::span<const double> w) { return 1.0 / (1.0 + s2(w)); };
    g.gradient = [s2](std::span<const double> w, std::span<double> out) {
        double r = 1.0 / (1.0 + s2(w));
        for (std::size_t k = 0; k < w.size(); ++k) out[k] = -2.0 * w[k] * r * r;
    };
    g.hessian = [s2](std::span<const double> w, std::span<double> out) {
        double r = 1.0 / (1.0 + s2(w));
        std::size_t d = w.size();
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l)
                out[k * d + l] = 8.0 * w[k] * w[l] * r * r * r - (k == l ? 2.0 * r * r : 0.0);
    };
    return g;
}

OrthantFunction cosine_gaussian(std::size_t d) {
    struct H {
        double h, h1, h2;
    };
    auto parts = [](double u) {
        double e = std::exp(-0.5 * u * u), c = std::cos(u), s = std::sin(u);
        return H{c * e, (-s - u * c) * e, (-2.0 * c + 2.0 * u * s + u * u * c) * e};
    };
    OrthantFunction g;
    g.d = d;
    g.name = "cosine-gaussian";
    g.bound = 1.0;
    g.value = [parts](std::span<const double> w) {
        double p = 1.0;
        for (double v : w) p *= parts(v).h;
        return p;
    };
    g.gradient = [parts](std::span<const double> w, std::span<double> out) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            double p = 1.0;
            for (std::size_t l = 0; l < w.size(); ++l) p *= l == k ? parts(w[l]).h1 : parts(w[l]).h;
            out[k] = p;
        }
    };
    g.hessian = [parts](std::span<const double> w, std::span<double> out) {
        std::size_t d = w.size();
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l) {
                double p = 1.0;
                for (std::size_t m = 0; m < d; ++m) {
                    H h = parts(w[m]);
                    if (m == k && m == l) p *= h.h2;
                    else if (m == k || m == l) p *= h.h1;
                    else p *= h.h;
                }
                out[k * d + l] = p;
            }
    };
    return g;
}

OrthantFunction constant_function(std::size_t d, double c) {
    OrthantFunction g;
    g.d = d;
    g.name = "constant";
    g.bound = std::abs(c);
    g.value = [c](std::span<const double>) { return c; };
    g.gradient = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    g.hessian = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    return g;
}

// ---- generators

LevyTriple spectrally_positive_triple(double alpha) {
    StableParams p(alpha, 1.0 - 1.0 / alpha);
    if (!p.spectrally_positive()) throw std::invalid_argument("spectrally positive triple needs alpha in (1,2)");
    double c1 = p.c1();
    return {-c1 / (alpha - 1.0), 0.0, [c1, alpha](double u) { return c1 * std::pow(u, -1.0 - alpha); }};
}

double generator_orthant_levy(const OrthantFunction& g, std::span<const double> w, std::span<const LevyTriple> coords) {
    const std::size_t d = g.d;
    if (w.size() != d || coords.size() != d) throw std::invalid_argument("generator_orthant_levy: dimension mismatch");
    if (d > max_dim) throw std::invalid_argument("generator_orthant_levy: dimension too large");
    Buf gr{}, z{};
    std::array<double, max_dim * max_dim> h{};
    g.gradient(w, std::span<double>(gr.data(), d));
    bool need_h = false;
    for (const auto& c : coords) need_h = need_h || c.sigma != 0.0 || static_cast<bool>(c.density);
    if (need_h) {
        if (!g.hessian) throw std::invalid_argument("generator_orthant_levy: Hessian required");
        g.hessian(w, std::span<double>(h.data(), d * d));
    }
    const double g0 = g.value(w);
    double total = 0.0;
    Quad q;
    for (std::size_t i = 0; i < d; ++i) {
        const auto& c = coords[i];
        total += c.b * gr[i] + 0.5 * c.sigma * c.sigma * h[i * d + i];
        if (!c.density) continue;
        std::copy(w.begin(), w.end(), z.begin());
        std::span<const double> zs(z.data(), d);
        auto phi = [&](double u) {
            double dens = c.density(u);
            if (dens == 0.0) return 0.0;
            z[i] = w[i] + u;
            double v = g.value(zs) - g0 - (u < 1.0 ? gr[i] * u : 0.0);
            return v * dens;
        };
        auto in_log = [&](double s) {
            double u = std::exp(s);
            return phi(u) * u;
        };
        // Taylor term of the compensated integrand near 0
        double m2 = 0.0;
        {
            // u = radius e^{-s}; the decay in s is only e^{-(2-alpha)s}, hence exp_sinh rather than a cut
            auto f2 = [&](double s) {
                double u = taylor_radius * std::exp(-s);
                return u < 1e-100 ? 0.0 : u * u * c.density(u) * u;
            };
            m2 = boost::math::quadrature::exp_sinh<double>().integrate(f2, 0.0, inf, 1e-13);
        }
        q.value += 0.5 * h[i * d + i] * m2;
        double mass = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) { return c.density(std::exp(s)) * std::exp(s); }, std::log(taylor_radius), std::log(quad_split),
            8, 1e-10);
        q.finite(in_log, std::log(taylor_radius), std::log(quad_split),
                 64.0 * std::numeric_limits<double>::epsilon() * std::abs(g0) * mass);
        q.finite(in_log, std::log(quad_split), 0.0);
        q.tail(phi, 1.0);
    }
    return total + q.result("generator_orthant_levy");
}

const char* to_string(GeneratorVariant v) { return v == GeneratorVariant::literal ? "literal" : "reconciled"; }

GeneratorVariant parse_variant(const std::string& s) {
    if (s == "literal") return GeneratorVariant::literal;
    if (s == "reconciled") return GeneratorVariant::reconciled;
    throw std::invalid_argument("unknown generator variant: " + s);
}

double skorokhod_c1(double alpha) { return std::abs(std::tgamma(1.0 + alpha) * std::sin(pi * alpha) / pi); }

double generator_skorokhod_map(const TestFunction& f, double x, std::span<const double> theta, double alpha,
                               GeneratorVariant variant) {
    check_theta(theta);
    if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("Skorokhod generator needs alpha in (1,2)");
    const std::size_t d = theta.size();
    if (f.d != d) throw std::invalid_argument("generator_skorokhod_map: dimension mismatch");
    const std::size_t n = d + 1;
    const double c1 = skorokhod_c1(alpha);
    const double f0 = f(x, theta);
    Buf grad{}, cj{};
    f.gradient(x, theta, std::span<double>(grad.data(), n));
    double csum = 0.0, cabs = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        // (e_0 + e_j - theta) . grad f
        double c = grad[0] + grad[j + 1];
        for (std::size_t k = 0; k < d; ++k) c -= theta[k] * grad[k + 1];
        cj[j] = c;
        csum += c;
        cabs += std::abs(c);
    }
    const double ycut = std::log1p(std::exp(-x));
    // rounding in f near f0 scales with |f0| and the first derivatives, not |f0| alone
    double fscale = std::abs(f0) + std::abs(grad[0]);
    for (std::size_t k = 0; k < d; ++k) fscale += std::abs(grad[k + 1]);
    Buf v{};
    std::span<double> vs(v.data(), d);
    std::span<const double> vc(v.data(), d);

    if (variant == GeneratorVariant::literal) {
        if (std::abs(csum) > 1e-10 * (1.0 + cabs))
            throw std::domain_error("literal Skorokhod generator diverges: O(1) integrand against y^{-alpha} at y = 0");
        auto integrand = [&](double y) {
            double wgt = jump_weight(y, alpha);
            if (wgt == 0.0) return 0.0;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                jump_vector_v(theta, j, y, vs);
                s += f(x, vc) - f0 - (y < ycut ? cj[j] : 0.0);
            }
            return s * wgt;
        };
        auto in_log = [&](double s) { return integrand(std::exp(s)) * std::exp(s); };
        double eps = std::min(taylor_radius, ycut);
        Quad q;
        // near 0 the summed integrand is y sum_j (e_j - theta).grad_theta f = y (csum - d f_x)
        q.value += (csum - static_cast<double>(d) * grad[0]) * std::pow(eps, 2.0 - alpha) / (2.0 - alpha);
        std::vector<double> cuts{eps, quad_split, ycut};
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            if (cuts[k] >= eps)
                q.finite(in_log, std::log(cuts[k]), std::log(cuts[k + 1]),
                         cancellation_floor(d * fscale, alpha, cuts[k], cuts[k + 1]));
        q.tail(integrand, cuts.back());
        return c1 * q.result("generator_skorokhod_map");
    }

    if (!f.hessian) throw std::invalid_argument("reconciled generator needs the Hessian of f");
    Hess hs{};
    f.hessian(x, theta, std::span<double>(hs.data(), n * n));
    auto integrand = [&](double y) {
        double wgt = jump_weight(y, 1.0 + alpha);
        if (wgt == 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            jump_vector_v(theta, j, y, vs);
            s += f(x + y, vc) - f0 - (y < ycut ? std::expm1(y) * cj[j] : 0.0);
        }
        return s * wgt;
    };
    auto in_log = [&](double s) { return integrand(std::exp(s)) * std::exp(s); };
    double eps = std::min(taylor_radius, ycut);
    // second-order term: phi_j(y) - phi_j(0) - (e^y - 1) phi_j'(0) ~ (p'Hp + f_x - 2c_j) y^2 / 2, p = (1, e_j - theta)
    double coef = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        Buf p{};
        p[0] = 1.0;
        for (std::size_t k = 0; k < d; ++k) p[k + 1] = (k == j ? 1.0 : 0.0) - theta[k];
        double php = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) php += p[a] * hs[a * n + b] * p[b];
        coef += 0.5 * (php + grad[0] - 2.0 * cj[j]);
    }
    Quad q;
    q.value += coef * inner_weight_moment(alpha, eps);
    std::vector<double> cuts{eps, quad_split, ycut};
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k] >= eps)
            q.finite(in_log, std::log(cuts[k]), std::log(cuts[k + 1]),
                     cancellation_floor(d * fscale, 1.0 + alpha, cuts[k], cuts[k + 1]));
    q.tail(integrand, cuts.back());
    double drift = -c1 / (alpha - 1.0) * std::exp((alpha - 1.0) * x) * csum;
    return c1 * q.result("generator_skorokhod_map") + drift;
}

BmMapCoefficients bm_map_coefficients(std::span<const double> theta) {
    check_theta(theta);
    const std::size_t d = theta.size(), n = d + 1;
    const double dd = static_cast<double>(d);
    BmMapCoefficients c{std::vector<double>(n), std::vector<double>(n * n)};
    c.b[0] = -dd / 2.0;
    c.a[0] = dd;
    for (std::size_t i = 0; i < d; ++i) {
        double ti = theta[i];
        c.b[i + 1] = dd * ti - 1.0;
        c.a[i + 1] = c.a[(i + 1) * n] = 1.0 - dd * ti;
        for (std::size_t j = 0; j < d; ++j) {
            double tj = theta[j];
            c.a[(i + 1) * n + j + 1] = i == j ? (1.0 - ti) * (1.0 - ti) + (dd - 1.0) * ti * ti : dd * ti * tj - ti - tj;
        }
    }
    return c;
}

double generator_bm_map(const TestFunction& f, double x, std::span<const double> theta) {
    check_theta(theta);
    const std::size_t d = theta.size(), n = d + 1;
    if (f.d != d || !f.hessian) throw std::invalid_argument("generator_bm_map: needs a d-dimensional f with Hessian");
    Buf g{};
    Hess h{};
    f.gradient(x, theta, std::span<double>(g.data(), n));
    f.hessian(x, theta, std::span<double>(h.data(), n * n));
    const double dd = static_cast<double>(d);
    // coefficients inlined; bm_map_coefficients holds the same formulas
    double r = -0.5 * dd * g[0] + 0.5 * dd * h[0];
    for (std::size_t i = 0; i < d; ++i) {
        double ti = theta[i];
        r += (dd * ti - 1.0) * g[i + 1] + (1.0 - dd * ti) * h[i + 1];
        for (std::size_t j = 0; j < d; ++j) {
            double tj = theta[j];
            double a = i == j ? (1.0 - ti) * (1.0 - ti) + (dd - 1.0) * ti * ti : dd * ti * tj - ti - tj;
            r += 0.5 * a * h[(i + 1) * n + j + 1];
        }
    }
    return r;
}

SdeCoefficients sde_coefficients(std::span<const double> theta) {
    if (theta.size() != 2) throw std::invalid_argument("sde_coefficients: d = 2 only");
    check_theta(theta);
    const double t1 = theta[0], t2 = theta[1];
    const double s = t1 * t1 + t2 * t2;
    const double root = std::sqrt(std::max(0.0, (1.0 + s) * (1.0 + s) - 2.0));
    SdeCoefficients c;
    c.lambda2 = 1.0 + s + root;
    c.lambda3 = 2.0 / c.lambda2;  // conjugate root, computed stably
    const double S = std::sqrt(c.lambda2) + std::sqrt(c.lambda3);
    const double p = t1 * t2, m = t1 - t2;
    c.a = {-1.0, m, -m};
    c.b[0] = {2.0 * p / S + S / 2.0, -m / S};
    c.b[1] = {-m / S, S / 4.0 - p / S};
    c.b[2] = {m / S, p / S - S / 4.0};
    double edge = (t1 == 0.0 ? 1.0 : 0.0) - (t2 == 0.0 ? 1.0 : 0.0);
    c.gamma = {1.0, edge, -edge};
    return c;
}

std::array<double, 9> sde_sigma(std::span<const double> theta) {
    if (theta.size() != 2) throw std::invalid_argument("sde_sigma: d = 2 only");
    const double t1 = theta[0], t2 = theta[1], s = t1 * t1 + t2 * t2;
    return {2.0, t2 - t1, t1 - t2, t2 - t1, s, -s, t1 - t2, -s, s};
}

Table2D::Table2D(double x0, double x1, std::size_t nx, double y0, double y1, std::size_t ny,
                 const std::function<double(double, double)>& fn)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), nx_(nx), ny_(ny) {
    if (nx < 2 || ny < 2 || !(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("Table2D: degenerate grid");
    hx_ = (x1 - x0) / static_cast<double>(nx - 1);
    hy_ = (y1 - y0) / static_cast<double>(ny - 1);
    v_.resize(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            v_[i * ny + j] = fn(i + 1 == nx ? x1 : x0 + hx_ * i, j + 1 == ny ? y1 : y0 + hy_ * j);
}

double Table2D::operator()(double x, double y) const {
    if (!contains(x, y)) throw std::out_of_range("Table2D: point outside the grid");
    double fx = (x - x0_) / hx_, fy = (y - y0_) / hy_;
    auto i = std::min(static_cast<std::size_t>(fx), nx_ - 2);
    auto j = std::min(static_cast<std::size_t>(fy), ny_ - 2);
    double u = fx - i, v = fy - j;
    const double* r0 = &v_[i * ny_ + j];
    const double* r1 = &v_[(i + 1) * ny_ + j];
    return (1 - u) * ((1 - v) * r0[0] + v * r0[1]) + u * ((1 - v) * r1[0] + v * r1[1]);
}

}  // namespace lamperti
