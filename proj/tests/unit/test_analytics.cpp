#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "lamperti/analytics.hpp"
#include "lamperti/levy_sim.hpp"

using namespace lamperti;
using doctest::Approx;
using std::numbers::pi;

namespace {

std::vector<double> random_theta(RngStream& r, std::size_t d) {
    std::vector<double> t(d);
    double s = 0.0;
    for (auto& v : t) s += v = r.exponential();
    for (auto& v : t) v /= s;
    return t;
}

}  // namespace

TEST_CASE("killing rate") {
    std::vector<double> rho{0.5, 0.5};
    CHECK(killing_rate(1.0, rho, std::vector<double>{1, 1}) == Approx(4 / pi).epsilon(1e-14));
    double q1 = killing_rate(1.0, rho, std::vector<double>{0.25, 0.75});
    double q0 = killing_rate(1.0, rho, std::vector<double>{0.5, 0.5});
    CHECK(q1 / q0 == Approx(4.0 / 3.0).epsilon(1e-14));

    std::vector<double> x{0.3, 1.1};
    for (double lambda : {0.5, 2.0, 10.0}) {
        std::vector<double> lx{lambda * x[0], lambda * x[1]};
        CHECK(killing_rate(1.3, rho, lx) == Approx(killing_rate(1.3, rho, x)).epsilon(1e-15));
    }
    std::vector<double> sp{1.0 / 3.0, 1.0 / 3.0};
    CHECK(killing_rate(1.5, sp, x) == 0.0);
}

TEST_CASE("jump vector v") {
    SimplexPoint th({0.3, 0.7});
    CHECK(jump_vector_v(th, 1, 0.0) == th);
    auto v = jump_vector_v(th, 0, std::log(2.0));
    CHECK(v[0] == Approx(0.65).epsilon(1e-15));
    CHECK(v[1] == Approx(0.35).epsilon(1e-15));
    auto w = jump_vector_v(SimplexPoint({0.5, 0.5}), 1, std::log(0.8));
    CHECK(w[0] == Approx(0.625).epsilon(1e-15));
    CHECK(w[1] == Approx(0.375).epsilon(1e-15));
}

TEST_CASE("jump kernel density") {
    std::vector<double> rho{0.5, 0.5}, th{0.5, 0.5};
    CHECK(jump_kernel_density(1.0, rho, th, 0, std::log(2.0)) == Approx(2 / pi).epsilon(1e-14));
    CHECK(jump_kernel_density(1.0, rho, th, 0, std::log(0.5) - 1e-9) == 0.0);
    CHECK(jump_kernel_density(1.0, rho, th, 1, -5.0) == 0.0);
    CHECK(std::isfinite(jump_kernel_density(1.0, rho, th, 0, 800.0)));
}

TEST_CASE("orthant-exiting Levy mass equals the killing rate") {
    // Jumps of size u > x_j in coordinate j leave the orthant; in jump-size units the mass is c2 x_j^-alpha / alpha.
    // In y = log(1 - u/|x|_1) the same integral only reaches u < |x|_1: (x_j^-alpha - 1)/alpha per unit c2.
    using boost::math::quadrature::exp_sinh;
    exp_sinh<double> es;
    for (double alpha : {0.6, 1.0, 1.4}) {
        std::vector<double> rho{0.5, 0.45}, th{0.3, 0.7};
        double total = 0.0, logside = 0.0, expected = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            StableParams p(alpha, rho[j]);
            total += es.integrate([&](double u) { return p.levy_density(-u); }, th[j], inf);
            double top = std::log1p(-th[j]);
            logside += p.c2() * es.integrate(
                [&](double s) { double y = top - s; return std::exp(y) * std::pow(-std::expm1(y), -1 - alpha); }, 0.0, inf);
            expected += p.c2() * (std::pow(th[j], -alpha) - 1) / alpha;
        }
        CHECK(total == Approx(killing_rate(alpha, rho, th)).epsilon(1e-8));
        CHECK(logside == Approx(expected).epsilon(1e-8));
        CHECK(logside < total);
    }
}

TEST_CASE("corrective jump law") {
    std::vector<double> xi{0.5, 0.5};
    auto med = corrective_jump_from_uniforms(1.0, xi, 0.2, 0.5);
    CHECK(med.direction == 0);
    CHECK(std::abs(med.dxi) <= 1e-15);
    CHECK(med.landing[0] == Approx(0.5).epsilon(1e-15));
    CHECK(med.landing[1] == Approx(0.5).epsilon(1e-15));

    auto low = corrective_jump_from_uniforms(1.0, xi, 0.7, 0.0);
    CHECK(low.direction == 1);
    CHECK(low.dxi == Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(low.landing[1] == Approx(0.0).epsilon(1e-15));
    CHECK(low.landing[0] == Approx(1.0).epsilon(1e-15));

    double q = corrective_constant(1.0) * 4.0;  // c (2 + 2) / alpha
    CHECK(corrective_jump_density_raw(1.0, xi, 0, std::log(2.0)) * q == Approx(0.5).epsilon(1e-15));
    CHECK(corrective_direction_probability(1.0, std::vector<double>{0.25, 0.75}, 0) == Approx(0.75));
}

TEST_CASE("corrective density integrates to one; raw bracket to 1/c") {
    using boost::math::quadrature::exp_sinh;
    exp_sinh<double> es;
    RngStream r(3, 0);
    for (int n = 0; n < 20; ++n) {
        double alpha = 0.2 + 1.7 * r.uniform();
        auto xi = random_theta(r, 2 + n % 3);
        double mass = 0.0, raw = 0.0;
        for (std::size_t j = 0; j < xi.size(); ++j) {
            double lo = std::log1p(-xi[j]);
            // support (lo, inf) shifted to (0, inf); the density decays like e^{-alpha x}
            auto cut = [](double s, double v) { return s > 600.0 ? 0.0 : v; };
            mass += es.integrate(
                [&](double s) { return cut(s, corrective_jump_density(alpha, xi, j, lo + std::min(s, 600.0))); }, 0.0, inf);
            raw += es.integrate(
                [&](double s) { return cut(s, corrective_jump_density_raw(alpha, xi, j, lo + std::min(s, 600.0))); }, 0.0,
                inf);
            auto dens = [&](double s) { return corrective_jump_density(alpha, xi, j, lo + s); };
            double head = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(dens, 0.0, 0.7, 10, 1e-13);
            CHECK(corrective_jump_cdf(alpha, xi, j, lo + 0.7) ==
                  Approx(head / corrective_direction_probability(alpha, xi, j)).epsilon(1e-9));
        }
        CHECK(mass == Approx(1.0).epsilon(1e-9));
        CHECK(raw == Approx(1.0 / corrective_constant(alpha)).epsilon(1e-9));
    }
}

TEST_CASE("class-D residual on the faces") {
    auto f = make_class_d(gaussian_bump(2));
    std::vector<double> g(3), a{0.0, 1.0}, b{1.0, 0.0};
    f.gradient(0.4, a, g);
    CHECK(class_d_residual(f, 0.4, 0, a) == Approx(g[0] + g[1] - g[2]));
    f.gradient(0.4, b, g);
    CHECK(class_d_residual(f, 0.4, 1, b) == Approx(g[0] - g[1] + g[2]));
    CHECK_THROWS_AS(class_d_residual(f, 0.4, 0, b), std::invalid_argument);

    RngStream r(5, 0);
    for (auto gfun : {gaussian_bump(2), rational_bump(3), cosine_gaussian(2), constant_function(3)}) {
        auto h = make_class_d(gfun);
        for (int n = 0; n < 100; ++n) {
            auto th = random_theta(r, gfun.d);
            std::size_t i = n % gfun.d;
            double lost = th[i];
            th[i] = 0.0;
            for (auto& v : th) v /= 1.0 - lost;
            CHECK(std::abs(class_d_residual(h, 4 * r.uniform() - 2, i, th)) <= 1e-10);
        }
    }
    auto one = make_class_d(constant_function(2));
    CHECK(one(0.3, b) == 1.0);
}

TEST_CASE("make_class_d rejects functions without the Neumann condition") {
    OrthantFunction g;
    g.d = 2;
    g.name = "cos-exp";
    g.value = [](std::span<const double> w) { return std::cos(w[0]) * std::exp(-w[0]) * std::cos(w[1]) * std::exp(-w[1]); };
    g.gradient = [](std::span<const double> w, std::span<double> out) {
        auto h = [](double v) { return std::cos(v) * std::exp(-v); };
        auto dh = [](double v) { return -(std::sin(v) + std::cos(v)) * std::exp(-v); };
        out[0] = dh(w[0]) * h(w[1]);
        out[1] = h(w[0]) * dh(w[1]);
    };
    CHECK_THROWS_AS(make_class_d(g), std::invalid_argument);
}

TEST_CASE("orthant Levy generator: BM specialization and constants") {
    auto g = gaussian_bump(2);
    std::vector<double> w{0.3, 0.8};
    std::vector<LevyTriple> bm{{0.0, 1.0, {}}, {0.0, 1.0, {}}};
    std::vector<double> h(4);
    g.hessian(w, h);
    CHECK(generator_orthant_levy(g, w, bm) == Approx(0.5 * (h[0] + h[3])).epsilon(1e-14));
    auto tr = spectrally_positive_triple(1.5);
    std::vector<LevyTriple> st{tr, tr};
    CHECK(std::abs(generator_orthant_levy(constant_function(2), w, st)) <= 1e-14);
}

TEST_CASE("Skorokhod MAP generator") {
    auto one = make_class_d(constant_function(2));
    std::vector<double> th{0.4, 0.6};
    CHECK(generator_skorokhod_map(one, 0.2, th, 1.5, GeneratorVariant::reconciled) == 0.0);
    CHECK(generator_skorokhod_map(one, 0.2, th, 1.5, GeneratorVariant::literal) == 0.0);
    CHECK(skorokhod_c1(1.5) == Approx(-std::tgamma(2.5) * std::sin(1.5 * pi) / pi));
    CHECK_THROWS_AS(generator_skorokhod_map(make_class_d(gaussian_bump(2)), 0.2, th, 1.5, GeneratorVariant::literal),
                    std::domain_error);
}

TEST_CASE("reconciled Skorokhod generator is the time-changed orthant generator") {
    RngStream r(8, 0);
    for (auto g : {gaussian_bump(2), rational_bump(2), cosine_gaussian(2)}) {
        auto f = make_class_d(g);
        for (int n = 0; n < 8; ++n) {
            double alpha = 1.1 + 0.8 * r.uniform(), x = 2 * r.uniform() - 1.2;
            auto th = random_theta(r, 2);
            std::vector<double> w{std::exp(x) * th[0], std::exp(x) * th[1]};
            auto tr = spectrally_positive_triple(alpha);
            std::vector<LevyTriple> st{tr, tr};
            double lhs = generator_skorokhod_map(f, x, th, alpha, GeneratorVariant::reconciled);
            double rhs = std::exp(alpha * x) * generator_orthant_levy(g, w, st);
            CHECK(lhs == Approx(rhs).epsilon(1e-6));
        }
    }
}

TEST_CASE("BM-MAP coefficients") {
    auto c = bm_map_coefficients(std::vector<double>{0.5, 0.5});
    CHECK(c.b == std::vector<double>{-1, 0, 0});
    CHECK(c.a[0] == 2.0);
    CHECK(c.a[1] == 0.0);
    CHECK(c.a[2] == 0.0);
    CHECK(c.a[4] == 0.5);
    CHECK(c.a[8] == 0.5);
    CHECK(c.a[5] == -0.5);
    CHECK(bm_map_coefficients(std::vector<double>{0.2, 0.3, 0.5}).b[0] == -1.5);
}

TEST_CASE("BM-MAP generator equals e^{2x} times half the Laplacian of g") {
    RngStream r(9, 0);
    for (int n = 0; n < 1000; ++n) {
        std::size_t d = 2 + n % 2;
        auto g = n % 3 == 0 ? gaussian_bump(d) : n % 3 == 1 ? rational_bump(d) : cosine_gaussian(d);
        auto f = make_class_d(g);
        auto th = random_theta(r, d);
        double x = 1.6 * r.uniform() - 1.0, e = std::exp(x);
        std::vector<double> w(d);
        for (std::size_t k = 0; k < d; ++k) w[k] = e * th[k];
        const double h = 1e-4;
        double lap = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            auto up = w, dn = w;
            up[i] += h;
            dn[i] -= h;
            lap += (g.value(up) - 2 * g.value(w) + g.value(dn)) / (h * h);
        }
        CHECK(generator_bm_map(f, x, th) == Approx(e * e * 0.5 * lap).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("SDE coefficients") {
    auto c = sde_coefficients(std::vector<double>{0.5, 0.5});
    CHECK(c.lambda2 == Approx(2.0).epsilon(1e-15));
    CHECK(c.lambda3 == Approx(1.0).epsilon(1e-15));
    CHECK(c.b[0][0] == Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(c.b[0][1] == 0.0);
    CHECK(c.b[1][0] == 0.0);
    CHECK(c.b[1][1] == Approx(0.5).epsilon(1e-15));
    CHECK(c.a[1] == 0.0);

    RngStream r(10, 0);
    for (int n = 0; n < 1000; ++n) {
        auto th = random_theta(r, 2);
        auto s = sde_coefficients(th);
        CHECK(s.lambda2 * s.lambda3 == Approx(2.0).epsilon(1e-12));
        auto sig = sde_sigma(th);
        double q = th[0] * th[0] + th[1] * th[1];
        CHECK(sig[0] == 2.0);
        CHECK(sig[4] == Approx(q));
        CHECK(sig[5] == Approx(-q));
        CHECK(sig[1] == Approx(th[1] - th[0]));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = s.b[i][0] * s.b[j][0] + 2 * s.b[i][1] * s.b[j][1];
                CHECK(std::abs(v - sig[3 * i + j]) <= 1e-10);
            }
    }
}

TEST_CASE("closed forms depend on the modulator only through the angle") {
    std::vector<double> rho{0.5, 0.4};
    std::vector<double> x{0.2, 0.6}, y{0.25, 0.75};
    CHECK(killing_rate(1.2, rho, x) == killing_rate(1.2, rho, y));
}

TEST_CASE("bilinear table") {
    Table2D t(0, 1, 11, 0, 2, 21, [](double x, double y) { return 2 * x + 3 * y + 1; });
    CHECK(t(0.33, 1.27) == Approx(2 * 0.33 + 3 * 1.27 + 1).epsilon(1e-13));
    CHECK(t.contains(1.0, 2.0));
    CHECK(!t.contains(1.01, 0.0));
}
