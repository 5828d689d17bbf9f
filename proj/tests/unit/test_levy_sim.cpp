#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lamperti/levy_sim.hpp"
#include "lamperti/verify.hpp"

using namespace lamperti;
using doctest::Approx;

TEST_CASE("stable constants") {
    StableParams cauchy(1.0, 0.5);
    CHECK(cauchy.c1() == Approx(1.0 / std::numbers::pi).epsilon(1e-14));
    CHECK(cauchy.c2() == Approx(0.3183098861837907).epsilon(1e-14));
    CHECK(cauchy.two_sided());

    StableParams sp(1.5, 1.0 / 3.0);
    CHECK(sp.c2() == 0.0);
    CHECK(sp.spectrally_positive());
    CHECK(sp.c1() > 0.0);

    auto desc = stable_descriptors(sp);
    CHECK(desc.c1 == sp.c1());
    CHECK(desc.levy_density(-1.0) == 0.0);
    CHECK(desc.levy_density(2.0) == Approx(sp.c1() * std::pow(2.0, -2.5)));

    CHECK_THROWS_AS(StableParams(2.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(StableParams(1.5, 0.1), std::invalid_argument);  // negative c1
    CHECK_THROWS_AS(StableParams(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("symmetric characteristic exponent is |z|^alpha") {
    for (double alpha : {0.3, 1.0, 1.5, 1.9}) {
        StableParams p(alpha, 0.5);
        for (double z : {-3.0, -0.5, 0.25, 1.0, 2.0}) {
            auto psi = p.char_exponent(z);
            CHECK(psi.real() == Approx(std::pow(std::abs(z), alpha)).epsilon(1e-13));
            CHECK(std::abs(psi.imag()) <= 1e-14);
        }
    }
}

TEST_CASE("random admissible parameters: c2 >= 0 and vanishes only at alpha(1-rho) = 1") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int zeros = 0;
    for (int n = 0; n < 1000; ++n) {
        double alpha = 0.05 + 1.9 * u(gen);
        double lo = alpha > 1.0 ? 1.0 - 1.0 / alpha : 0.0, hi = alpha > 1.0 ? 1.0 / alpha : 1.0;
        double rho = n % 10 == 0 && alpha > 1.0 ? lo : lo + (hi - lo) * (0.001 + 0.998 * u(gen));
        StableParams p(alpha, rho);
        CHECK(p.c2() >= 0.0);
        CHECK(p.c1() == Approx(std::tgamma(1 + alpha) * std::sin(std::numbers::pi * alpha * rho) / std::numbers::pi)
                            .epsilon(1e-12));
        bool integer = std::abs(alpha * (1 - rho) - 1.0) <= 1e-10;
        CHECK((p.c2() == 0.0) == integer);
        zeros += integer;
    }
    CHECK(zeros > 0);
}

TEST_CASE("Levy tail mass scales as r^-alpha") {
    StableParams p(1.3, 0.45);
    double base = p.tail_mass(1.0);
    for (double r : {0.1, 0.5, 2.0, 10.0}) CHECK(p.tail_mass(r) == Approx(base * std::pow(r, -1.3)).epsilon(1e-13));
    // d-dimensional measure on coordinate axes: {|x|_1 > r} has mass sum_i tail_i(r)
    StableParams q(0.7, 0.2);
    auto tail = [&](double r) { return p.tail_mass(r) + q.tail_mass(r); };
    CHECK(tail(2.0) / tail(1.0) != Approx(std::pow(2.0, -1.3)));  // mixed indices: no single power
    CHECK(p.tail_mass(4.0) / p.tail_mass(2.0) == Approx(std::pow(2.0, -1.3)));
}

TEST_CASE("seeded streams are deterministic and substreams independent") {
    RngStream a(9, 3), b(9, 3), c(9, 4), s(9, 3, 1);
    for (int k = 0; k < 100; ++k) {
        auto x = a(), y = b();
        CHECK(x == y);
        CHECK(x != c());
        (void)s();
    }
    RngStream r(1, 0);
    for (int k = 0; k < 1000; ++k) {
        double v = r.uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("golden draws") {
    RngStream r(42, 0);
    double x = sample_stable_increment(StableParams(1.5, 1.0 / 3.0), 1.0, r);
    CHECK(x == Approx(-0.38454305499666158).epsilon(1e-15));
    RngStream b(7, 0);
    auto path = sample_bm_path(std::vector<double>{0.0, 1.0}, b);
    CHECK(path.value(1)[0] == Approx(-0.30877868441908607).epsilon(1e-15));
}

TEST_CASE("empirical characteristic function of the Cauchy increment") {
    std::vector<double> z{0.5, 1.0, 2.0};
    auto r = cf_test(StableParams(1.0, 0.5), 100000, z, 12);
    CHECK(r.pass);
    auto zero = cf_test(StableParams(1.0, 0.5), 10000, std::vector<double>{0.0}, 12);
    CHECK(zero.pass);
    for (const auto& p : zero.parts) CHECK(p.estimate == p.reference);
    auto skew = cf_test(StableParams(1.5, 1.0 / 3.0), 100000, std::vector<double>{1.0}, 13);
    CHECK(skew.pass);
}

TEST_CASE("increment over dt equals dt^(1/alpha) times a unit increment in law") {
    StableParams p(1.5, 0.4);
    double dt = 0.01;
    std::vector<double> a, b;
    RngStream r1(21, 0), r2(21, 1);
    for (int k = 0; k < 100000; ++k) {
        a.push_back(sample_stable_increment(p, dt, r1));
        b.push_back(std::pow(dt, 1 / 1.5) * sample_stable_increment(p, 1.0, r2));
    }
    CHECK(ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("stable paths: infinite threshold gives no marks, Cauchy mark count is 2/pi") {
    auto grid = uniform_grid(1.0, 0.01);
    RngStream r(5, 0);
    auto p = sample_stable_path(StableParams(1.0, 0.5), grid, inf, r);
    for (const auto& m : p.marks) CHECK(!m);
    CHECK(p.size() == grid.size());

    MeanStat count;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        RngStream rk(6, k);
        auto q = sample_stable_path(StableParams(1.0, 0.5), grid, 1.0, rk);
        double n = 0;
        for (const auto& m : q.marks) n += m.has_value();
        count.add(n);
    }
    CHECK(std::abs(count.mean() - 2 / std::numbers::pi) <= 3 * count.se());
}

TEST_CASE("Brownian cells record a minimum below both endpoints") {
    RngStream r(8, 0);
    auto g = uniform_grid(1.0, 0.1);
    auto p = sample_bm_path(g, r, 0.3);
    CHECK(p.cell_min.size() == p.size());
    for (std::size_t k = 1; k < p.size(); ++k) {
        CHECK(p.cell_min[k] <= p.value(k)[0]);
        CHECK(p.cell_min[k] <= p.value(k - 1)[0]);
    }
}
