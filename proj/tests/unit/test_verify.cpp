#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lamperti/verify.hpp"

using namespace lamperti;
using doctest::Approx;

TEST_CASE("report verdicts") {
    auto m = TestReport::moment("m", 1.1, 0.05, 1.0, 10);
    CHECK(m.pass);
    CHECK(m.p_value == Approx(std::erfc(2.0 / std::sqrt(2.0))));
    CHECK_FALSE(TestReport::moment("m", 1.2, 0.05, 1.0, 10).pass);
    CHECK(TestReport::distribution("d", 0.1, 0.02, "U", 10).pass);
    CHECK_FALSE(TestReport::distribution("d", 0.1, 0.005, "U", 10).pass);
    CHECK(TestReport::exact("e", 1.0 + 1e-13, 1.0, 1e-12).pass);
    auto c = TestReport::composite("c", {m, TestReport::exact("e", 2.0, 1.0, 0.5)});
    CHECK_FALSE(c.pass);
}

TEST_CASE("report JSON roundtrip keeps non-finite values") {
    auto m = TestReport::moment("m", inf, 0.0, 1.0, 3);
    m.note = "x";
    auto c = TestReport::composite("c", {m, TestReport::distribution("d", 0.2, 0.4, "tag", 5, 0.05)});
    auto back = report_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.parts[0].estimate == inf);
    CHECK(back.parts[1].significance == 0.05);
}

TEST_CASE("Kolmogorov distribution and KS tests") {
    CHECK(kolmogorov_tail(1.358) == Approx(0.05).epsilon(2e-3));
    CHECK(kolmogorov_tail(1.628) == Approx(0.01).epsilon(5e-3));
    CHECK(kolmogorov_tail(0.2) == Approx(1.0).epsilon(1e-9));
    CHECK(kolmogorov_tail(0.8) == Approx(0.5441424).epsilon(1e-6));

    RngStream r(1, 0);
    std::vector<double> u, v, w;
    for (int k = 0; k < 5000; ++k) {
        u.push_back(r.uniform());
        v.push_back(r.uniform());
        w.push_back(r.uniform() * 0.9);
    }
    CHECK(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
    CHECK(ks_two_sample(u, v).p_value > 0.01);
    CHECK(ks_two_sample(u, w).p_value < 1e-6);
    CHECK(ks_one_sample(w, [](double x) { return std::clamp(x, 0.0, 1.0); }).statistic == Approx(0.1).epsilon(0.2));
}

TEST_CASE("mean statistic") {
    MeanStat s;
    for (double v : {1.0, 2.0, 3.0, 4.0}) s.add(v);
    CHECK(s.mean() == 2.5);
    CHECK(s.variance() == Approx(5.0 / 3.0));
    CHECK(s.se() == Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("killing rate estimate, small ensemble") {
    KillingConfig c;
    c.n_paths = 4000;
    c.seed = 5;
    std::vector<double> life;
    auto r = estimate_killing_rate(c, &life);
    CHECK(r.reference == Approx(4 / std::numbers::pi));
    CHECK_MESSAGE(r.pass, to_json(r).dump());
    CHECK(life.size() == 4000);
    // reproducible bit for bit
    CHECK(to_json(estimate_killing_rate(c)) == to_json(r));
}

TEST_CASE("compensation, small ensemble and the empty-jump limit") {
    CompensationConfig c;
    c.n_paths = 2000;
    c.horizon = 0.2;
    c.seed = 9;
    std::vector<JumpFunctional> fs{functional_one(), functional_upward()};
    auto r = compensation_test(c, fs);
    CHECK_MESSAGE(r.pass, to_json(r).dump());

    c.cutoff = 60.0;
    c.n_paths = 200;
    auto e = compensation_test(c, fs);
    for (const auto& p : e.parts) CHECK(std::abs(p.estimate) <= 1e-15);

    std::vector<JumpFunctional> bad{{"1/y", [](double, double y, std::span<const double>, std::span<const double>) {
                                         return 1.0 / (y - 10.0);
                                     },
                                     [](double y) { return 1.0 / y; }}};
    CHECK_THROWS_AS(compensation_test(c, bad), std::invalid_argument);
}

TEST_CASE("kernel mass identity over random parameters") {
    auto r = kernel_mass_identity(3, 50);
    CHECK(r.pass);
    CHECK(r.estimate <= 1e-8);
}

TEST_CASE("corrective jumps, small ensemble") {
    CorrectiveConfig c;
    c.n_paths = 2000;
    c.bins = 2;
    c.seed = 8;
    std::vector<CorrectiveEvent> ev;
    auto r = corrective_jump_gof(c, &ev);
    CHECK_MESSAGE(r.pass, to_json(r).dump());
    CHECK(ev.size() > 1000);
    for (const auto& e : ev) {
        CHECK(e.dxi > std::log1p(-e.before[e.direction]));
        CHECK(e.after[0] + e.after[1] == Approx(1.0));
    }
    c.bins = 50;
    CHECK_THROWS_AS(corrective_jump_gof(c), std::runtime_error);
}

TEST_CASE("Dynkin: constants give zero defect exactly, BM-MAP passes on a small ensemble") {
    DynkinConfig c;
    c.n_paths = 300;
    c.seed = 3;
    std::vector<TestFunction> one{make_class_d(constant_function(2))};
    auto z = dynkin_test(c, one);
    CHECK(z.pass);
    CHECK(z.parts.at(0).parts.at(0).estimate == 0.0);

    c.n_paths = 2000;
    std::vector<TestFunction> fs{make_class_d(gaussian_bump(2)), make_class_d(rational_bump(2))};
    auto r = dynkin_test(c, fs);
    CHECK_MESSAGE(r.pass, to_json(r).dump());
}

TEST_CASE("Dynkin: the literal Skorokhod variant is reported as failing to evaluate") {
    DynkinConfig c;
    c.model = Model::skorokhod_stable;
    c.n_paths = 50;
    std::vector<TestFunction> fs{make_class_d(gaussian_bump(2))};
    std::vector<GeneratorVariant> v{GeneratorVariant::literal};
    auto r = dynkin_test(c, fs, v);
    CHECK_FALSE(r.pass);
    CHECK(to_json(r).dump().find("diverg") != std::string::npos);
}

TEST_CASE("SDE: drift of Theta1 vanishes at the centre; small comparison passes") {
    CHECK(sde_coefficients(std::vector<double>{0.5, 0.5}).a[1] == 0.0);
    RngStream r(4, 0);
    auto m = sde_simulate(std::vector<double>{0.5, 0.5}, 0.05, 1e-3, r);
    m.validate();
    CHECK(m.times.back() <= 0.05 + 1e-12);
    for (std::size_t k = 0; k < m.size(); ++k) {
        CHECK(m.theta(k)[0] >= 0.0);
        CHECK(m.theta(k)[0] <= 1.0);
    }

    SdeConfig c;
    c.n_paths = 2000;
    c.dt = 1e-3;
    c.seed = 6;
    auto t = sde_vs_transform_test(c);
    CHECK_MESSAGE(t.pass, to_json(t).dump());
    c.theta0 = {0.01, 0.99};
    c.t = 0.05;
    c.dt = 0.01;
    c.n_paths = 100;
    CHECK_THROWS(sde_vs_transform_test(c));
}

TEST_CASE("sampler fidelity, small ensemble") {
    SamplerConfig c;
    c.n_cf = 20000;
    c.n_paths = 5000;
    c.grid_dt = 1e-2;
    c.n_tail = 2000;
    auto r = sampler_fidelity(c);
    CHECK_MESSAGE(r.pass, to_json(r).dump());
}

TEST_CASE("algebraic identities") {
    auto r = algebraic_identities(2, 200);
    CHECK_MESSAGE(r.pass, to_json(r).dump());
}
