#include <doctest.h>

#include <cmath>

#include "lamperti/ssmp.hpp"
#include "lamperti/verify.hpp"

using namespace lamperti;
using doctest::Approx;

namespace {

SkeletonPath driver(std::vector<double> times, std::vector<double> values, std::vector<std::optional<JumpMark>> marks = {}) {
    SkeletonPath p(1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::optional<JumpMark> m = k < marks.size() ? marks[k] : std::nullopt;
        p.push(times[k], {&values[k], 1}, k ? (m ? EventTag::jump : EventTag::grid) : EventTag::start, m);
    }
    p.horizon = times.back();
    return p;
}

SsmpConfig config(Model m, double alpha, double rho, double horizon) {
    SsmpConfig c;
    c.model = m;
    c.d = 2;
    if (m != Model::skorokhod_bm) c.params.assign(2, StableParams(alpha, rho));
    c.horizon = horizon;
    c.grid_dt = horizon / 200;
    c.delta = 0.2;
    return c;
}

}  // namespace

TEST_CASE("orthant maps") {
    std::vector<double> x{-0.2, 0.7};
    CHECK(reflect_orthant(x) == std::vector<double>{0.2, 0.7});
    CHECK(negate_coordinate(x, 0) == std::vector<double>{0.2, 0.7});
    CHECK(negate_coordinate(x, 1) == std::vector<double>{-0.2, -0.7});
}

TEST_CASE("model configuration is validated") {
    CHECK(parse_model("skorokhod-stable") == Model::skorokhod_stable);
    CHECK_THROWS_AS(parse_model("reflected"), std::invalid_argument);
    CHECK_NOTHROW(config(Model::killed, 1.0, 0.5, 1).validate());
    CHECK_THROWS_AS(config(Model::symmetric, 1.0, 0.4, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(config(Model::skorokhod_stable, 1.5, 0.5, 1).validate(), std::invalid_argument);
    CHECK_NOTHROW(config(Model::skorokhod_stable, 1.5, 1.0 / 3.0, 1).validate());
    CHECK(config(Model::skorokhod_bm, 0, 0, 1).index() == 2.0);
    auto mixed = config(Model::killed, 1.0, 0.5, 1);
    mixed.params[1] = StableParams(1.2, 0.5);
    CHECK_THROWS_AS(mixed.validate(), std::invalid_argument);
}

TEST_CASE("killing at the first downward exit") {
    std::vector<SkeletonPath> x{driver({0, 1, 2, 3}, {1, 1.5, -0.3, 2}, {std::nullopt, std::nullopt, JumpMark{0, -1.8}}),
                                driver({0, 1, 2, 3}, {1, 1, 1, 1})};
    auto z = kill_at_orthant_exit(x);
    CHECK(z.end == PathEnd::killed);
    CHECK(z.end_time() == 2.0);
    CHECK(z.tags.back() == EventTag::kill);
    CHECK(z.marks.back() == JumpMark{0, -1.8});
    CHECK(l1_norm(z.value(z.size() - 1)) == 0.0);

    std::vector<SkeletonPath> y{driver({0, 1, 2}, {1, 2, 3}), driver({0, 1, 2}, {1, 0.5, 0.7})};
    auto a = kill_at_orthant_exit(y);
    CHECK(a.end == PathEnd::alive);
    CHECK(a.size() == 3);
    CHECK(a.value(2)[0] == 3.0);
    CHECK(a.value(2)[1] == 0.7);
}

TEST_CASE("reflection is idle inside the orthant") {
    std::vector<SkeletonPath> y{driver({0, 1, 2}, {1, 2, 3}), driver({0, 1, 2}, {1, 0.5, 0.7})};
    auto r = reflect_symmetric(y);
    for (auto t : r.tags) CHECK(t != EventTag::corrective);
    CHECK(r.values == std::vector<double>{1, 1, 2, 0.5, 3, 0.7});
    auto s = skorokhod_reflect(y);
    CHECK(s.values == r.values);
}

TEST_CASE("symmetric reflection flips the exiting coordinate") {
    std::vector<SkeletonPath> y{driver({0, 1, 2}, {1, -0.2, 0.3}), driver({0, 1, 2}, {0.7, 0.7, 0.7})};
    auto r = reflect_symmetric(y);
    CHECK(r.tags[1] == EventTag::corrective);
    CHECK(r.value(1)[0] == Approx(0.2));
    // the flipped increment -0.5 exits again; the second flip lands on |X| = 0.3
    CHECK(r.tags[2] == EventTag::corrective);
    CHECK(r.value(2)[0] == Approx(0.3).epsilon(1e-14));
}

TEST_CASE("Skorokhod reflection adds the running minimum") {
    std::vector<SkeletonPath> y{driver({0, 1, 2, 3}, {1, -0.5, 0.2, -0.1}), driver({0, 1, 2, 3}, {1, 1, 1, 1})};
    auto s = skorokhod_reflect(y);
    CHECK(s.value(1)[0] == 0.0);
    CHECK(s.value(2)[0] == Approx(0.7));
    CHECK(s.value(3)[0] == Approx(0.4));
}

TEST_CASE("recursive symmetric reflection equals the coordinatewise absolute value pathwise") {
    auto c = config(Model::symmetric, 1.0, 0.5, 1.0);
    std::vector<double> start{0.3, 0.6};
    for (std::uint64_t k = 0; k < 200; ++k) {
        auto drv = sample_drivers(c, start, uniform_grid(c.horizon, c.step()), RngStream(4, k));
        auto a = reflect_symmetric(drv);
        auto b = abs_join(drv);
        REQUIRE(a.size() == b.size());
        CHECK(a.times == b.times);
        for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == Approx(b.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("killed paths end with a jump mark and an empty state") {
    auto c = config(Model::killed, 1.0, 0.5, 1.0);
    std::vector<double> start{1, 1};
    int killed = 0;
    for (std::uint64_t k = 0; k < 300; ++k) {
        auto z = simulate_ssmp(c, start, RngStream(11, k));
        z.validate();
        if (z.end != PathEnd::killed) continue;
        ++killed;
        REQUIRE(z.marks.back().has_value());
        CHECK(z.marks.back()->size < 0.0);
        auto prev = z.value(z.size() - 2);
        CHECK(prev[z.marks.back()->coord] + z.marks.back()->size < 0.0);
    }
    CHECK(killed > 0);
}

TEST_CASE("seeded simulation is bit-for-bit reproducible") {
    for (Model m : {Model::killed, Model::symmetric, Model::skorokhod_stable, Model::skorokhod_bm}) {
        auto c = config(m, m == Model::skorokhod_stable ? 1.5 : 1.0, m == Model::skorokhod_stable ? 1.0 / 3.0 : 0.5, 1);
        std::vector<double> s{0.4, 0.6};
        auto a = simulate_ssmp(c, s, RngStream(3, 1));
        auto b = simulate_ssmp(c, s, RngStream(3, 1));
        CHECK(a.values == b.values);
        CHECK(a.times == b.times);
        CHECK(a.marks == b.marks);
    }
}

TEST_CASE("clocked simulation with fixed cells reproduces the grid simulation") {
    auto c = config(Model::symmetric, 1.0, 0.5, 0.5);
    std::vector<double> s{0.4, 0.6};
    auto a = simulate_ssmp(c, s, RngStream(3, 2));
    auto b = simulate_ssmp_clocked(c, s, inf, 0.0, RngStream(3, 2));
    CHECK(a.values == b.values);
    CHECK(a.times == b.times);
}

TEST_CASE("self-similarity: c Z^x at c^-alpha t has the law of Z^{cx} at t") {
    struct Case {
        Model m;
        double alpha, rho;
    };
    for (Case k : {Case{Model::symmetric, 1.0, 0.5}, Case{Model::skorokhod_bm, 2.0, 0.0},
                   Case{Model::skorokhod_stable, 1.5, 1.0 / 3.0}}) {
        double t = 0.2, scale = 2.0;
        auto big = config(k.m, k.alpha, k.rho, t);
        auto small = config(k.m, k.alpha, k.rho, t * std::pow(scale, -k.alpha));
        std::vector<double> x{0.3, 0.5}, cx{0.6, 1.0};
        std::vector<double> a, b;
        for (std::uint64_t n = 0; n < 3000; ++n) {
            auto z1 = simulate_ssmp(big, cx, RngStream(30, n));
            auto z2 = simulate_ssmp(small, x, RngStream(31, n));
            a.push_back(l1_norm(z1.value(z1.size() - 1)));
            b.push_back(scale * l1_norm(z2.value(z2.size() - 1)));
        }
        CHECK_MESSAGE(ks_two_sample(a, b).p_value > 0.01, to_string(k.m));
    }
}
