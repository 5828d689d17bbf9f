#include "lamperti/ssmp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lamperti {

const char* to_string(Model m) {
    switch (m) {
        case Model::killed: return "killed";
        case Model::symmetric: return "symmetric";
        case Model::skorokhod_stable: return "skorokhod-stable";
        case Model::skorokhod_bm: return "skorokhod-bm";
    }
    return "?";
}

Model parse_model(const std::string& s) {
    if (s == "killed" || s == "killed-orthant") return Model::killed;
    if (s == "symmetric" || s == "reflected-symmetric") return Model::symmetric;
    if (s == "skorokhod-stable") return Model::skorokhod_stable;
    if (s == "skorokhod-bm") return Model::skorokhod_bm;
    throw std::invalid_argument("unknown model: " + s);
}

void SsmpConfig::validate() const {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("absorption threshold must be >= 0");
    if (model == Model::skorokhod_bm) {
        if (!params.empty()) throw std::invalid_argument("skorokhod-bm takes no stable parameters");
        return;
    }
    if (params.size() != d) throw std::invalid_argument("one stable parameter pair per coordinate required");
    for (const auto& p : params) {
        if (p.alpha() != params[0].alpha())
            throw std::invalid_argument("all coordinates must share alpha (self-similarity index)");
        switch (model) {
            case Model::killed:
                if (!p.two_sided()) throw std::invalid_argument("killed-orthant needs two-sided coordinates");
                break;
            case Model::symmetric:
                if (p.rho() != 0.5) throw std::invalid_argument("reflected-symmetric needs rho = 1/2");
                break;
            case Model::skorokhod_stable:
                if (!p.spectrally_positive())
                    throw std::invalid_argument("skorokhod-stable needs alpha in (1,2) and alpha(1-rho) = 1");
                break;
            case Model::skorokhod_bm: break;
        }
    }
}

double SsmpConfig::index() const { return model == Model::skorokhod_bm ? 2.0 : params.at(0).alpha(); }

std::vector<double> negate_coordinate(std::span<const double> x, std::size_t j) {
    std::vector<double> y(x.begin(), x.end());
    y.at(j) = -y[j];
    return y;
}

std::vector<double> reflect_orthant(std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    for (double& v : y)
        if (v < 0.0) v = -v;
    return y;
}

namespace {

// Walks the merged event sequence of d one-dimensional driver paths.
class DriverWalk {
public:
    explicit DriverWalk(std::span<const SkeletonPath> x) : x_(x), idx_(x.size(), 0) {
        if (x.empty()) throw std::invalid_argument("no driver paths");
        for (const auto& p : x) {
            if (p.dim != 1 || p.size() == 0) throw std::invalid_argument("drivers must be nonempty 1-d paths");
            if (p.times.front() != x[0].times.front() || p.horizon != x[0].horizon)
                throw std::invalid_argument("drivers must share start time and horizon");
        }
    }

    std::size_t d() const { return x_.size(); }
    double start() const { return x_[0].times.front(); }
    double horizon() const { return x_[0].horizon; }
    double value(std::size_t i) const { return x_[i].values[idx_[i]]; }
    double previous(std::size_t i) const { return idx_[i] ? x_[i].values[idx_[i] - 1] : value(i); }
    const std::optional<JumpMark>& mark(std::size_t i) const { return x_[i].marks[idx_[i]]; }
    bool has_min(std::size_t i) const { return !x_[i].cell_min.empty(); }
    double cell_min(std::size_t i) const { return x_[i].cell_min[idx_[i]]; }

    // advances every driver whose next event is the earliest; fills `changed`
    bool next(double& t, std::vector<std::size_t>& changed) {
        t = inf;
        for (std::size_t i = 0; i < d(); ++i)
            if (idx_[i] + 1 < x_[i].size()) t = std::min(t, x_[i].times[idx_[i] + 1]);
        if (t == inf) return false;
        changed.clear();
        for (std::size_t i = 0; i < d(); ++i)
            if (idx_[i] + 1 < x_[i].size() && x_[i].times[idx_[i] + 1] == t) {
                ++idx_[i];
                changed.push_back(i);
            }
        return true;
    }

private:
    std::span<const SkeletonPath> x_;
    std::vector<std::size_t> idx_;
};

std::optional<JumpMark> joined_mark(const DriverWalk& w, const std::vector<std::size_t>& changed) {
    for (std::size_t i : changed)
        if (w.mark(i)) return JumpMark{i, w.mark(i)->size};
    return std::nullopt;
}

JumpMark increment_mark(const DriverWalk& w, std::size_t i) {
    if (w.mark(i)) return {i, w.mark(i)->size};
    return {i, w.value(i) - w.previous(i)};
}

void finish(SkeletonPath& z, double t, PathEnd how, std::optional<JumpMark> m) {
    std::vector<double> zero(z.dim, 0.0);
    z.push(t, zero, how == PathEnd::killed ? EventTag::kill : EventTag::absorb, m);
    z.end = how;
}

}  // namespace

SkeletonPath kill_at_orthant_exit(std::span<const SkeletonPath> x) {
    DriverWalk w(x);
    std::size_t d = w.d();
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        z[i] = w.value(i);
        if (!(z[i] > 0.0)) throw std::invalid_argument("kill_at_orthant_exit: start must be in the open orthant");
    }
    SkeletonPath out(d);
    out.horizon = w.horizon();
    out.push(w.start(), z, EventTag::start);
    double t;
    std::vector<std::size_t> changed;
    while (w.next(t, changed)) {
        for (std::size_t i : changed) z[i] = w.value(i);
        for (std::size_t i : changed)
            if (z[i] < 0.0) {
                finish(out, t, PathEnd::killed, increment_mark(w, i));
                return out;
            }
        auto m = joined_mark(w, changed);
        out.push(t, z, m ? EventTag::jump : EventTag::grid, m);
    }
    return out;
}

SkeletonPath reflect_symmetric(std::span<const SkeletonPath> x, double epsilon) {
    DriverWalk w(x);
    std::size_t d = w.d();
    std::vector<double> sign(d, 1.0), z(d);
    for (std::size_t i = 0; i < d; ++i) {
        z[i] = w.value(i);
        if (z[i] < 0.0) throw std::invalid_argument("reflect_symmetric: start must be in the orthant");
    }
    SkeletonPath out(d);
    out.horizon = w.horizon();
    out.push(w.start(), z, EventTag::start);
    double t;
    std::vector<std::size_t> changed;
    while (w.next(t, changed)) {
        std::optional<JumpMark> corrective;
        for (std::size_t i : changed) {
            z[i] = sign[i] * w.value(i);
            if (z[i] < 0.0) {
                // R: negate the coordinate that left the orthant and restart from there
                sign[i] = -sign[i];
                z[i] = -z[i];
                if (!corrective) corrective = increment_mark(w, i);
            }
        }
        auto m = corrective ? corrective : joined_mark(w, changed);
        // absorption replaces the event that entered the ball
        if (l1_norm(z) <= epsilon) {
            finish(out, t, PathEnd::absorbed, m);
            return out;
        }
        out.push(t, z, corrective ? EventTag::corrective : m ? EventTag::jump : EventTag::grid, m);
    }
    return out;
}

SkeletonPath abs_join(std::span<const SkeletonPath> x, double epsilon) {
    DriverWalk w(x);
    std::size_t d = w.d();
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = std::abs(w.value(i));
    SkeletonPath out(d);
    out.horizon = w.horizon();
    out.push(w.start(), z, EventTag::start);
    double t;
    std::vector<std::size_t> changed;
    while (w.next(t, changed)) {
        std::optional<JumpMark> corrective;
        for (std::size_t i : changed) {
            z[i] = std::abs(w.value(i));
            if (!corrective && std::signbit(w.value(i)) != std::signbit(w.previous(i)))
                corrective = increment_mark(w, i);
        }
        auto m = corrective ? corrective : joined_mark(w, changed);
        // absorption replaces the event that entered the ball
        if (l1_norm(z) <= epsilon) {
            finish(out, t, PathEnd::absorbed, m);
            return out;
        }
        out.push(t, z, corrective ? EventTag::corrective : m ? EventTag::jump : EventTag::grid, m);
    }
    return out;
}

SkeletonPath skorokhod_reflect(std::span<const SkeletonPath> x, double epsilon) {
    DriverWalk w(x);
    std::size_t d = w.d();
    std::vector<double> low(d), z(d);
    for (std::size_t i = 0; i < d; ++i) {
        low[i] = std::min(0.0, w.value(i));
        z[i] = w.value(i) - low[i];
    }
    SkeletonPath out(d);
    out.horizon = w.horizon();
    out.push(w.start(), z, EventTag::start);
    if (l1_norm(z) <= epsilon) throw std::invalid_argument("skorokhod_reflect: start inside the absorption ball");
    double t;
    std::vector<std::size_t> changed;
    while (w.next(t, changed)) {
        for (std::size_t i : changed) {
            double v = w.value(i);
            if (w.has_min(i)) low[i] = std::min(low[i], w.cell_min(i));
            low[i] = std::min(low[i], v);
            z[i] = v - low[i];
        }
        auto m = joined_mark(w, changed);
        if (l1_norm(z) <= epsilon) {
            finish(out, t, PathEnd::absorbed, m);
            return out;
        }
        out.push(t, z, m ? EventTag::jump : EventTag::grid, m);
    }
    return out;
}

std::vector<SkeletonPath> sample_drivers(const SsmpConfig& cfg, std::span<const double> start,
                                         std::span<const double> grid, const RngStream& rng) {
    cfg.validate();
    if (start.size() != cfg.d) throw std::invalid_argument("start point has wrong dimension");
    std::vector<SkeletonPath> x;
    x.reserve(cfg.d);
    for (std::size_t i = 0; i < cfg.d; ++i) {
        RngStream r = rng.substream(static_cast<std::uint32_t>(i));
        if (cfg.model == Model::skorokhod_bm) x.push_back(sample_bm_path(grid, r, start[i]));
        else x.push_back(sample_stable_path(cfg.params[i], grid, cfg.delta, r, start[i]));
    }
    return x;
}

SkeletonPath construct(const SsmpConfig& cfg, std::span<const SkeletonPath> drivers) {
    switch (cfg.model) {
        case Model::killed: return kill_at_orthant_exit(drivers);
        case Model::symmetric: return reflect_symmetric(drivers, cfg.epsilon);
        case Model::skorokhod_stable:
        case Model::skorokhod_bm: return skorokhod_reflect(drivers, cfg.epsilon);
    }
    throw std::logic_error("unknown model");
}

SkeletonPath simulate_ssmp(const SsmpConfig& cfg, std::span<const double> start, const RngStream& rng) {
    auto grid = uniform_grid(cfg.horizon, cfg.step());
    auto x = sample_drivers(cfg, start, grid, rng);
    return construct(cfg, x);
}

namespace {

// Incremental version of the constructions above, fed one driver change at a time.
class Builder {
public:
    Builder(const SsmpConfig& cfg, std::span<const double> start)
        : model_(cfg.model), eps_(cfg.epsilon), x_(start.begin(), start.end()), prev_(x_), z_(start.size()),
          sign_(start.size(), 1.0), low_(start.size()), out_(start.size()) {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (model_ == Model::killed && !(x_[i] > 0.0))
                throw std::invalid_argument("killed model: start must be in the open orthant");
            if (model_ == Model::symmetric && x_[i] < 0.0)
                throw std::invalid_argument("symmetric model: start must be in the orthant");
            low_[i] = std::min(0.0, x_[i]);
            z_[i] = model_ == Model::skorokhod_stable || model_ == Model::skorokhod_bm ? x_[i] - low_[i] : x_[i];
        }
        out_.push(0.0, z_, EventTag::start);
    }

    const std::vector<double>& state() const { return z_; }
    double driver(std::size_t i) const { return x_[i]; }
    bool dead() const { return out_.end != PathEnd::alive; }

    // coordinate i moves by inc; min_rel is the cell minimum relative to the cell start (Brownian drivers)
    void move(std::size_t i, double inc, double cell_start, double min_rel) {
        prev_[i] = x_[i];
        x_[i] += inc;
        switch (model_) {
            case Model::killed: z_[i] = x_[i]; break;
            case Model::symmetric: z_[i] = sign_[i] * x_[i]; break;
            default:
                low_[i] = std::min(low_[i], cell_start + min_rel);
                low_[i] = std::min(low_[i], x_[i]);
                z_[i] = x_[i] - low_[i];
        }
    }

    // closes an event at time t after the coordinates in `changed` have moved
    void event(double t, std::span<const std::size_t> changed, std::optional<JumpMark> mark) {
        auto inc_mark = [&](std::size_t i) {
            if (mark && mark->coord == i) return *mark;
            return JumpMark{i, x_[i] - prev_[i]};
        };
        if (model_ == Model::killed) {
            for (std::size_t i : changed)
                if (z_[i] < 0.0) {
                    finish(out_, t, PathEnd::killed, inc_mark(i));
                    return;
                }
            out_.push(t, z_, mark ? EventTag::jump : EventTag::grid, mark);
            return;
        }
        std::optional<JumpMark> corrective;
        if (model_ == Model::symmetric)
            for (std::size_t i : changed)
                if (z_[i] < 0.0) {
                    sign_[i] = -sign_[i];
                    z_[i] = -z_[i];
                    if (!corrective) corrective = inc_mark(i);
                }
        auto m = corrective ? corrective : mark;
        if (l1_norm(z_) <= eps_) finish(out_, t, PathEnd::absorbed, m);
        else out_.push(t, z_, corrective ? EventTag::corrective : m ? EventTag::jump : EventTag::grid, m);
    }

    SkeletonPath take(double horizon) {
        out_.horizon = std::max(horizon, out_.times.back());
        return std::move(out_);
    }

private:
    Model model_;
    double eps_;
    std::vector<double> x_, prev_, z_, sign_, low_;
    SkeletonPath out_;
};

}  // namespace

SkeletonPath simulate_ssmp_clocked(const SsmpConfig& cfg, std::span<const double> start, double map_horizon,
                                   double map_dt, const RngStream& rng, double max_cell) {
    cfg.validate();
    if (start.size() != cfg.d) throw std::invalid_argument("start point has wrong dimension");
    const std::size_t d = cfg.d;
    const bool adaptive = map_dt > 0.0;
    const bool brownian = cfg.model == Model::skorokhod_bm;
    const double index = cfg.index();
    const double dt = cfg.step();
    std::vector<RngStream> streams;
    std::vector<StableStepper> steppers;
    for (std::size_t i = 0; i < d; ++i) {
        streams.push_back(rng.substream(static_cast<std::uint32_t>(i)));
        if (!brownian) steppers.emplace_back(cfg.params[i], cfg.delta);
    }
    BrownianStepper bm;
    Builder b(cfg, start);
    if (cfg.model != Model::killed && l1_norm(b.state()) <= cfg.epsilon)
        throw std::invalid_argument("start inside the absorption ball");

    std::vector<CellDraw> cells(d);
    std::vector<std::size_t> order, changed, one(1);
    double t = 0.0, clock = 0.0;
    std::size_t k = 0;
    const std::size_t cells_total = adaptive ? 0 : uniform_grid(cfg.horizon, dt).size() - 1;
    while (!b.dead()) {
        if (adaptive ? clock >= map_horizon : k >= cells_total) break;
        double norm = l1_norm(b.state());
        double t1, h, delta = cfg.delta;
        if (adaptive) {
            h = std::min(max_cell, map_dt * std::pow(norm, index));
            t1 = t + h;
            // thresholds scale with the state so marked-jump rates per cell stay fixed
            delta = cfg.delta * norm;
        } else {
            t1 = k + 1 == cells_total ? cfg.horizon : std::min(cfg.horizon, static_cast<double>(k + 1) * dt);
            h = t1 - t;
        }
        ++k;
        order.clear();
        for (std::size_t i = 0; i < d; ++i) {
            cells[i] = brownian ? bm.step(h, streams[i]) : steppers[i].step(h, streams[i], delta);
            if (cells[i].marked) order.push_back(i);
        }
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t c) { return cells[a].mark_fraction < cells[c].mark_fraction; });
        double last = t;
        for (std::size_t i : order) {
            double tj = t + cells[i].mark_fraction * h;
            if (!(tj > t && tj < t1)) tj = t + 0.5 * h;
            clock += (tj - last) * std::pow(l1_norm(b.state()), -index);
            last = tj;
            b.move(i, cells[i].increment, b.driver(i), cells[i].minimum);
            one[0] = i;
            b.event(tj, one, JumpMark{i, cells[i].increment});
            if (b.dead()) break;
        }
        if (b.dead()) break;
        clock += (t1 - last) * std::pow(l1_norm(b.state()), -index);
        changed.clear();
        for (std::size_t i = 0; i < d; ++i) {
            if (cells[i].marked) continue;
            b.move(i, cells[i].increment, b.driver(i), cells[i].minimum);
            changed.push_back(i);
        }
        b.event(t1, changed, std::nullopt);
        t = t1;
    }
    return b.take(adaptive ? t : cfg.horizon);
}

}  // namespace lamperti
