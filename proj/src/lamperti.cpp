#include "lamperti/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lamperti {

MapPath ssmp_to_map(const SkeletonPath& z, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("ssmp_to_map: alpha must be positive");
    if (z.size() == 0) throw std::invalid_argument("ssmp_to_map: empty path");
    if (!(l1_norm(z.value(0)) > 0.0)) throw std::invalid_argument("ssmp_to_map: path starts at the origin");
    const bool dead = z.end != PathEnd::alive;
    const std::size_t n = z.size();
    MapPath m(z.dim);
    double clock = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) clock += (z.times[k] - z.times[k - 1]) * std::pow(l1_norm(z.value(k - 1)), -alpha);
        if (dead && k + 1 == n) {
            m.push(clock, PolarPoint::cemetery(z.dim), z.tags[k], z.marks[k]);
            m.lifetime = clock;
            m.horizon = clock;
            return m;
        }
        m.push(clock, polar_decompose(z.value(k)), z.tags[k], z.marks[k]);
    }
    clock += (z.horizon - z.times.back()) * std::pow(l1_norm(z.value(n - 1)), -alpha);
    m.horizon = clock;
    m.censored = true;
    return m;
}

SkeletonPath map_to_ssmp(const MapPath& m, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("map_to_ssmp: alpha must be positive");
    if (m.size() == 0 || m.dead(0)) throw std::invalid_argument("map_to_ssmp: path must start alive");
    const std::size_t n = m.size();
    SkeletonPath z(m.dim);
    double clock = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) clock += (m.times[k] - m.times[k - 1]) * std::exp(alpha * m.ordinate[k - 1]);
        auto v = polar_compose(m.state(k));
        z.push(clock, v, m.tags[k], m.marks[k]);
        if (m.dead(k)) {
            z.end = m.tags[k] == EventTag::absorb ? PathEnd::absorbed : PathEnd::killed;
            z.horizon = clock;
            return z;
        }
    }
    z.horizon = clock + (std::max(m.horizon, m.times.back()) - m.times.back()) * std::exp(alpha * m.ordinate[n - 1]);
    return z;
}

double skeleton_distance(const SkeletonPath& a, const SkeletonPath& b) {
    if (a.dim != b.dim || a.size() != b.size()) return inf;
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d = std::max(d, std::abs(a.times[k] - b.times[k]));
        for (std::size_t i = 0; i < a.dim; ++i) d = std::max(d, std::abs(a.value(k)[i] - b.value(k)[i]));
    }
    return d;
}

}  // namespace lamperti
