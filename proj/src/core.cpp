#include "lamperti/core.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lamperti {

double l1_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

SimplexPoint::SimplexPoint(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw std::invalid_argument("simplex point needs d >= 1");
    double s = 0.0;
    for (double v : p_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + simplex_tol)
            throw std::invalid_argument("simplex component outside [0,1]");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("simplex components do not sum to 1");
    for (double& v : p_) v /= s;
}

SimplexPoint SimplexPoint::from_vector(std::span<const double> x) {
    double n = 0.0;
    for (double v : x) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("orthant vector expected");
        n += v;
    }
    if (n <= 0.0) throw std::invalid_argument("zero vector has no angle");
    SimplexPoint out;
    out.p_.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.p_[i] = x[i] / n;
    return out;
}

bool SimplexPoint::interior() const {
    return std::all_of(p_.begin(), p_.end(), [](double v) { return v > 0.0; });
}

PolarPoint::PolarPoint(double log_norm, SimplexPoint angle)
    : log_norm_(log_norm), angle_(std::move(angle)), d_(angle_->dim()) {
    if (!std::isfinite(log_norm)) throw std::invalid_argument("finite log-norm required off the cemetery");
}

PolarPoint PolarPoint::cemetery(std::size_t d) { return PolarPoint(d); }

const SimplexPoint& PolarPoint::angle() const {
    if (!angle_) throw std::logic_error("cemetery has no angle");
    return *angle_;
}

PolarPoint polar_decompose(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("empty vector");
    double n = 0.0;
    for (double v : x) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("polar_decompose: component negative or non-finite");
        n += v;
    }
    if (n == 0.0) return PolarPoint::cemetery(x.size());
    return PolarPoint(std::log(n), SimplexPoint::from_vector(x));
}

std::vector<double> polar_compose(const PolarPoint& p) {
    std::vector<double> out(p.dim(), 0.0);
    if (p.is_cemetery()) return out;
    double r = std::exp(p.log_norm());
    auto a = p.angle().components();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r * a[i];
    return out;
}

namespace {
constexpr const char* tag_names[] = {"start", "grid", "jump", "corrective", "kill", "absorb"};
}

const char* to_string(EventTag t) { return tag_names[static_cast<int>(t)]; }

EventTag parse_tag(const std::string& s) {
    for (int i = 0; i < 6; ++i)
        if (s == tag_names[i]) return static_cast<EventTag>(i);
    throw std::invalid_argument("unknown event tag: " + s);
}

void SkeletonPath::push(double t, std::span<const double> v, EventTag tag, std::optional<JumpMark> m) {
    times.push_back(t);
    values.insert(values.end(), v.begin(), v.end());
    tags.push_back(tag);
    marks.push_back(m);
}

void SkeletonPath::validate() const {
    if (times.empty()) throw std::invalid_argument("empty path");
    if (values.size() != times.size() * dim || tags.size() != times.size() || marks.size() != times.size())
        throw std::invalid_argument("path arrays disagree in length");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("event times not strictly increasing");
    for (const auto& m : marks)
        if (m && (m->coord >= dim || m->size == 0.0)) throw std::invalid_argument("bad jump mark");
    if (horizon < times.back()) throw std::invalid_argument("horizon before last event");
}

PolarPoint MapPath::state(std::size_t k) const {
    if (dead(k)) return PolarPoint::cemetery(dim);
    auto th = theta(k);
    return PolarPoint(ordinate[k], SimplexPoint(std::vector<double>(th.begin(), th.end())));
}

void MapPath::push(double t, const PolarPoint& p, EventTag tag, std::optional<JumpMark> m) {
    times.push_back(t);
    ordinate.push_back(p.log_norm());
    if (p.is_cemetery()) {
        modulator.insert(modulator.end(), dim, 0.0);
    } else {
        auto a = p.angle().components();
        modulator.insert(modulator.end(), a.begin(), a.end());
    }
    tags.push_back(tag);
    marks.push_back(m);
}

std::size_t MapPath::index_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) throw std::out_of_range("time before path start");
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

void MapPath::validate() const {
    if (times.empty()) throw std::invalid_argument("empty MAP path");
    std::size_t n = times.size();
    if (ordinate.size() != n || modulator.size() != n * dim || tags.size() != n || marks.size() != n)
        throw std::invalid_argument("MAP arrays disagree in length");
    for (std::size_t k = 1; k < n; ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("MAP times not strictly increasing");
    for (std::size_t k = 0; k < n; ++k) {
        if (dead(k)) {
            if (k + 1 != n) throw std::invalid_argument("events after the cemetery");
            continue;
        }
        double s = 0.0;
        for (double v : theta(k)) {
            if (v < 0.0) throw std::invalid_argument("negative modulator component");
            s += v;
        }
        if (std::abs(s - 1.0) > simplex_tol) throw std::invalid_argument("modulator off the simplex");
    }
}

Clock::Clock(std::vector<double> s, std::vector<double> a) : s_(std::move(s)), a_(std::move(a)) {
    if (s_.empty() || s_.size() != a_.size()) throw std::invalid_argument("clock knots malformed");
    for (std::size_t k = 1; k < s_.size(); ++k)
        if (s_[k] <= s_[k - 1] || a_[k] < a_[k - 1]) throw std::invalid_argument("clock not increasing");
}

double Clock::operator()(double s) const {
    if (s <= s_.front()) return a_.front();
    if (s >= s_.back()) return a_.back();
    auto it = std::upper_bound(s_.begin(), s_.end(), s);
    std::size_t k = static_cast<std::size_t>(it - s_.begin());
    double w = (s - s_[k - 1]) / (s_[k] - s_[k - 1]);
    return a_[k - 1] + w * (a_[k] - a_[k - 1]);
}

double invert_clock(const Clock& clock, double t) {
    auto s = clock.knots();
    auto a = clock.values();
    if (t < a.front()) throw std::invalid_argument("invert_clock: t below clock start");
    if (t >= a.back()) throw std::out_of_range("invert_clock: lifetime exhausted");
    auto it = std::upper_bound(a.begin(), a.end(), t);
    std::size_t k = static_cast<std::size_t>(it - a.begin());
    return s[k - 1] + (t - a[k - 1]) * (s[k] - s[k - 1]) / (a[k] - a[k - 1]);
}

namespace {

double rate(double norm, double alpha, ClockSign sign) {
    return sign == ClockSign::plus ? std::pow(norm, alpha) : std::pow(norm, -alpha);
}

}  // namespace

Clock clock_integral(const SkeletonPath& path, double alpha, ClockSign sign) {
    if (!(alpha > 0.0)) throw std::invalid_argument("clock_integral: alpha must be positive");
    std::size_t n = path.size();
    bool dead = path.end != PathEnd::alive;
    std::size_t last = dead ? n - 1 : n;  // events contributing a segment
    if (last == 0) throw std::invalid_argument("clock_integral: path not alive on any interval");
    std::vector<double> s{path.times.front()}, a{0.0};
    for (std::size_t k = 0; k < last; ++k) {
        double next = k + 1 < n ? path.times[k + 1] : path.horizon;
        if (next <= s.back()) continue;
        double r = rate(l1_norm(path.value(k)), alpha, sign);
        if (!std::isfinite(r)) throw std::domain_error("clock_integral: non-finite integrand");
        a.push_back(a.back() + (next - s.back()) * r);
        s.push_back(next);
    }
    if (s.size() < 2) throw std::invalid_argument("clock_integral: path not alive on any interval");
    return Clock(std::move(s), std::move(a));
}

Clock clock_integral(const MapPath& path, double alpha, ClockSign sign) {
    if (!(alpha > 0.0)) throw std::invalid_argument("clock_integral: alpha must be positive");
    std::size_t n = path.size();
    std::vector<double> s{path.times.front()}, a{0.0};
    for (std::size_t k = 0; k < n; ++k) {
        if (path.dead(k)) break;
        double next = k + 1 < n ? path.times[k + 1] : path.horizon;
        if (next <= s.back()) continue;
        double r = std::exp((sign == ClockSign::plus ? alpha : -alpha) * path.ordinate[k]);
        if (!std::isfinite(r)) throw std::domain_error("clock_integral: non-finite integrand");
        a.push_back(a.back() + (next - s.back()) * r);
        s.push_back(next);
    }
    if (s.size() < 2) throw std::invalid_argument("clock_integral: path not alive on any interval");
    return Clock(std::move(s), std::move(a));
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_mark(std::ostream& os, const std::optional<JumpMark>& m) {
    if (m) os << ',' << m->coord + 1 << ',' << m->size;
    else os << ",,";
}

std::optional<JumpMark> read_mark(const std::vector<std::string>& c, std::size_t at) {
    if (c.size() <= at + 1 || c[at].empty()) return std::nullopt;
    return JumpMark{std::stoul(c[at]) - 1, std::stod(c[at + 1])};
}

}  // namespace

void write_csv(std::ostream& os, const SkeletonPath& p) {
    bool with_min = !p.cell_min.empty();
    os << std::setprecision(17) << 't';
    for (std::size_t i = 1; i <= p.dim; ++i) os << ",v" << i;
    os << ",tag,jump_coord,jump_size";
    if (with_min) os << ",cell_min";
    os << '\n';
    for (std::size_t k = 0; k < p.size(); ++k) {
        os << p.times[k];
        for (double v : p.value(k)) os << ',' << v;
        os << ',' << to_string(p.tags[k]);
        write_mark(os, p.marks[k]);
        if (with_min) os << ',' << p.cell_min[k];
        os << '\n';
    }
    os << p.horizon;
    for (double v : p.value(p.size() - 1)) os << ',' << v;
    os << ",end,,";
    if (with_min) os << ',';
    os << '\n';
}

void write_csv(std::ostream& os, const MapPath& p) {
    os << std::setprecision(17) << "t,xi";
    for (std::size_t i = 1; i <= p.dim; ++i) os << ",theta" << i;
    os << ",tag,jump_coord,jump_size\n";
    for (std::size_t k = 0; k <= p.size(); ++k) {
        std::size_t j = std::min(k, p.size() - 1);
        os << (k < p.size() ? p.times[k] : p.horizon) << ',' << p.ordinate[j];
        for (double v : p.theta(j)) os << ',' << v;
        if (k < p.size()) {
            os << ',' << to_string(p.tags[k]);
            write_mark(os, p.marks[k]);
        } else {
            os << ",end,,";
        }
        os << '\n';
    }
}

SkeletonPath read_skeleton_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing header");
    auto head = split_csv(line);
    if (head.empty() || head[0] != "t") throw std::runtime_error("csv: header must start with t");
    std::size_t d = 0;
    while (d + 1 < head.size() && head[d + 1] == "v" + std::to_string(d + 1)) ++d;
    if (d == 0) throw std::runtime_error("csv: no value columns");
    bool with_min = head.back() == "cell_min";
    SkeletonPath p(d);
    bool ended = false;
    std::vector<double> v(d);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto c = split_csv(line);
        if (c.size() < d + 2) throw std::runtime_error("csv: short row");
        double t = std::stod(c[0]);
        for (std::size_t i = 0; i < d; ++i) v[i] = std::stod(c[i + 1]);
        if (c[d + 1] == "end") {
            p.horizon = t;
            ended = true;
            break;
        }
        p.push(t, v, parse_tag(c[d + 1]), read_mark(c, d + 2));
        if (with_min) p.cell_min.push_back(std::stod(c.at(d + 4)));
    }
    if (!ended) throw std::runtime_error("csv: missing end row");
    if (!p.tags.empty() && p.tags.back() == EventTag::kill) p.end = PathEnd::killed;
    if (!p.tags.empty() && p.tags.back() == EventTag::absorb) p.end = PathEnd::absorbed;
    p.validate();
    return p;
}

MapPath read_map_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing header");
    auto head = split_csv(line);
    if (head.size() < 3 || head[0] != "t" || head[1] != "xi") throw std::runtime_error("csv: expected t,xi,theta...");
    std::size_t d = 0;
    while (d + 2 < head.size() && head[d + 2] == "theta" + std::to_string(d + 1)) ++d;
    MapPath p(d);
    bool ended = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto c = split_csv(line);
        if (c.size() < d + 3) throw std::runtime_error("csv: short row");
        double t = std::stod(c[0]);
        if (c[d + 2] == "end") {
            p.horizon = t;
            ended = true;
            break;
        }
        double xi = std::stod(c[1]);
        p.times.push_back(t);
        p.ordinate.push_back(xi);
        for (std::size_t i = 0; i < d; ++i) p.modulator.push_back(std::stod(c[i + 2]));
        p.tags.push_back(parse_tag(c[d + 2]));
        p.marks.push_back(read_mark(c, d + 3));
    }
    if (!ended || p.times.empty()) throw std::runtime_error("csv: missing end row");
    if (p.dead(p.size() - 1)) {
        p.lifetime = p.times.back();
    } else {
        p.censored = true;
    }
    p.validate();
    return p;
}

}  // namespace lamperti
