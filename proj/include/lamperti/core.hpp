#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lamperti {

inline constexpr double simplex_tol = 1e-12;
inline constexpr double inf = std::numeric_limits<double>::infinity();

double l1_norm(std::span<const double> x);

class SimplexPoint {
public:
    SimplexPoint() = default;
    // validates: components in [0,1], sum 1 within simplex_tol, then renormalizes
    explicit SimplexPoint(std::vector<double> p);
    // x / |x|_1 for a nonzero nonnegative vector
    static SimplexPoint from_vector(std::span<const double> x);

    std::size_t dim() const { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    std::span<const double> components() const { return p_; }
    bool interior() const;

    friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

private:
    std::vector<double> p_;
};

// (log |x|_1, x/|x|_1), or the cemetery (-inf, ∂)
class PolarPoint {
public:
    PolarPoint(double log_norm, SimplexPoint angle);
    static PolarPoint cemetery(std::size_t d);

    bool is_cemetery() const { return !angle_.has_value(); }
    double log_norm() const { return log_norm_; }
    const SimplexPoint& angle() const;
    std::size_t dim() const { return d_; }

private:
    PolarPoint(std::size_t d) : log_norm_(-inf), d_(d) {}
    double log_norm_;
    std::optional<SimplexPoint> angle_;
    std::size_t d_;
};

PolarPoint polar_decompose(std::span<const double> x);
std::vector<double> polar_compose(const PolarPoint& p);

enum class EventTag : std::uint8_t { start, grid, jump, corrective, kill, absorb };
const char* to_string(EventTag t);
EventTag parse_tag(const std::string& s);

struct JumpMark {
    std::size_t coord;
    double size;
    friend bool operator==(const JumpMark&, const JumpMark&) = default;
};

enum class PathEnd : std::uint8_t { alive, killed, absorbed };

// Càdlàg skeleton: values[k] is the state from times[k] until the next event.
struct SkeletonPath {
    std::size_t dim = 1;
    std::vector<double> times;
    std::vector<double> values;  // row-major, dim per event
    std::vector<EventTag> tags;
    std::vector<std::optional<JumpMark>> marks;
    // 1-d drivers only: minimum of the driver over the cell ending at each event (empty if unknown)
    std::vector<double> cell_min;
    double horizon = 0.0;
    PathEnd end = PathEnd::alive;

    explicit SkeletonPath(std::size_t d = 1) : dim(d) {}

    std::size_t size() const { return times.size(); }
    std::span<const double> value(std::size_t k) const { return {values.data() + k * dim, dim}; }
    std::span<double> value(std::size_t k) { return {values.data() + k * dim, dim}; }
    void push(double t, std::span<const double> v, EventTag tag, std::optional<JumpMark> m = {});
    double end_time() const { return end == PathEnd::alive ? inf : times.back(); }
    // throws std::invalid_argument if the invariants are violated
    void validate() const;
};

struct MapPath {
    std::size_t dim = 1;
    std::vector<double> times;
    std::vector<double> ordinate;   // -inf at the cemetery
    std::vector<double> modulator;  // row-major; rows at the cemetery are zero and never read as angles
    std::vector<EventTag> tags;
    std::vector<std::optional<JumpMark>> marks;
    double lifetime = inf;
    double horizon = 0.0;  // end of the observation window in MAP time
    bool censored = false;

    explicit MapPath(std::size_t d = 1) : dim(d) {}

    std::size_t size() const { return times.size(); }
    std::span<const double> theta(std::size_t k) const { return {modulator.data() + k * dim, dim}; }
    bool dead(std::size_t k) const { return ordinate[k] == -inf; }
    PolarPoint state(std::size_t k) const;
    void push(double t, const PolarPoint& p, EventTag tag, std::optional<JumpMark> m = {});
    // index of the last event with time <= t (state at t)
    std::size_t index_at(double t) const;
    void validate() const;
};

// Piecewise-linear nondecreasing cumulative function given by its knots.
class Clock {
public:
    Clock(std::vector<double> s, std::vector<double> a);
    double operator()(double s) const;
    double terminal() const { return a_.back(); }
    double end() const { return s_.back(); }
    std::span<const double> knots() const { return s_; }
    std::span<const double> values() const { return a_; }

private:
    std::vector<double> s_, a_;
};

enum class ClockSign { plus, minus };

// t -> int_0^t |path_r|_1^{±alpha} dr, left-point rule between events, up to death or horizon
Clock clock_integral(const SkeletonPath& path, double alpha, ClockSign sign);
// t -> int_0^t exp(±alpha xi_r) dr up to the lifetime or horizon
Clock clock_integral(const MapPath& path, double alpha, ClockSign sign);
// inf{s : clock(s) > t}
double invert_clock(const Clock& clock, double t);

void write_csv(std::ostream& os, const SkeletonPath& p);
void write_csv(std::ostream& os, const MapPath& p);
SkeletonPath read_skeleton_csv(std::istream& is);
MapPath read_map_csv(std::istream& is);

}  // namespace lamperti
