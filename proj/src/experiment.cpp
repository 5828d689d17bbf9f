#include "lamperti/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lamperti/analytics.hpp"
#include "lamperti/lamperti.hpp"

namespace lamperti {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    double x = to_double(key, v);  // accepts 1e5
    if (!(x >= 0.0) || x != std::floor(x) || x > 1e18)
        throw std::invalid_argument("config: " + key + " expects a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + f(xs[i]);
    return s;
}

std::vector<double> doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& x : split(v)) out.push_back(to_double(key, x));
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define LAMPERTI_NUM(key, member)                                                                          \
    {key, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
                [](const ExperimentConfig& c) { return fmt(c.member); }}}
#define LAMPERTI_COUNT(key, member, type)                                                                   \
    {key, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {                       \
                    c.member = static_cast<type>(to_count(k, v));                                           \
                },                                                                                          \
                [](const ExperimentConfig& c) { return std::to_string(c.member); }}}
#define LAMPERTI_LIST(key, member)                                                                          \
    {key, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = doubles(k, v); }, \
                [](const ExperimentConfig& c) { return join(c.member, fmt); }}}
#define LAMPERTI_WORDS(key, member)                                                                         \
    {key, Field{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.member = split(v); }, \
                [](const ExperimentConfig& c) { return join(c.member, [](const std::string& s) { return s; }); }}}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f{
        {"model", Field{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.model = parse_model(v); },
                        [](const ExperimentConfig& c) { return std::string(to_string(c.model)); }}},
        LAMPERTI_COUNT("d", d, std::size_t),
        LAMPERTI_LIST("start", start),
        LAMPERTI_NUM("stable.alpha", alpha),
        LAMPERTI_LIST("stable.rho", rho),
        LAMPERTI_NUM("grid.dt", grid_dt),
        LAMPERTI_NUM("grid.horizon", horizon),
        LAMPERTI_NUM("grid.delta", delta),
        LAMPERTI_NUM("absorb.epsilon", epsilon),
        LAMPERTI_COUNT("ensemble.paths", paths, std::uint64_t),
        LAMPERTI_COUNT("ensemble.seed", seed, std::uint64_t),
        {"output.dir", Field{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                             [](const ExperimentConfig& c) { return c.out_dir; }}},
        LAMPERTI_COUNT("output.paths", dump_paths, std::uint64_t),
        LAMPERTI_WORDS("verify.tests", tests),
        LAMPERTI_NUM("verify.significance", significance),
        LAMPERTI_NUM("killing.window", killing_window),
        LAMPERTI_NUM("killing.map_dt", killing_map_dt),
        LAMPERTI_NUM("killing.delta", killing_delta),
        LAMPERTI_NUM("killing.reference_alpha", killing_reference_alpha),
        LAMPERTI_NUM("compensation.horizon", compensation_horizon),
        LAMPERTI_NUM("compensation.cutoff", compensation_cutoff),
        LAMPERTI_NUM("compensation.map_dt", compensation_map_dt),
        LAMPERTI_NUM("compensation.delta", compensation_delta),
        LAMPERTI_NUM("corrective.map_dt", corrective_map_dt),
        LAMPERTI_NUM("corrective.delta", corrective_delta),
        LAMPERTI_COUNT("corrective.bins", corrective_bins, int),
        LAMPERTI_COUNT("corrective.oracle_draws", corrective_oracle_draws, int),
        LAMPERTI_LIST("corrective.survival_times", corrective_survival_times),
        LAMPERTI_NUM("dynkin.t", dynkin_t),
        LAMPERTI_NUM("dynkin.map_dt", dynkin_map_dt),
        LAMPERTI_WORDS("dynkin.variants", dynkin_variants),
        LAMPERTI_NUM("dynkin.generator_bound", dynkin_generator_bound),
        LAMPERTI_NUM("sde.t", sde_t),
        LAMPERTI_NUM("sde.dt", sde_dt),
        LAMPERTI_NUM("sde.variance_t", sde_variance_t),
        LAMPERTI_COUNT("cf.samples", cf_samples, std::uint64_t),
        LAMPERTI_LIST("cf.z", cf_z),
        LAMPERTI_COUNT("sampler.tail", sampler_tail, std::uint64_t),
        {"roundtrip.dims",
         Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.roundtrip_dims.clear();
                   for (const auto& x : split(v)) c.roundtrip_dims.push_back(static_cast<std::size_t>(to_count(k, x)));
               },
               [](const ExperimentConfig& c) {
                   return join(c.roundtrip_dims, [](std::size_t n) { return std::to_string(n); });
               }}},
        LAMPERTI_NUM("roundtrip.tol", roundtrip_tol),
        LAMPERTI_COUNT("algebra.cases", algebra_cases, int),
    };
    return f;
}

#undef LAMPERTI_NUM
#undef LAMPERTI_COUNT
#undef LAMPERTI_LIST
#undef LAMPERTI_WORDS

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig c;
    std::map<std::string, bool> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        auto it = fields().find(key);
        if (it == fields().end()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key " + key);
        if (seen[key]) throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + key);
        seen[key] = true;
        it->second.set(c, key, value);
    }
    // Brownian drivers carry no stable parameters; a single rho (or the default) applies to every coordinate
    if (c.model == Model::skorokhod_bm && !seen["stable.rho"]) c.rho.clear();
    else if (c.rho.size() == 1 || (!seen["stable.rho"] && c.rho.size() != c.d)) c.rho.assign(c.d, c.rho.at(0));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw std::invalid_argument("cannot open config " + p.string());
    return parse_config(is);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
    for (const auto& [key, f] : fields()) os << key << " = " << f.get(c) << '\n';
}

SsmpConfig ExperimentConfig::ssmp() const {
    SsmpConfig s;
    s.model = model;
    s.d = d;
    if (model != Model::skorokhod_bm)
        for (double r : rho) s.params.emplace_back(alpha, r);
    s.epsilon = epsilon;
    s.horizon = horizon;
    s.grid_dt = grid_dt;
    s.delta = delta;
    return s;
}

void ExperimentConfig::validate() const {
    require(d >= 1, "d must be >= 1");
    require(start.size() == d, "start must have d entries");
    for (double v : start) require(std::isfinite(v) && v >= 0.0, "start must lie in the closed orthant");
    require(l1_norm(start) > 0.0, "start must not be the origin");
    require(model == Model::skorokhod_bm ? rho.empty() : rho.size() == d,
            model == Model::skorokhod_bm ? "skorokhod-bm takes no stable.rho" : "stable.rho must have d entries");
    require(paths > 0, "ensemble.paths must be positive");
    require(significance > 0.0 && significance < 0.5, "verify.significance must lie in (0, 0.5)");
    require(grid_dt > 0.0 && grid_dt <= horizon, "grid.dt must lie in (0, grid.horizon]");
    ssmp().validate();
    if (model == Model::killed)
        for (double v : start) require(v > 0.0, "killed model needs a start in the open orthant");
    for (const auto& t : tests) {
        require(std::find(known_tests().begin(), known_tests().end(), t) != known_tests().end(), "unknown test " + t);
        // these tests build their own killed / reflected ensembles from the stable parameters
        if (t == "killing" || t == "compensation" || t == "corrective")
            require(model == Model::killed || model == Model::symmetric, t + " needs two-sided stable coordinates");
        if (t == "corrective")
            for (double r : rho) require(r == 0.5, "corrective needs rho = 1/2");
        if (t == "killing" || t == "compensation" || t == "corrective")
            for (double v : start) require(v > 0.0, t + " needs a start in the open orthant");
        if (t == "dynkin")
            require(model == Model::skorokhod_stable || model == Model::skorokhod_bm, "dynkin needs a Skorokhod model");
        if (t == "sde") require(model == Model::skorokhod_bm && d == 2, "sde needs model = skorokhod-bm and d = 2");
    }
    for (const auto& v : dynkin_variants) parse_variant(v);
    require(corrective_bins >= 1, "corrective.bins must be >= 1");
    for (std::size_t n : roundtrip_dims) require(n >= 1, "roundtrip.dims must be >= 1");
}

namespace {

std::vector<double> on_simplex(std::span<const double> x) {
    double n = l1_norm(x);
    std::vector<double> out(x.begin(), x.end());
    for (auto& v : out) v /= n;
    return out;
}

struct PlotData {
    std::vector<double> lifetimes;
    std::vector<CorrectiveEvent> events;
};

TestReport run_test_impl(const ExperimentConfig& c, const std::string& name, PlotData* plot) {
    if (name == "roundtrip") {
        std::vector<TestReport> parts;
        for (std::size_t n : c.roundtrip_dims) parts.push_back(lamperti_roundtrip(n, c.paths, c.seed, c.roundtrip_tol));
        return parts.size() == 1 ? parts[0] : TestReport::composite("Lamperti roundtrip", std::move(parts));
    }
    if (name == "killing") {
        KillingConfig k;
        k.alpha = c.alpha;
        k.rho = c.rho;
        k.theta = on_simplex(c.start);
        k.window = c.killing_window;
        k.n_paths = c.paths;
        k.seed = c.seed;
        k.map_dt = c.killing_map_dt;
        k.delta = c.killing_delta;
        k.reference_alpha = c.killing_reference_alpha;
        return estimate_killing_rate(k, plot ? &plot->lifetimes : nullptr);
    }
    if (name == "compensation") {
        CompensationConfig k;
        k.alpha = c.alpha;
        k.rho = c.rho;
        k.theta = on_simplex(c.start);
        k.horizon = c.compensation_horizon;
        k.cutoff = c.compensation_cutoff;
        k.n_paths = c.paths;
        k.seed = c.seed;
        k.map_dt = c.compensation_map_dt;
        k.delta = c.compensation_delta;
        std::vector fs{functional_one(), functional_upward()};
        return TestReport::composite("jump kernel",
                                     {compensation_test(k, fs), kernel_mass_identity(c.seed, c.algebra_cases)});
    }
    if (name == "corrective") {
        CorrectiveConfig k;
        k.alpha = c.alpha;
        k.start = c.start;
        k.n_paths = c.paths;
        k.seed = c.seed;
        k.map_dt = c.corrective_map_dt;
        k.delta = c.corrective_delta;
        k.bins = c.corrective_bins;
        k.oracle_draws = c.corrective_oracle_draws;
        k.survival_times = c.corrective_survival_times;
        k.significance = c.significance;
        return corrective_jump_gof(k, plot ? &plot->events : nullptr);
    }
    if (name == "dynkin") {
        DynkinConfig k;
        k.model = c.model;
        k.alpha = c.alpha;
        k.start = c.start;
        k.t = c.dynkin_t;
        k.n_paths = c.paths;
        k.seed = c.seed;
        k.map_dt = c.dynkin_map_dt;
        k.delta = c.delta;
        k.generator_bound = c.dynkin_generator_bound;
        std::vector fs{make_class_d(gaussian_bump(c.d)), make_class_d(rational_bump(c.d)),
                       make_class_d(cosine_gaussian(c.d))};
        std::vector<GeneratorVariant> vs;
        for (const auto& v : c.dynkin_variants) vs.push_back(parse_variant(v));
        return dynkin_test(k, fs, vs);
    }
    if (name == "sde") {
        SdeConfig k;
        k.theta0 = c.start;
        k.t = c.sde_t;
        k.dt = c.sde_dt;
        k.n_paths = c.paths;
        k.seed = c.seed;
        k.variance_t = c.sde_variance_t;
        k.significance = c.significance;
        return sde_vs_transform_test(k);
    }
    if (name == "cf") return cf_test(StableParams(c.alpha, c.rho.at(0)), c.cf_samples, c.cf_z, c.seed);
    if (name == "sampler") {
        SamplerConfig k;
        k.n_cf = c.cf_samples;
        k.z = c.cf_z;
        k.n_paths = c.paths;
        k.grid_dt = c.grid_dt;
        k.n_tail = c.sampler_tail;
        k.seed = c.seed;
        k.significance = c.significance;
        return sampler_fidelity(k);
    }
    if (name == "algebra") return algebraic_identities(c.seed, c.algebra_cases);
    throw std::invalid_argument("unknown test " + name);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

const char* kind_tag(TestReport::Kind k) {
    switch (k) {
        case TestReport::Kind::moment: return "moment";
        case TestReport::Kind::distribution: return "distribution";
        case TestReport::Kind::exact: return "exact";
        case TestReport::Kind::composite: return "composite";
    }
    return "?";
}

void report_rows(std::ostream& os, const TestReport& r, const std::string& prefix) {
    std::string path = prefix.empty() ? r.name : prefix + " / " + r.name;
    os << csv_field(path) << ',' << kind_tag(r.kind) << ',' << fmt(r.estimate) << ',' << fmt(r.std_error) << ','
       << fmt(r.reference) << ',' << fmt(r.statistic) << ',' << fmt(r.p_value) << ',' << r.n_paths << ','
       << fmt(r.significance) << ',' << (r.pass ? 1 : 0) << '\n';
    for (const auto& p : r.parts) report_rows(os, p, path);
}

void write_hazard_curve(std::ostream& os, std::vector<double> lifetimes, double window, double q) {
    // Nelson-Aalen cumulative hazard against q t
    std::sort(lifetimes.begin(), lifetimes.end());
    os << "t,empirical_cumulative_hazard,analytic_cumulative_hazard\n";
    const double n = static_cast<double>(lifetimes.size());
    double h = 0.0;
    std::size_t i = 0;
    for (int k = 0; k <= 20; ++k) {
        double t = window * k / 20.0;
        for (; i < lifetimes.size() && lifetimes[i] <= t; ++i) h += 1.0 / (n - static_cast<double>(i));
        os << fmt(t) << ',' << fmt(h) << ',' << fmt(q * t) << '\n';
    }
}

void write_corrective_histogram(std::ostream& os, const std::vector<CorrectiveEvent>& ev, double alpha) {
    os << "bin_lo,bin_hi,empirical_density,analytic_density\n";
    if (ev.size() < 2) return;
    std::vector<double> x;
    for (const auto& e : ev) x.push_back(e.dxi);
    std::sort(x.begin(), x.end());
    double lo = x[static_cast<std::size_t>(0.005 * (x.size() - 1))];
    double hi = x[static_cast<std::size_t>(0.995 * (x.size() - 1))];
    if (!(hi > lo)) return;
    constexpr int nb = 60;
    const double w = (hi - lo) / nb;
    std::vector<double> count(nb, 0.0);
    for (double v : x)
        if (v >= lo && v < hi) count[std::min(nb - 1, static_cast<int>((v - lo) / w))] += 1.0;
    // analytic mixture over observed pre-jump modulators (thinned)
    const std::size_t stride = std::max<std::size_t>(1, ev.size() / 2000);
    for (int b = 0; b < nb; ++b) {
        double mid = lo + (b + 0.5) * w, dens = 0.0, m = 0.0;
        for (std::size_t k = 0; k < ev.size(); k += stride) {
            for (std::size_t j = 0; j < ev[k].before.size(); ++j)
                dens += corrective_jump_density(alpha, ev[k].before, j, mid);
            m += 1.0;
        }
        os << fmt(lo + b * w) << ',' << fmt(lo + (b + 1) * w) << ',' << fmt(count[b] / (x.size() * w)) << ','
           << fmt(dens / m) << '\n';
    }
}

}  // namespace

TestReport run_test(const ExperimentConfig& c, const std::string& name) { return run_test_impl(c, name, nullptr); }

void write_report_csv(std::ostream& os, const TestReport& r) {
    os << "path,kind,estimate,std_error,reference,statistic,p_value,n_paths,significance,pass\n";
    report_rows(os, r, "");
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
    c.validate();
    namespace fs = std::filesystem;
    fs::path dir(c.out_dir);
    fs::create_directories(dir);
    ExperimentResult res;
    auto open = [&](const std::string& name) {
        fs::path p = dir / name;
        std::ofstream os(p);
        if (!os) throw std::runtime_error("cannot write " + p.string());
        res.files.push_back(p);
        return os;
    };
    {
        auto os = open("config.cfg");
        write_config(os, c);
    }

    if (c.dump_paths > 0) {
        auto s = c.ssmp();
        for (std::uint64_t k = 0; k < c.dump_paths; ++k) {
            auto z = simulate_ssmp(s, c.start, RngStream(c.seed, k));
            auto m = ssmp_to_map(z, s.index());
            auto zs = open("ssmp_" + std::to_string(k) + ".csv");
            write_csv(zs, z);
            auto ms = open("map_" + std::to_string(k) + ".csv");
            write_csv(ms, m);
        }
    }

    for (const auto& t : c.tests) {
        PlotData plot;
        TestReport r;
        try {
            r = run_test_impl(c, t, &plot);
        } catch (const std::exception& e) {
            r.name = t;
            r.kind = TestReport::Kind::composite;
            r.pass = false;
            r.note = std::string("error: ") + e.what();
        }
        {
            auto os = open(t + ".json");
            os << to_json(r).dump(2) << '\n';
        }
        {
            auto os = open(t + ".csv");
            write_report_csv(os, r);
        }
        if (t == "killing" && !plot.lifetimes.empty()) {
            auto os = open("hazard_curve.csv");
            write_hazard_curve(os, plot.lifetimes, c.killing_window, killing_rate(c.alpha, c.rho, on_simplex(c.start)));
        }
        if (t == "corrective" && !plot.events.empty()) {
            auto os = open("corrective_histogram.csv");
            write_corrective_histogram(os, plot.events, c.alpha);
        }
        if (!r.pass) res.failures.push_back(t);
        res.reports.push_back(std::move(r));
    }
    {
        auto os = open("failures.json");
        os << nlohmann::json{{"pass", res.pass()}, {"failures", res.failures}}.dump(2) << '\n';
    }
    {
        // the only file that varies between identical runs
        auto os = open("metadata.json");
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[64];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << nlohmann::json{{"created", buf}, {"tests", c.tests}}.dump(2) << '\n';
    }
    return res;
}

}  // namespace lamperti
