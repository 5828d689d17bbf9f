#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lamperti/analytics.hpp"
#include "lamperti/experiment.hpp"
#include "lamperti/lamperti.hpp"

using namespace lamperti;
namespace fs = std::filesystem;

namespace {

std::string default_out() {
    const char* e = std::getenv("LAMPERTI_OUT");
    return e && *e ? e : ".";
}

OrthantFunction orthant_function(const std::string& name, std::size_t d) {
    if (name == "gaussian") return gaussian_bump(d);
    if (name == "rational") return rational_bump(d);
    if (name == "cosine-gaussian") return cosine_gaussian(d);
    throw std::invalid_argument("unknown test function " + name);
}

void print_tree(const TestReport& r, int depth) {
    std::cout << std::string(2 * depth, ' ') << (r.pass ? "PASS " : "FAIL ") << r.name;
    switch (r.kind) {
        case TestReport::Kind::moment:
            std::cout << ": " << r.estimate << " +- " << r.std_error << " vs " << r.reference;
            break;
        case TestReport::Kind::distribution:
            std::cout << ": D = " << r.statistic << ", p = " << r.p_value << " (level " << r.significance << ")";
            break;
        case TestReport::Kind::exact:
            std::cout << ": " << r.estimate << " vs " << r.reference << " tol " << r.std_error;
            break;
        case TestReport::Kind::composite: break;
    }
    if (!r.note.empty()) std::cout << "  [" << r.note << "]";
    std::cout << '\n';
    for (const auto& p : r.parts) print_tree(p, depth + 1);
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lamperti-type simulation and verification of self-similar Markov processes in the orthant"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate ssMp paths and dump them as CSV");
    std::string model = "killed", out_dir = default_out();
    std::size_t d = 2;
    std::vector<double> start, rho;
    double alpha = 1.0, delta = 0.1, grid_dt = 1e-3, horizon = 1.0, epsilon = 1e-6;
    std::uint64_t seed = 1, paths = 1;
    bool with_map = false;
    sim->add_option("--model", model, "killed | symmetric | skorokhod-stable | skorokhod-bm")->capture_default_str();
    sim->add_option("--d", d)->capture_default_str();
    sim->add_option("--start", start, "x1,..,xd (default all ones)")->delimiter(',');
    sim->add_option("--alpha", alpha)->capture_default_str();
    sim->add_option("--rho", rho, "per coordinate, comma-separated")->delimiter(',');
    sim->add_option("--delta", delta, "big-jump threshold")->capture_default_str();
    sim->add_option("--seed", seed)->capture_default_str();
    sim->add_option("--paths", paths)->capture_default_str();
    sim->add_option("--grid-dt", grid_dt)->capture_default_str();
    sim->add_option("--horizon", horizon)->capture_default_str();
    sim->add_option("--epsilon", epsilon, "absorption radius")->capture_default_str();
    sim->add_option("--out", out_dir, "output directory (default $LAMPERTI_OUT or .)");
    sim->add_flag("--map", with_map, "also write the Lamperti-transformed MAP path");

    // transform
    auto* tr = app.add_subcommand("transform", "Lamperti transform of a path CSV");
    std::string direction, in_path, out_path;
    double tr_alpha = 1.0;
    tr->add_option("--direction", direction, "to-map | to-ssmp")->required()->check(CLI::IsMember({"to-map", "to-ssmp"}));
    tr->add_option("--alpha", tr_alpha, "self-similarity index")->required();
    tr->add_option("--in", in_path)->required()->check(CLI::ExistingFile);
    tr->add_option("--out", out_path)->required();

    // analytics
    auto* an = app.add_subcommand("analytics", "evaluate closed forms; prints CSV");
    an->require_subcommand(1);
    std::vector<double> theta{0.5, 0.5}, an_rho, ys, xs{0.0};
    double an_alpha = 1.0;
    std::size_t jdir = 0;
    std::string variant = "reconciled", function = "gaussian", gen_model = "skorokhod-stable";
    auto common = [&](CLI::App* s, bool with_rho) {
        s->add_option("--alpha", an_alpha)->capture_default_str();
        s->add_option("--theta", theta, "modulator, comma-separated")->delimiter(',');
        if (with_rho) s->add_option("--rho", an_rho, "per coordinate (default 1/2)")->delimiter(',');
    };
    auto* an_q = an->add_subcommand("q", "killing rate q(theta)");
    common(an_q, true);
    auto* an_k = an->add_subcommand("kernel", "jump kernel density of the killed MAP");
    common(an_k, true);
    an_k->add_option("--j", jdir, "jump direction (0-based)")->capture_default_str();
    an_k->add_option("--y", ys, "jump sizes in xi")->delimiter(',')->required();
    auto* an_c = an->add_subcommand("corrective", "corrective jump law of the reflected symmetric MAP");
    common(an_c, false);
    an_c->add_option("--x", ys, "jump sizes in xi")->delimiter(',')->required();
    auto* an_s = an->add_subcommand("sde", "SDE coefficients for d = 2");
    common(an_s, false);
    auto* an_g = an->add_subcommand("generator", "MAP generator applied to a class-D test function");
    common(an_g, false);
    an_g->add_option("--model", gen_model, "skorokhod-stable | skorokhod-bm")->capture_default_str();
    an_g->add_option("--x", xs, "ordinates")->delimiter(',');
    an_g->add_option("--function", function, "gaussian | rational | cosine-gaussian")->capture_default_str();
    an_g->add_option("--variant", variant, "literal | reconciled")->capture_default_str();

    // verify
    auto* ver = app.add_subcommand("verify", "run one verification test from a config file");
    std::string test, config_path, report_path, csv_path;
    ver->add_option("test", test)->required()->check(CLI::IsMember(known_tests()));
    ver->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    ver->add_option("--out", report_path, "report JSON (default $LAMPERTI_OUT/<test>.json)");
    ver->add_option("--csv", csv_path, "per-part detail CSV");

    // report
    auto* rep = app.add_subcommand("report", "summarize report JSON files; exit 0 iff all pass");
    std::vector<std::string> report_files;
    rep->add_option("reports", report_files)->required()->check(CLI::ExistingFile);

    // run
    auto* run = app.add_subcommand("run", "run_experiment over a config: simulate, transform, verify");
    std::string run_config, run_out;
    run->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "overrides output.dir");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            SsmpConfig cfg;
            cfg.model = parse_model(model);
            cfg.d = d;
            if (cfg.model != Model::skorokhod_bm) {
                if (rho.empty()) rho.assign(d, 0.5);
                if (rho.size() == 1) rho.assign(d, rho[0]);
                for (double r : rho) cfg.params.emplace_back(alpha, r);
            }
            cfg.delta = delta;
            cfg.grid_dt = grid_dt;
            cfg.horizon = horizon;
            cfg.epsilon = epsilon;
            if (start.empty()) start.assign(d, 1.0);
            cfg.validate();
            fs::create_directories(out_dir);
            for (std::uint64_t k = 0; k < paths; ++k) {
                auto z = simulate_ssmp(cfg, start, RngStream(seed, k));
                auto os = open_out(fs::path(out_dir) / ("ssmp_" + std::to_string(k) + ".csv"));
                write_csv(os, z);
                if (with_map) {
                    auto ms = open_out(fs::path(out_dir) / ("map_" + std::to_string(k) + ".csv"));
                    write_csv(ms, ssmp_to_map(z, cfg.index()));
                }
            }
            std::cout << "wrote " << paths << " path(s) to " << out_dir << '\n';
            return 0;
        }
        if (*tr) {
            std::ifstream is(in_path);
            auto os = open_out(out_path);
            if (direction == "to-map") write_csv(os, ssmp_to_map(read_skeleton_csv(is), tr_alpha));
            else write_csv(os, map_to_ssmp(read_map_csv(is), tr_alpha));
            return 0;
        }
        if (*an) {
            std::cout.precision(17);
            if (an_rho.empty()) an_rho.assign(theta.size(), 0.5);
            if (*an_q) {
                std::cout << "q\n" << killing_rate(an_alpha, an_rho, theta) << '\n';
            } else if (*an_k) {
                std::cout << "y,density\n";
                for (double y : ys) std::cout << y << ',' << jump_kernel_density(an_alpha, an_rho, theta, jdir, y) << '\n';
            } else if (*an_c) {
                std::cout << "direction,x,probability,density,cdf\n";
                for (std::size_t j = 0; j < theta.size(); ++j)
                    for (double x : ys)
                        std::cout << j << ',' << x << ',' << corrective_direction_probability(an_alpha, theta, j) << ','
                                  << corrective_jump_density(an_alpha, theta, j, x) << ','
                                  << corrective_jump_cdf(an_alpha, theta, j, x) << '\n';
            } else if (*an_s) {
                auto c = sde_coefficients(theta);
                std::cout << "row,a,b1,b2,gamma\n";
                for (int i = 0; i < 3; ++i)
                    std::cout << i << ',' << c.a[i] << ',' << c.b[i][0] << ',' << c.b[i][1] << ',' << c.gamma[i] << '\n';
                std::cout << "lambda2,lambda3\n" << c.lambda2 << ',' << c.lambda3 << '\n';
            } else if (*an_g) {
                auto f = make_class_d(orthant_function(function, theta.size()));
                bool bm = parse_model(gen_model) == Model::skorokhod_bm;
                auto v = parse_variant(variant);
                std::cout << "x,generator\n";
                for (double x : xs)
                    std::cout << x << ','
                              << (bm ? generator_bm_map(f, x, theta) : generator_skorokhod_map(f, x, theta, an_alpha, v))
                              << '\n';
            }
            return 0;
        }
        if (*ver) {
            auto cfg = load_config(config_path);
            cfg.tests = {test};
            cfg.validate();
            auto r = run_test(cfg, test);
            if (report_path.empty()) report_path = (fs::path(default_out()) / (test + ".json")).string();
            open_out(report_path) << to_json(r).dump(2) << '\n';
            if (!csv_path.empty()) {
                auto os = open_out(csv_path);
                write_report_csv(os, r);
            }
            print_tree(r, 0);
            return r.pass ? 0 : 1;
        }
        if (*rep) {
            bool all = true;
            for (const auto& f : report_files) {
                std::ifstream is(f);
                auto r = report_from_json(nlohmann::json::parse(is));
                print_tree(r, 0);
                all = all && r.pass;
            }
            return all ? 0 : 1;
        }
        if (*run) {
            auto cfg = load_config(run_config);
            if (!run_out.empty()) cfg.out_dir = run_out;
            else if (cfg.out_dir == "out") cfg.out_dir = (fs::path(default_out()) / "out").string();
            auto res = run_experiment(cfg);
            for (const auto& r : res.reports) std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
            if (!res.pass()) {
                std::cerr << nlohmann::json{{"failures", res.failures}}.dump() << '\n';
                return 1;
            }
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
