// One line per acceptance criterion: run_experiment over the checked-in configs.
// usage: acceptance <config dir> <out dir> [criterion ...]
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lamperti/experiment.hpp"

using namespace lamperti;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::vector<std::string> configs;
    double limit_s;
};

const std::vector<Criterion> criteria{
    {1, "Lamperti roundtrip (d = 2, 3; four models)", {"c1_roundtrip.cfg"}, 60},
    {2, "killing rate of the killed MAP, with power check", {"c2_killing.cfg"}, 300},
    {3, "jump kernel: compensation and mass identity", {"c3_kernel.cfg"}, 600},
    {4, "corrective jumps: law by modulator bin and survival", {"c4_corrective.cfg"}, 600},
    {5, "algebraic identities", {"c5_algebra.cfg"}, 10},
    {6, "Dynkin defect: BM-MAP and Skorokhod-stable generators", {"c6_dynkin_bm.cfg", "c6_dynkin_stable.cfg"}, 900},
    {7, "SDE vs transformed reflected BM", {"c7_sde.cfg"}, 900},
    {8, "sampler fidelity", {"c8_sampler.cfg"}, 300},
};

void print_failures(const TestReport& r, const std::string& prefix) {
    std::string path = prefix.empty() ? r.name : prefix + " / " + r.name;
    if (r.pass) return;
    if (r.parts.empty()) {
        std::cout << "    failed: " << path;
        if (!r.note.empty()) std::cout << " [" << r.note << "]";
        std::cout << '\n';
    }
    for (const auto& p : r.parts) print_failures(p, path);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <config dir> <out dir> [criterion ...]\n";
        return 2;
    }
    fs::path cfg_dir = argv[1], out_dir = argv[2];
    std::vector<int> selected;
    for (int i = 3; i < argc; ++i) selected.push_back(std::stoi(argv[i]));

    bool all = true;
    for (const auto& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        auto t0 = std::chrono::steady_clock::now();
        bool pass = true;
        std::vector<TestReport> reports;
        std::string error;
        try {
            for (const auto& f : c.configs) {
                auto cfg = load_config(cfg_dir / f);
                cfg.out_dir = (out_dir / fs::path(f).stem()).string();
                auto res = run_experiment(cfg);
                pass = pass && res.pass();
                for (auto& r : res.reports) reports.push_back(std::move(r));
            }
        } catch (const std::exception& e) {
            pass = false;
            error = e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs <= c.limit_s;
        char line[256];
        std::snprintf(line, sizeof line, "criterion %d: %s  %s  (%.1f s, limit %.0f s)", c.id,
                      pass && in_time ? "PASS" : "FAIL", c.name.c_str(), secs, c.limit_s);
        std::cout << line << '\n';
        if (!error.empty()) std::cout << "    error: " << error << '\n';
        if (!in_time) std::cout << "    runtime limit exceeded\n";
        for (const auto& r : reports) print_failures(r, "");
        std::cout.flush();
        all = all && pass && in_time;
    }
    return all ? 0 : 1;
}
