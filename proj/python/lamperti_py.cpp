// Python module _lamperti: closed forms, path simulation, transforms and the verification suite.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lamperti/analytics.hpp"
#include "lamperti/experiment.hpp"
#include "lamperti/lamperti.hpp"
#include "lamperti/ssmp.hpp"
#include "lamperti/verify.hpp"

namespace py = pybind11;
using namespace lamperti;

namespace {

py::array_t<double> matrix(const std::vector<double>& v, std::size_t cols) {
    py::array_t<double> a({v.size() / cols, cols});
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::list mark_list(const std::vector<std::optional<JumpMark>>& marks) {
    py::list out;
    for (const auto& m : marks) out.append(m ? py::object(py::make_tuple(m->coord, m->size)) : py::object(py::none()));
    return out;
}

py::list tag_list(const std::vector<EventTag>& tags) {
    py::list out;
    for (auto t : tags) out.append(to_string(t));
    return out;
}

const char* end_name(PathEnd e) {
    return e == PathEnd::alive ? "alive" : e == PathEnd::killed ? "killed" : "absorbed";
}

py::object report(const TestReport& r) { return py::module_::import("json").attr("loads")(to_json(r).dump()); }

ExperimentConfig config_from(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

OrthantFunction orthant_function(const std::string& name, std::size_t d) {
    if (name == "gaussian") return gaussian_bump(d);
    if (name == "rational") return rational_bump(d);
    if (name == "cosine-gaussian") return cosine_gaussian(d);
    if (name == "constant") return constant_function(d);
    throw std::invalid_argument("unknown test function " + name);
}

SsmpConfig ssmp_config(const std::string& model, std::size_t d, double alpha, std::vector<double> rho, double grid_dt,
                       double horizon, double delta, double epsilon) {
    SsmpConfig c;
    c.model = parse_model(model);
    c.d = d;
    if (c.model != Model::skorokhod_bm) {
        if (rho.empty()) rho.assign(d, c.model == Model::skorokhod_stable ? 1.0 - 1.0 / alpha : 0.5);
        if (rho.size() == 1) rho.assign(d, rho[0]);
        for (double r : rho) c.params.emplace_back(alpha, r);
    }
    c.grid_dt = grid_dt;
    c.horizon = horizon;
    c.delta = delta;
    c.epsilon = epsilon;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_lamperti, m) {
    m.doc() = "Lamperti-type representation of self-similar Markov processes in the orthant";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const std::domain_error& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        }
    });

    py::class_<StableParams>(m, "StableParams")
        .def(py::init<double, double>(), py::arg("alpha"), py::arg("rho"))
        .def_property_readonly("alpha", &StableParams::alpha)
        .def_property_readonly("rho", &StableParams::rho)
        .def_property_readonly("c1", &StableParams::c1)
        .def_property_readonly("c2", &StableParams::c2)
        .def_property_readonly("spectrally_positive", &StableParams::spectrally_positive)
        .def("levy_density", &StableParams::levy_density)
        .def("char_exponent", &StableParams::char_exponent)
        .def("tail_mass", &StableParams::tail_mass)
        .def("sample", [](const StableParams& p, std::size_t n, double dt, std::uint64_t seed, std::uint64_t stream) {
            RngStream rng(seed, stream);
            py::array_t<double> out(n);
            auto* x = out.mutable_data();
            for (std::size_t k = 0; k < n; ++k) x[k] = sample_stable_increment(p, dt, rng);
            return out;
        }, py::arg("n"), py::arg("dt") = 1.0, py::arg("seed") = 1, py::arg("stream") = 0)
        .def("__repr__", [](const StableParams& p) {
            return "StableParams(alpha=" + std::to_string(p.alpha()) + ", rho=" + std::to_string(p.rho()) + ")";
        });

    m.def("polar_decompose", [](const std::vector<double>& x) -> py::tuple {
        auto p = polar_decompose(x);
        if (p.is_cemetery()) return py::make_tuple(-inf, py::none());
        auto a = p.angle().components();
        return py::make_tuple(p.log_norm(), std::vector<double>(a.begin(), a.end()));
    }, "(log |x|_1, x/|x|_1); the origin gives (-inf, None)");
    m.def("polar_compose", [](double log_norm, std::optional<std::vector<double>> angle, std::size_t d) {
        if (!angle) return polar_compose(PolarPoint::cemetery(d));
        return polar_compose(PolarPoint(log_norm, SimplexPoint(*angle)));
    }, py::arg("log_norm"), py::arg("angle"), py::arg("d") = 2);

    py::class_<SkeletonPath>(m, "SkeletonPath")
        .def_readonly("dim", &SkeletonPath::dim)
        .def_property_readonly("times", [](const SkeletonPath& p) { return py::array_t<double>(p.times.size(), p.times.data()); })
        .def_property_readonly("values", [](const SkeletonPath& p) { return matrix(p.values, p.dim); })
        .def_property_readonly("tags", [](const SkeletonPath& p) { return tag_list(p.tags); })
        .def_property_readonly("marks", [](const SkeletonPath& p) { return mark_list(p.marks); })
        .def_readonly("horizon", &SkeletonPath::horizon)
        .def_property_readonly("end", [](const SkeletonPath& p) { return end_name(p.end); })
        .def("__len__", &SkeletonPath::size)
        .def("to_csv", [](const SkeletonPath& p) {
            std::ostringstream os;
            write_csv(os, p);
            return os.str();
        });

    py::class_<MapPath>(m, "MapPath")
        .def_readonly("dim", &MapPath::dim)
        .def_property_readonly("times", [](const MapPath& p) { return py::array_t<double>(p.times.size(), p.times.data()); })
        .def_property_readonly("ordinate", [](const MapPath& p) { return py::array_t<double>(p.ordinate.size(), p.ordinate.data()); })
        .def_property_readonly("modulator", [](const MapPath& p) { return matrix(p.modulator, p.dim); })
        .def_property_readonly("tags", [](const MapPath& p) { return tag_list(p.tags); })
        .def_property_readonly("marks", [](const MapPath& p) { return mark_list(p.marks); })
        .def_readonly("lifetime", &MapPath::lifetime)
        .def_readonly("horizon", &MapPath::horizon)
        .def_readonly("censored", &MapPath::censored)
        .def("__len__", &MapPath::size)
        .def("to_csv", [](const MapPath& p) {
            std::ostringstream os;
            write_csv(os, p);
            return os.str();
        });

    m.def("simulate", [](const std::string& model, const std::vector<double>& start, double alpha,
                         const std::vector<double>& rho, std::uint64_t seed, std::uint64_t stream, double grid_dt,
                         double horizon, double delta, double epsilon) {
        auto c = ssmp_config(model, start.size(), alpha, rho, grid_dt, horizon, delta, epsilon);
        return simulate_ssmp(c, start, RngStream(seed, stream));
    }, py::arg("model"), py::arg("start"), py::arg("alpha") = 1.0, py::arg("rho") = std::vector<double>{},
       py::arg("seed") = 1, py::arg("stream") = 0, py::arg("grid_dt") = 1e-3, py::arg("horizon") = 1.0,
       py::arg("delta") = 0.1, py::arg("epsilon") = 1e-6,
       "one ssMp path: killed | symmetric | skorokhod-stable | skorokhod-bm");
    m.def("ssmp_to_map", &ssmp_to_map, py::arg("path"), py::arg("alpha"));
    m.def("map_to_ssmp", &map_to_ssmp, py::arg("path"), py::arg("alpha"));
    m.def("skeleton_distance", &skeleton_distance);
    m.def("read_skeleton_csv", [](const std::string& text) {
        std::istringstream is(text);
        return read_skeleton_csv(is);
    });
    m.def("read_map_csv", [](const std::string& text) {
        std::istringstream is(text);
        return read_map_csv(is);
    });

    // closed forms
    m.def("killing_rate", [](double alpha, const std::vector<double>& rho, const std::vector<double>& x) {
        return killing_rate(alpha, rho, x);
    }, py::arg("alpha"), py::arg("rho"), py::arg("x"));
    m.def("jump_vector_v", [](const std::vector<double>& theta, std::size_t j, double y) {
        std::vector<double> v(theta.size());
        jump_vector_v(theta, j, y, v);
        return v;
    }, py::arg("theta"), py::arg("j"), py::arg("y"));
    m.def("jump_kernel_density", [](double alpha, const std::vector<double>& rho, const std::vector<double>& theta,
                                    std::size_t j, double y) { return jump_kernel_density(alpha, rho, theta, j, y); },
          py::arg("alpha"), py::arg("rho"), py::arg("theta"), py::arg("j"), py::arg("y"));
    m.def("corrective_jump_density", [](double alpha, const std::vector<double>& xi, std::size_t j, double x) {
        return corrective_jump_density(alpha, xi, j, x);
    }, py::arg("alpha"), py::arg("xi"), py::arg("j"), py::arg("x"));
    m.def("corrective_jump_cdf", [](double alpha, const std::vector<double>& xi, std::size_t j, double x) {
        return corrective_jump_cdf(alpha, xi, j, x);
    }, py::arg("alpha"), py::arg("xi"), py::arg("j"), py::arg("x"));
    m.def("corrective_jump_from_uniforms", [](double alpha, const std::vector<double>& xi, double u_dir, double u) {
        auto c = corrective_jump_from_uniforms(alpha, xi, u_dir, u);
        return py::make_tuple(c.direction, c.dxi, c.landing);
    }, py::arg("alpha"), py::arg("xi"), py::arg("u_dir"), py::arg("u"), "(direction, dxi, landing modulator)");
    m.def("bm_map_coefficients", [](const std::vector<double>& theta) {
        auto c = bm_map_coefficients(theta);
        return py::make_tuple(c.b, matrix(c.a, theta.size() + 1));
    }, "(drift b, diffusion matrix a) of the MAP of reflected Brownian motion");
    m.def("sde_coefficients", [](const std::vector<double>& theta) {
        auto c = sde_coefficients(theta);
        py::dict d;
        d["a"] = c.a;
        d["b"] = c.b;
        d["gamma"] = c.gamma;
        d["lambda2"] = c.lambda2;
        d["lambda3"] = c.lambda3;
        return d;
    });
    m.def("generator", [](const std::string& model, const std::string& function, double x,
                          const std::vector<double>& theta, double alpha, const std::string& variant) {
        auto f = make_class_d(orthant_function(function, theta.size()));
        if (parse_model(model) == Model::skorokhod_bm) return generator_bm_map(f, x, theta);
        return generator_skorokhod_map(f, x, theta, alpha, parse_variant(variant));
    }, py::arg("model"), py::arg("function"), py::arg("x"), py::arg("theta"), py::arg("alpha") = 1.5,
       py::arg("variant") = "reconciled",
       "MAP generator applied to make_class_d(g), g in gaussian | rational | cosine-gaussian | constant");

    // verification
    m.def("known_tests", &known_tests);
    m.def("run_test", [](const std::string& config_text, const std::string& name) {
        auto c = config_from(config_text);
        c.tests = {name};
        c.validate();
        TestReport r;
        {
            py::gil_scoped_release nogil;
            r = run_test(c, name);
        }
        return report(r);
    }, py::arg("config"), py::arg("test"), "run one test from config text; returns the report as a dict");
    m.def("run_experiment", [](const std::string& config_text, const std::string& out_dir) {
        auto c = config_from(config_text);
        if (!out_dir.empty()) c.out_dir = out_dir;
        ExperimentResult res;
        {
            py::gil_scoped_release nogil;
            res = run_experiment(c);
        }
        py::list reports;
        for (const auto& r : res.reports) reports.append(report(r));
        py::dict d;
        d["pass"] = res.pass();
        d["reports"] = reports;
        d["failures"] = res.failures;
        std::vector<std::string> files;
        for (const auto& f : res.files) files.push_back(f.string());
        d["files"] = files;
        return d;
    }, py::arg("config"), py::arg("out_dir") = "");
    m.def("cf_test", [](double alpha, double rho, std::uint64_t n, const std::vector<double>& z, std::uint64_t seed) {
        return report(cf_test(StableParams(alpha, rho), n, z, seed));
    }, py::arg("alpha"), py::arg("rho"), py::arg("n"), py::arg("z"), py::arg("seed") = 1);
}
