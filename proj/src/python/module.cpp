#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlab/detectors.hpp"
#include "mlab/errors.hpp"
#include "mlab/experiments.hpp"
#include "mlab/geometry.hpp"
#include "mlab/pathsim.hpp"
#include "mlab/policies.hpp"
#include "mlab/rng.hpp"

namespace py = pybind11;
using namespace mlab;

namespace {

TraceMode trace_from_string(const std::string& s) {
    if (s == "none") return TraceMode::none;
    if (s == "rz") return TraceMode::rz;
    if (s == "full") return TraceMode::full;
    throw config_error("trace must be one of none/rz/full, got '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_mlab, mod) {
    mod.doc() = "core bindings for the mlab Monte Carlo laboratory";
    mod.attr("__version__") = MLAB_VERSION;

    py::register_exception<config_error>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<numeric_error>(mod, "NumericError", PyExc_ArithmeticError);

    py::class_<CurvatureProfile>(mod, "CurvatureProfile")
        .def_static("euclidean", &CurvatureProfile::euclidean)
        .def_static("hyperbolic", &CurvatureProfile::hyperbolic, py::arg("a"))
        .def_static("log_family", &CurvatureProfile::log_family, py::arg("c"),
                    py::arg("blend_radius") = 3.0)
        .def_static("log_sqrt", &CurvatureProfile::log_sqrt, py::arg("blend_radius") = 6.0)
        .def_static("custom", &CurvatureProfile::custom, py::arg("k"))
        .def("__call__", &CurvatureProfile::operator(), py::arg("r"))
        .def("describe", &CurvatureProfile::describe);

    py::class_<WarpFunction>(mod, "Warp")
        .def("g", &WarpFunction::g, py::arg("r"))
        .def("dg", &WarpFunction::dg, py::arg("r"))
        .def("log_g", &WarpFunction::log_g, py::arg("r"))
        .def("dlog_g", &WarpFunction::dlog_g, py::arg("r"))
        .def("inv_g_sq", &WarpFunction::inv_g_sq, py::arg("r"))
        .def_property_readonly("r_max", &WarpFunction::r_max)
        .def_property_readonly("tabulated", &WarpFunction::tabulated)
        .def_property_readonly("node_count", &WarpFunction::node_count)
        .def("max_ode_residual", &WarpFunction::max_ode_residual, py::arg("profile"))
        .def("export_csv", &WarpFunction::export_csv, py::arg("path"))
        .def_static("import_csv", &WarpFunction::import_csv, py::arg("path"));

    mod.def("solve_jacobi", &solve_jacobi, py::arg("profile"), py::arg("r_max"),
            py::arg("rel_tol") = 1e-8, py::arg("force_table") = false);

    py::class_<PathRecord>(mod, "PathRecord")
        .def_readonly("path_index", &PathRecord::path_index)
        .def_readonly("m", &PathRecord::m)
        .def_property_readonly("stop", [](const PathRecord& p) { return to_string(p.stop); })
        .def_readonly("t_end", &PathRecord::t_end)
        .def_readonly("r_end", &PathRecord::r_end)
        .def_readonly("z_end", &PathRecord::z_end)
        .def_readonly("theta_end", &PathRecord::theta_end)
        .def_readonly("steps", &PathRecord::steps)
        .def_readonly("min_r", &PathRecord::min_r)
        .def_readonly("t", &PathRecord::t)
        .def_readonly("r", &PathRecord::r)
        .def_readonly("z", &PathRecord::z)
        .def_readonly("theta", &PathRecord::theta)
        .def_property_readonly("level_hits",
                               [](const PathRecord& p) {
                                   std::vector<std::pair<double, double>> out;
                                   for (const auto& lw : p.levels)
                                       out.emplace_back(lw.level, lw.t_hit);
                                   return out;
                               })
        .def_property_readonly("returns", [](const PathRecord& p) {
            std::vector<std::tuple<double, double, int>> out;
            for (const auto& rw : p.returns) out.emplace_back(rw.a, rw.k, rw.phase);
            return out;
        });

    mod.def(
        "simulate_path",
        [](const WarpFunction& warp, int n, int m, double r0, std::vector<double> theta0,
           std::uint64_t seed, std::uint64_t path_index, double eta, double phi,
           double r_inner, double r_outer, double t_max, double reflect_floor,
           std::vector<double> levels, std::vector<std::pair<double, double>> returns,
           const std::string& trace) {
            FramePolicy pol =
                phi == 0.0 ? FramePolicy::radial(n, m) : FramePolicy::fixed_angle(n, m, phi);
            StepControls sc;
            sc.eta = eta;
            sc.r_inner = r_inner;
            sc.r_outer = r_outer;
            sc.t_max = t_max;
            sc.reflect_floor = reflect_floor;
            RecordOptions rec;
            rec.trace = trace_from_string(trace);
            return simulate_path(warp, pol, sc, rec, r0, theta0, std::move(levels),
                                 std::move(returns), make_stream(seed, path_index), path_index);
        },
        py::arg("warp"), py::arg("n"), py::arg("m"), py::arg("r0"),
        py::arg("theta0") = std::vector<double>{}, py::arg("seed") = 12345,
        py::arg("path_index") = 0, py::arg("eta") = 0.05, py::arg("phi") = 0.0,
        py::arg("r_inner") = 0.0, py::arg("r_outer") = std::numeric_limits<double>::infinity(),
        py::arg("t_max") = std::numeric_limits<double>::infinity(),
        py::arg("reflect_floor") = 0.0, py::arg("levels") = std::vector<double>{},
        py::arg("returns") = std::vector<std::pair<double, double>>{},
        py::arg("trace") = "none");

    // closed-form regime bounds and the quadrature oracle
    mod.def("bessel_return_bound", &bessel_return_bound, py::arg("a"), py::arg("k"),
            py::arg("n"));
    mod.def("log_regime_return_bound", &log_regime_return_bound, py::arg("a"), py::arg("k"),
            py::arg("eps"));
    mod.def("radial_hit_probability", &radial_hit_probability, py::arg("warp"), py::arg("n"),
            py::arg("alpha"), py::arg("r0"), py::arg("a"), py::arg("b"));

    // experiment catalog and runner
    mod.def("preset_names", &preset_names);
    mod.def("preset_summary", &preset_summary, py::arg("name"));
    mod.def("preset_config", &preset_config, py::arg("name"));
    mod.def("load_config_file", &load_config_file, py::arg("path"));
    mod.def("validate_config", &validate_config, py::arg("config"));
    mod.def("canonical_config", &canonical_config, py::arg("config"));
    mod.def("config_hash", &config_hash, py::arg("config"));
    mod.def(
        "run_experiment_json",
        [](const ExperimentConfig& cfg, std::uint64_t seed, int threads,
           const std::string& out_dir, bool dump_paths, bool quiet) {
            RunOptions opt;
            opt.seed = seed;
            opt.threads = threads;
            opt.out_dir = out_dir;
            opt.dump_paths = dump_paths;
            opt.quiet = quiet;
            RunResult res = run_experiment(cfg, opt);
            return py::make_tuple(res.passed, res.verdict, res.report.dump());
        },
        py::arg("config"), py::arg("seed") = 12345, py::arg("threads") = 1,
        py::arg("out_dir") = ".", py::arg("dump_paths") = false, py::arg("quiet") = true);
}
