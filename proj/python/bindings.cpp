#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ssmt/excursion.hpp"
#include "ssmt/harness.hpp"

namespace py = pybind11;
using namespace ssmt;

namespace {

// JSON crosses the boundary as Python objects through the json module.
py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
Json from_py(const py::object& o) { return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

CharacteristicQuadruplet quad(const py::object& o) { return quadruplet_from_json(from_py(o)); }

TreeOptions options(const std::string& mode, double dt, double x_min) {
    TreeOptions t;
    t.mode = mode_from_string(mode);
    t.dt = dt;
    t.x_min = x_min;
    return t;
}

struct Decomposition {
    DecoratedTree tree;
    LevelSet ls;
    std::vector<MarkedExcursion> exc;
};

}  // namespace

PYBIND11_MODULE(_ssmt, m) {
    m.doc() = "self-similar Markov tree lab";

    py::register_exception<Error>(m, "SsmtError");

    m.def("cumulant", [](const py::object& q, double g) { return cumulant(quad(q), g); }, py::arg("quadruplet"), py::arg("gamma"));
    m.def(
        "analyze_cumulant",
        [](const py::object& q) {
            const auto a = analyze_cumulant(quad(q));
            py::dict d;
            d["gamma0"] = a.gamma0;
            d["kappa_gamma0"] = a.kappa_gamma0;
            d["omega"] = a.omega ? py::cast(*a.omega) : py::none();
            d["kappa_prime_omega"] = a.kappa_prime_omega ? py::cast(*a.kappa_prime_omega) : py::none();
            return d;
        },
        py::arg("quadruplet"));

    m.def(
        "potential",
        [](const py::object& base, double lo, double hi, std::size_t n, const std::string& method, std::size_t paths,
           std::uint64_t seed) {
            const LevyCharacteristics c = characteristics_from_json(from_py(base));
            MonteCarloOptions mc;
            mc.n_paths = paths;
            mc.seed = seed;
            const auto k = method == "fourier" ? PotentialMethod::Fourier
                           : method == "mc"    ? PotentialMethod::MonteCarlo
                                               : PotentialMethod::ClosedForm;
            const PotentialTable t = potential_density(c, {lo, hi, n}, k, mc);
            std::vector<double> ys(n);
            for (std::size_t i = 0; i < n; ++i) ys[i] = t.grid.at(i);
            return py::make_tuple(ys, t.values);
        },
        py::arg("base"), py::arg("lo") = -5.0, py::arg("hi") = 5.0, py::arg("n") = 1001, py::arg("method") = "fourier",
        py::arg("paths") = 100000, py::arg("seed") = 1);

    m.def(
        "mean_formulas",
        [](const py::object& q, const std::vector<double>& xs) {
            const auto cq = quad(q);
            const auto f = make_mean_formulas(cq, analyze_cumulant(cq));
            py::dict d;
            d["v0"] = f.v.at(0.0);
            d["weighted_length"] = f.mean_weighted_length();
            d["level_individuals"] = f.mean_level_individuals();
            d["z_integral"] = f.z_integral();
            std::vector<double> lt, nh;
            for (double x : xs) {
                lt.push_back(f.mean_local_time(x));
                if (f.analysis.omega) nh.push_back(f.mean_hits(x));
            }
            d["local_time"] = lt;
            d["hits"] = nh;
            return d;
        },
        py::arg("quadruplet"), py::arg("levels") = std::vector<double>{0.5, 1.0, 2.0});

    py::class_<DecoratedTree>(m, "Tree")
        .def_property_readonly("size", [](const DecoratedTree& t) { return t.nodes.size(); })
        .def("to_json", [](const DecoratedTree& t, double res) { return to_py(tree_to_json(t, res)); }, py::arg("resolution") = 0.01)
        .def("local_time", [](const DecoratedTree& t, double x) { return level_local_time_total(t, x, default_eps(t.mode)); }, py::arg("x"))
        .def("hits", [](const DecoratedTree& t, double x) { return hitting_line(t, x).count(); }, py::arg("x"))
        .def("weighted_length", &weighted_length, py::arg("gamma"))
        .def(
            "export",
            [](const DecoratedTree& t, const std::filesystem::path& dir, double x, double res) {
                const auto p = export_tree(t, res, x, dir);
                return py::make_tuple(p.tree, p.polylines, p.overlay);
            },
            py::arg("dir"), py::arg("level") = 1.0, py::arg("resolution") = 0.01);

    m.def(
        "build_tree",
        [](const py::object& q, std::uint64_t seed, const std::string& mode, double dt, double x_min) {
            return build_tree(quad(q), 1.0, options(mode, dt, x_min), seed);
        },
        py::arg("quadruplet"), py::arg("seed"), py::arg("mode") = "DIFFUSION", py::arg("dt") = 1e-3, py::arg("x_min") = 1e-3);
    m.def("tree_from_json", [](const py::object& j) { return tree_from_json(from_py(j)); });

    m.def(
        "decompose",
        [](const DecoratedTree& t) {
            Decomposition d{t, level_individuals(t), {}};
            d.exc = decompose_excursions(d.tree, d.ls);
            const LevelTree lt = build_level_tree(d.ls, d.exc);
            const ExcursionProcess p = build_excursion_process(d.tree, d.ls, d.exc);
            py::dict out;
            out["level_individuals"] = d.ls.individuals.size();
            out["total"] = d.ls.total();
            out["excursions"] = to_py(excursions_to_json(d.tree, d.exc));
            out["level_tree"] = to_py(level_tree_to_json(lt));
            out["atoms"] = p.branching_atoms();
            out["F"] = p.F;
            return out;
        },
        py::arg("tree"));
    m.def(
        "reconstruct_level_tree",
        [](const std::vector<std::pair<double, std::size_t>>& atoms) { return to_py(level_tree_to_json(reconstruct_level_tree(atoms))); },
        py::arg("atoms"));

    m.def(
        "run",
        [](const py::object& config, const std::string& out) {
            const ExperimentConfig c = ExperimentConfig::from_json(from_py(config));
            RunReport r;
            {
                py::gil_scoped_release release;
                r = run(c, out);
            }
            return to_py(r.to_json());
        },
        py::arg("config"), py::arg("out") = "");
}
