#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "equistab/commands.hpp"
#include "equistab/error.hpp"
#include "equistab/expr.hpp"
#include "equistab/model.hpp"
#include "equistab/stability.hpp"

namespace py = pybind11;
using namespace equistab;

namespace {

CommandFlags flags_from(py::kwargs kw)
{
    CommandFlags f;
    for (auto item : kw) {
        const std::string k = py::cast<std::string>(item.first);
        py::handle v = item.second;
        if (k == "seed") {
            f.seed = v.cast<std::uint64_t>();
        } else if (k == "step") {
            f.step = v.cast<double>();
        } else if (k == "horizon") {
            f.horizon = v.cast<double>();
        } else if (k == "eps") {
            f.eps = v.cast<double>();
        } else if (k == "deltas") {
            f.deltas = v.cast<std::vector<double>>();
        } else if (k == "samples") {
            f.samples = v.cast<int>();
        } else if (k == "tol_releq") {
            f.tol_releq = v.cast<double>();
        } else if (k == "tol_nondeg") {
            f.tol_nondeg = v.cast<double>();
        } else if (k == "radius_hint") {
            f.radius_hint = v.cast<double>();
        } else if (k == "A_override") {
            f.A_override = v.cast<double>();
        } else if (k == "field") {
            f.field = v.cast<std::string>();
        } else if (k == "threads") {
            f.threads = v.cast<int>();
        } else {
            throw py::type_error("unknown option '" + k + "'");
        }
    }
    return f;
}

} // namespace

PYBIND11_MODULE(_equistab, m)
{
    m.doc() = "Relative-equilibrium stability toolkit (native core)";
    m.attr("__version__") = version_string;

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error &e) {
            PyErr_SetString(error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<Expression>(m, "Expression")
        .def_static("parse", &Expression::parse, py::arg("text"), py::arg("n_vars"))
        .def_property_readonly("n_vars", &Expression::n_vars)
        .def("eval", py::overload_cast<const Vec &>(&Expression::eval, py::const_), py::arg("x"))
        .def("gradient", &Expression::gradient, py::arg("x"))
        .def("hessian", &Expression::hessian, py::arg("x"))
        .def("__str__", &Expression::to_string)
        .def("__repr__", [](const Expression &e) { return "Expression('" + e.to_string() + "')"; });

    py::class_<Model>(m, "Model")
        .def_readonly("name", &Model::name)
        .def_readonly("hash", &Model::hash)
        .def_readonly("points", &Model::points)
        .def_readonly("momentum_auto", &Model::momentum_auto)
        .def_property_readonly("dim", [](const Model &md) { return md.system->dim(); })
        .def_property_readonly("group_dim", [](const Model &md) { return md.system->group().dim(); })
        .def("hamiltonian", [](const Model &md, const Vec &x) { return md.system->h.eval(x); })
        .def("momentum", [](const Model &md, const Vec &x) { return Vec(md.system->phi(x).coords); })
        .def("invariants", [](const Model &md, const Vec &x) { return md.invariants(x); })
        .def("verdict", [](const Model &md, const std::string &point) {
            const StabilityReport r = mro_verdict(*md.system, md.point(point));
            py::dict d;
            d["verdict"] = std::string(to_string(r.verdict));
            d["class"] = std::string(to_string(r.cls));
            d["xi"] = Vec(r.xi.coords);
            d["eigenvalues"] = r.eigenvalues;
            d["W_dim"] = r.W_dim;
            return d;
        }, py::arg("point") = "");

    m.def("parse_model", &parse_model, py::arg("text"));
    m.def("load_model", &load_model, py::arg("path"));

    m.def("_analyze", [](const std::string &path, const std::string &point, py::kwargs kw) {
        const CommandFlags f = flags_from(kw);
        py::gil_scoped_release nogil;
        return cmd_analyze(path, point, f);
    });
    m.def("_simulate", [](const std::string &path, const std::string &point, py::kwargs kw) {
        const CommandFlags f = flags_from(kw);
        py::gil_scoped_release nogil;
        return cmd_simulate(path, point, f);
    });
    m.def("_probe", [](const std::string &path, const std::string &point, py::kwargs kw) {
        const CommandFlags f = flags_from(kw);
        py::gil_scoped_release nogil;
        return cmd_probe(path, point, f);
    });
    m.def("_verify", [](const std::string &path, py::kwargs kw) {
        const CommandFlags f = flags_from(kw);
        py::gil_scoped_release nogil;
        return cmd_verify(path, f);
    });

    py::class_<CommandResult>(m, "CommandResult")
        .def_readonly("exit_code", &CommandResult::exit_code)
        .def_readonly("report", &CommandResult::report)
        .def_readonly("text", &CommandResult::text)
        .def_readonly("csv", &CommandResult::csv);
}
