#include "mcflab/scenario.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mcflab;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& obj) {
    return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::array_t<double> points(const std::vector<Vec>& pts) {
    const py::ssize_t d = pts.empty() ? 0 : pts.front().size();
    py::array_t<double> a({static_cast<py::ssize_t>(pts.size()), d});
    auto m = a.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < static_cast<py::ssize_t>(pts.size()); ++i)
        for (py::ssize_t k = 0; k < d; ++k) m(i, k) = pts[i](k);
    return a;
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vec to_vec(const Array& a) {
    if (a.ndim() != 1 || a.shape(0) > kMaxDim) throw Error(ErrorCode::InvalidArgument, "expected a short 1-d array");
    Vec v(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) v(i) = a.at(i);
    return v;
}

py::array_t<double> from_vec(const Vec& v) {
    py::array_t<double> a(v.size());
    for (int i = 0; i < v.size(); ++i) a.mutable_at(i) = v(i);
    return a;
}

py::dict trace_dict(const FlowTrace& t) {
    py::dict d;
    d["t"] = t.t;
    d["max_A2"] = t.max_A2;
    d["max_H2"] = t.max_H2;
    py::dict margins;
    for (std::size_t i = 0; i < t.margin_names.size(); ++i) margins[py::str(t.margin_names[i])] = t.min_margin[i];
    d["min_margin"] = margins;
    d["diameter"] = t.diameter;
    d["fiber_distance"] = t.fiber_distance;
    d["invariance_defect"] = t.invariance_defect;
    d["reference_h"] = t.reference_h;
    return d;
}

py::object verdict(const Verdict& v) { return to_py(verdict_to_json(v)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mean curvature flow through Riemannian submersions";

    py::register_exception<Error>(m, "McflabError", PyExc_RuntimeError);

    py::class_<AmbientSpace>(m, "AmbientSpace")
        .def_static("euclidean", &AmbientSpace::euclidean, py::arg("dim"))
        .def_static("round_sphere", &AmbientSpace::round_sphere, py::arg("dim"), py::arg("c") = 1.0)
        .def_static("fs_sphere", &AmbientSpace::fs_sphere, py::arg("c") = 1.0)
        .def_static("berger_sphere", &AmbientSpace::berger_sphere, py::arg("lam"), py::arg("c") = 1.0)
        .def_static("heisenberg", &AmbientSpace::heisenberg, py::arg("n") = 1)
        .def_static("sasaki_bundle", &AmbientSpace::sasaki_bundle, py::arg("r"), py::arg("c") = 1.0)
        .def_static("from_dict", [](const py::dict& d) { return space_from_json(from_py(d)); })
        .def_property_readonly("kind", [](const AmbientSpace& s) { return std::string(to_string(s.kind)); })
        .def_readonly("dim", &AmbientSpace::dim)
        .def_readonly("embed_dim", &AmbientSpace::embed_dim)
        .def("to_dict", [](const AmbientSpace& s) { return to_py(space_to_json(s)); })
        .def("project", [](const AmbientSpace& s, const Array& x) {
            return from_vec(project_to_space(s, to_vec(x)));
        })
        .def("__repr__", [](const AmbientSpace& s) { return "AmbientSpace(" + space_to_json(s).dump() + ")"; });

    py::class_<SubmersionModel>(m, "SubmersionModel")
        .def_static("hopf", &SubmersionModel::hopf, py::arg("c") = 1.0)
        .def_static("hopf_berger", &SubmersionModel::hopf_berger, py::arg("lam"), py::arg("c") = 1.0)
        .def_static("heisenberg_proj", &SubmersionModel::heisenberg_proj, py::arg("n") = 1)
        .def_static("sasaki_proj", &SubmersionModel::sasaki_proj, py::arg("r"), py::arg("c") = 1.0)
        .def_static("from_dict", [](const py::dict& d) { return submersion_from_json(from_py(d)); })
        .def_property_readonly("kind", [](const SubmersionModel& s) { return std::string(to_string(s.kind)); })
        .def_readonly("total", &SubmersionModel::total)
        .def_readonly("base", &SubmersionModel::base)
        .def("to_dict", [](const SubmersionModel& s) { return to_py(submersion_to_json(s)); })
        .def("project_point", [](const SubmersionModel& s, const Array& p) {
            return from_vec(project_point(s, to_vec(p)));
        })
        .def("horizontal_lift", [](const SubmersionModel& s, const Array& p, const Array& w) {
            return from_vec(horizontal_lift(s, to_vec(p), to_vec(w)));
        })
        .def("fiber_point", [](const SubmersionModel& s, const Array& b) {
            return from_vec(fiber_point(s, to_vec(b)));
        })
        .def("fiber_mean_curvature", [](const SubmersionModel& s, const Array& p) {
            return from_vec(fiber_mean_curvature(s, to_vec(p)));
        });

    py::class_<DiscreteImmersion>(m, "DiscreteImmersion")
        .def_readonly("space", &DiscreteImmersion::space)
        .def_property_readonly("is_curve",
                               [](const DiscreteImmersion& i) { return i.kind == ImmersionKind::Curve; })
        .def_property_readonly("vertices", [](const DiscreteImmersion& i) { return points(i.vertices); })
        .def_property_readonly("triangles", [](const DiscreteImmersion& i) {
            std::vector<std::array<int, 3>> t;
            for (const auto& tri : i.triangles) t.push_back(tri.v);
            return t;
        })
        .def("__len__", &DiscreteImmersion::size)
        .def("mesh_size", &DiscreteImmersion::mesh_size)
        .def("min_edge", &DiscreteImmersion::min_edge);

    m.def("plane_circle", &plane_circle, py::arg("radius"), py::arg("count"), py::arg("dim") = 2);
    m.def("geodesic_circle", &geodesic_circle, py::arg("sphere"), py::arg("rho"), py::arg("count"));
    m.def("great_circle", &great_circle, py::arg("sphere"), py::arg("count"));
    m.def("equatorial_sphere", &equatorial_sphere, py::arg("c"), py::arg("subdivisions"));
    m.def("clifford_torus", &clifford_torus, py::arg("c"), py::arg("count_a"), py::arg("count_b"),
          py::arg("r1") = -1.0, py::arg("amplitude") = 0.0);
    m.def("samples_for", &samples_for, py::arg("length"), py::arg("h"));
    m.def("lift_immersion", &lift_immersion, py::arg("sub"), py::arg("base"), py::arg("fiber_resolution"));
    m.def("lift_at_resolution", &lift_at_resolution, py::arg("sub"), py::arg("base"), py::arg("h"));
    m.def("project_immersion", &project_immersion, py::arg("sub"), py::arg("total"), py::arg("cluster_radius") = py::none());
    m.def("invariance_defect", &invariance_defect, py::arg("sub"), py::arg("total"));
    m.def("make_family", [](const std::string& name, const py::dict& params, double h) {
        return make_family(name, from_py(params), h);
    }, py::arg("name"), py::arg("params") = py::dict(), py::arg("h") = 0.05);
    m.def("catalog", [] { return to_py(catalog_to_json()); });

    m.def("fundamental_forms", [](const DiscreteImmersion& imm) {
        const auto f = fundamental_forms(imm);
        std::vector<double> a2, h2;
        for (const auto& v : f.vertices) {
            a2.push_back(v.norm_A2);
            h2.push_back(v.norm_H2);
        }
        py::dict d;
        d["A2"] = py::array_t<double>(a2.size(), a2.data());
        d["H2"] = py::array_t<double>(h2.size(), h2.data());
        return d;
    }, py::arg("imm"));
    m.def("pinching_condition", [](const py::dict& d) {
        return to_py(condition_to_json(condition_from_json(from_py(d))));
    }, py::arg("descriptor"));
    m.def("pinching_margin", [](double A2, double H2, const py::dict& d) {
        return pinching_margin_value(A2, H2, condition_from_json(from_py(d)));
    }, py::arg("A2"), py::arg("H2"), py::arg("condition"));

    py::class_<FlowPolicy>(m, "FlowPolicy")
        .def(py::init<>())
        .def_static("from_dict", [](const py::dict& d, double h) { return policy_from_json(from_py(d), h); },
                    py::arg("policy"), py::arg("default_h") = 0.05)
        .def_readwrite("horizon", &FlowPolicy::horizon)
        .def_readwrite("sample_interval", &FlowPolicy::sample_interval)
        .def_readwrite("target_h", &FlowPolicy::target_h)
        .def_readwrite("safety", &FlowPolicy::safety)
        .def_readwrite("singular_A2", &FlowPolicy::singular_A2)
        .def_readwrite("singular_diameter_factor", &FlowPolicy::singular_diameter_factor)
        .def_readwrite("minimal_H2", &FlowPolicy::minimal_H2)
        .def_readwrite("remesh", &FlowPolicy::remesh)
        .def_readwrite("max_steps", &FlowPolicy::max_steps)
        .def_readwrite("submersion", &FlowPolicy::submersion)
        .def("to_dict", [](const FlowPolicy& p) { return to_py(policy_to_json(p)); });

    m.def("adaptive_dt_bound", &adaptive_dt_bound, py::arg("h"), py::arg("max_A2"), py::arg("safety"));
    m.def("run_flow", [](const DiscreteImmersion& imm, const FlowPolicy& policy) {
        FlowResult r;
        {
            py::gil_scoped_release release;
            r = run_flow(imm, policy);
        }
        py::dict d;
        d["trace"] = trace_dict(r.trace);
        d["fate"] = to_py(fate_to_json(r.fate));
        d["final"] = r.final_state.imm;
        return d;
    }, py::arg("imm"), py::arg("policy"));

    m.def("fiber_audit", [](const SubmersionModel& sub, int samples, unsigned seed) {
        return verdict(fiber_audit_verdict(sub, samples, seed));
    }, py::arg("sub"), py::arg("samples") = 100, py::arg("seed") = 17);
    m.def("lift_norm_identity", [](const SubmersionModel& sub, const std::string& family, const py::dict& params,
                                   double h, double tol) {
        const Json p = resolve_family_params(family, from_py(params));
        return verdict(lift_norm_identity_test(sub, [&](double s) { return family_base(family, p, sub, s); }, h, tol));
    }, py::arg("sub"), py::arg("family"), py::arg("params") = py::dict(), py::arg("h") = 0.05, py::arg("tol") = 0.05);
    m.def("sphere_circle_test", [](double c, double rho0, double horizon, double h, double tol) {
        return verdict(sphere_circle_test(c, rho0, horizon, h, tol));
    }, py::arg("c"), py::arg("rho0"), py::arg("horizon"), py::arg("h"), py::arg("tol") = 1e-2);
    m.def("stationarity_test", [](const DiscreteImmersion& imm, double horizon) {
        return verdict(stationarity_test(imm, horizon));
    }, py::arg("imm"), py::arg("horizon"));
    m.def("projected_hausdorff", &projected_hausdorff, py::arg("sub"), py::arg("total"), py::arg("base"));

    m.def("run_scenario", [](const py::dict& config, const std::filesystem::path& out_dir, int jobs) {
        const Json j = from_py(config);
        ScenarioOutcome r;
        {
            py::gil_scoped_release release;
            r = run_scenario(j, {out_dir, jobs});
        }
        py::list verdicts;
        for (const auto& v : r.verdicts) verdicts.append(verdict(v));
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["message"] = r.message;
        d["verdicts"] = verdicts;
        d["artifacts"] = r.artifacts;
        return d;
    }, py::arg("config"), py::arg("out_dir") = std::filesystem::path(), py::arg("jobs") = 1);
}
