#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "instanton/io.hpp"
#include "instanton/local_model.hpp"
#include "instanton/moduli.hpp"

namespace py = pybind11;
using namespace instanton;

namespace {

RestPointCensus census_of(const FieldSpec& field, int grid) {
    return find_rest_points(field, grid);
}

py::dict homology_dict(const std::vector<HomologyDegree>& h) {
    py::list betti, torsion;
    for (const auto& d : h) {
        betti.append(d.betti);
        py::list t;
        for (auto v : d.torsion) t.append(v);
        torsion.append(t);
    }
    py::dict out;
    out["betti"] = betti;
    out["torsion"] = torsion;
    return out;
}

py::dict instanton_dict(const Instanton& inst) {
    py::dict d;
    d["source"] = inst.source;
    d["target"] = inst.target;
    d["anchor"] = inst.anchor_point;
    d["anchor_level"] = inst.anchor_level;
    d["departure_angle"] = inst.departure_angle;
    d["sign"] = inst.sign;
    return d;
}

}  // namespace

PYBIND11_MODULE(_instanton, m) {
    m.doc() = "instanton structure of a generic vector field";

    py::register_exception<ParseError>(m, "FieldParseError", PyExc_ValueError);
    py::register_exception<FlowError>(m, "FlowError", PyExc_RuntimeError);
    py::register_exception<ModuliError>(m, "ModuliError", PyExc_RuntimeError);
    py::register_exception<LocalModelError>(m, "LocalModelError", PyExc_RuntimeError);
    py::register_exception<ComplexError>(m, "ComplexError", PyExc_RuntimeError);

    py::class_<FieldSpec>(m, "Field")
        .def_static("from_text", [](const std::string& text, const std::string& id) {
            return parse_field(text, id);
        }, py::arg("text"), py::arg("id") = "field")
        .def_static("from_file", &parse_field_file, py::arg("path"))
        .def_property_readonly("id", [](const FieldSpec& f) { return f.id; })
        .def_property_readonly("dimension",
                               [](const FieldSpec& f) { return f.domain.dimension; })
        .def("__call__", [](const FieldSpec& f, const Vec& x) { return f.eval(x); });

    m.def("rest_points", [](const FieldSpec& field, int grid) {
        py::list out;
        for (const RestPoint& p : census_of(field, grid).points) {
            py::dict d;
            d["position"] = p.position;
            d["index"] = p.index;
            out.append(d);
        }
        return out;
    }, py::arg("field"), py::arg("grid") = 12);

    m.def("integrate", [](const FieldSpec& field, const Vec& start, double t_end) {
        Trajectory traj = integrate(field, start, {0.0, t_end});
        std::vector<double> times;
        std::vector<Vec> points;
        for (const auto& s : traj.samples) {
            times.push_back(s.t);
            points.push_back(s.point);
        }
        return py::make_tuple(times, points);
    }, py::arg("field"), py::arg("start"), py::arg("t_end"));

    m.def("instantons", [](const FieldSpec& field, int x, int y, int grid) {
        RestPointCensus census = census_of(field, grid);
        auto found = find_instantons(field, census, x, y);
        py::list out;
        for (auto& inst : found) {
            inst.sign = instanton_sign(field, census, inst);
            out.append(instanton_dict(inst));
        }
        return out;
    }, py::arg("field"), py::arg("x"), py::arg("y"), py::arg("grid") = 12);

    m.def("broken_strata", [](const FieldSpec& field, int x, int y, int max_depth, int grid) {
        RestPointCensus census = census_of(field, grid);
        InstantonTable table = build_instanton_table(field, census);
        py::dict out;
        for (const auto& [depth, brokens] : enumerate_broken(census, table, x, y, max_depth)) {
            py::list entries;
            for (const BrokenInstanton& b : brokens) {
                py::list legs;
                for (int leg : b.legs)
                    legs.append(py::make_tuple(table.instantons[leg].source,
                                               table.instantons[leg].target));
                entries.append(legs);
            }
            out[py::int_(depth)] = entries;
        }
        return out;
    }, py::arg("field"), py::arg("x"), py::arg("y"), py::arg("max_depth") = 2,
       py::arg("grid") = 12);

    m.def("morse_homology", [](const FieldSpec& field, int grid) {
        RestPointCensus census = census_of(field, grid);
        InstantonTable table = build_instanton_table(field, census);
        std::vector<std::pair<std::string, int>> gens;
        for (std::size_t i = 0; i < census.points.size(); ++i)
            gens.push_back({"p" + std::to_string(i), census.points[i].index});
        ChainComplex complex =
            build_morse_complex(gens, signed_instanton_counts(census, table));
        py::dict out = homology_dict(homology(complex));
        out["ranks"] = complex.ranks;
        return out;
    }, py::arg("field"), py::arg("grid") = 12);

    m.def("families", [](const FieldSpec& field, int x, int y, int grid) {
        RestPointCensus census = census_of(field, grid);
        InstantonTable table = build_instanton_table(field, census);
        auto fams = trace_family(field, census, table, x, y);
        CornerPoset poset = moduli_corner_poset(fams, table);
        py::list arcs;
        for (const Family& fam : fams) {
            py::dict d;
            d["target"] = fam.target;
            d["theta_start"] = fam.theta_start;
            d["theta_end"] = fam.theta_end;
            d["boundary_start"] = fam.boundary_start.legs;
            d["boundary_end"] = fam.boundary_end.legs;
            arcs.append(d);
        }
        py::dict out;
        out["arcs"] = arcs;
        out["incidence_ok"] = incidence_check(poset).passes;
        out["cohomology"] = homology_dict(incidence_cohomology(poset));
        return out;
    }, py::arg("field"), py::arg("x"), py::arg("y"), py::arg("grid") = 12);

    m.def("local_model", [](const FieldSpec& field, int rest_point, double r_cut, int grid) {
        RestPointCensus census = census_of(field, grid);
        LocalModel model = build_local_model(field, census.points.at(rest_point), r_cut);
        py::dict out;
        out["k_plus"] = model.k_plus;
        out["k_minus"] = model.k_minus;
        out["C"] = model.C;
        out["rho_prime"] = model.rho_prime;
        out["rho"] = model.rho;
        out["B"] = model.B;
        out["eta"] = model.eta;
        out["eps_contract"] = model.eps_contract;
        return out;
    }, py::arg("field"), py::arg("rest_point"), py::arg("r_cut") = 0.5, py::arg("grid") = 12);

    m.def("incidence", [](const std::string& poset_text) {
        CornerPoset poset = poset_from_text(poset_text);
        IncidenceReport rep = incidence_check(poset);
        py::dict out;
        out["passes"] = rep.passes;
        if (rep.passes) out["cohomology"] = homology_dict(incidence_cohomology(poset));
        return out;
    }, py::arg("poset_text"));
}
