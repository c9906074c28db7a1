// command-line front end: census, instantons, strata, local solver, Morse
// homology, incidence posets and one-parameter families.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "instanton/complexes.hpp"
#include "instanton/io.hpp"
#include "instanton/local_model.hpp"
#include "instanton/moduli.hpp"

namespace {

using namespace instanton;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string field_path;
    double tol = 1e-10;
    int grid = 12;
    unsigned seed = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("field", args.field_path, "field-spec file")->required();
    cmd->add_option("--tol", args.tol, "integration tolerance");
    cmd->add_option("--grid", args.grid, "Newton seed grid density per axis");
    cmd->add_option("--seed", args.seed, "quasi-random sequence offset");
    cmd->add_option("--out", args.out_dir, "directory for data files");
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    out << text;
}

RestPointCensus census_of(const FieldSpec& field, const CommonArgs& args) {
    Tolerances tol;
    tol.rest_point_tol = std::min(tol.rest_point_tol, args.tol);
    return find_rest_points(field, args.grid, tol);
}

// rest points are addressed by ordinal (#2 or 2) or by comma-separated coordinates
int resolve_rest_point(const FieldSpec& field, const RestPointCensus& census,
                       const std::string& spec) {
    std::string s = spec;
    if (!s.empty() && s[0] == '#') s.erase(0, 1);
    if (s.find(',') == std::string::npos) {
        try {
            std::size_t used = 0;
            int ordinal = std::stoi(s, &used);
            if (used == s.size()) {
                if (ordinal < 0 || ordinal >= static_cast<int>(census.points.size()))
                    throw UsageError("rest-point ordinal out of range: " + spec);
                return ordinal;
            }
        } catch (const std::invalid_argument&) {
        } catch (const std::out_of_range&) {
            throw UsageError("rest-point ordinal out of range: " + spec);
        }
        throw UsageError("cannot parse rest-point address: " + spec);
    }
    Vec p(field.domain.dimension);
    std::istringstream is(s);
    for (int i = 0; i < field.domain.dimension; ++i) {
        std::string tok;
        if (!std::getline(is, tok, ','))
            throw UsageError("rest-point coordinates need " +
                             std::to_string(field.domain.dimension) + " components");
        p[i] = std::stod(tok);
    }
    for (std::size_t i = 0; i < census.points.size(); ++i)
        if (field.domain.distance(p, census.points[i].position) < 1e-3)
            return static_cast<int>(i);
    throw UsageError("no rest point within 1e-3 of the given coordinates");
}

ModuliOptions moduli_options(const CommonArgs& args) {
    ModuliOptions opts;
    opts.flow.tol = args.tol;
    return opts;
}

std::string homology_line(const std::vector<HomologyDegree>& h) {
    std::string out;
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(h[k].betti);
        for (auto t : h[k].torsion) out += "+Z/" + std::to_string(t);
    }
    return out;
}

int cmd_rest_points(const CommonArgs& args) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    std::string report = rest_point_report(field, census);
    std::cout << report;
    write_file(args.out_dir, "rest_points.txt", report);
    return 0;
}

int cmd_instantons(const CommonArgs& args, const std::string& xs, const std::string& ys) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    int x = resolve_rest_point(field, census, xs);
    int y = resolve_rest_point(field, census, ys);
    auto found = find_instantons(field, census, x, y, moduli_options(args));
    for (auto& inst : found) inst.sign = instanton_sign(field, census, inst);
    std::string report = instanton_report(field, census, found);
    std::cout << report;
    write_file(args.out_dir, "instantons.txt", report);
    for (std::size_t i = 0; i < found.size(); ++i)
        write_file(args.out_dir, "instanton_" + std::to_string(i) + ".txt",
                   trajectory_to_text(field, found[i].representative));
    return 0;
}

int cmd_strata(const CommonArgs& args, const std::string& xs, const std::string& ys,
               int max_depth) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    int x = resolve_rest_point(field, census, xs);
    int y = resolve_rest_point(field, census, ys);
    InstantonTable table = build_instanton_table(field, census, moduli_options(args));
    auto strata = enumerate_broken(census, table, x, y, max_depth);
    std::string report = broken_report(census, table, strata);
    std::cout << report;
    write_file(args.out_dir, "strata.txt", report);
    return 0;
}

int cmd_local_solve(const CommonArgs& args, const std::string& rest_spec, double r_cut,
                    std::vector<double> p_in, std::vector<double> q_in, double T1, double T2,
                    int nodes) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    int r = resolve_rest_point(field, census, rest_spec);
    LocalModel model = build_local_model(field, census.points[r], r_cut);

    BoundaryProblem prob;
    prob.T1 = T1;
    prob.T2 = T2;
    prob.nodes = nodes;
    prob.p = Vec::Zero(model.k_plus);
    prob.q = Vec::Zero(model.k_minus);
    if (!p_in.empty()) {
        if (static_cast<int>(p_in.size()) != model.k_plus)
            throw UsageError("--p needs " + std::to_string(model.k_plus) + " components");
        for (int i = 0; i < model.k_plus; ++i) prob.p[i] = p_in[i];
    } else if (model.k_plus > 0) {
        prob.p[0] = 0.5 * model.eps_contract;
    }
    if (!q_in.empty()) {
        if (static_cast<int>(q_in.size()) != model.k_minus)
            throw UsageError("--q needs " + std::to_string(model.k_minus) + " components");
        for (int i = 0; i < model.k_minus; ++i) prob.q[i] = q_in[i];
    } else if (model.k_minus > 0) {
        prob.q[0] = 0.5 * model.eps_contract;
    }

    BoundaryTrajectory sol = solve_boundary_trajectory(model, prob, 1e-12);
    DecayReport decay = verify_decay(model, sol, prob);

    std::ostringstream os;
    os << "# local model at rest-point #" << r << " of field " << field.id << "\n";
    os << "k-plus " << model.k_plus << "\nk-minus " << model.k_minus << "\n";
    os << "C " << format_number(model.C) << "\n";
    os << "rho-prime " << format_number(model.rho_prime) << "\n";
    os << "rho " << format_number(model.rho) << "\n";
    os << "B " << format_number(model.B) << "\n";
    os << "eta " << format_number(model.eta) << "\n";
    os << "eps-contract " << format_number(model.eps_contract) << "\n";
    os << "iterations " << sol.iterations << "\n";
    double worst = 0.0;
    for (double f : sol.contraction_factors) worst = std::max(worst, f);
    os << "worst-contraction-factor " << format_number(worst) << "\n";
    os << "rho-fit-plus " << format_number(decay.rho_fit_plus) << "\n";
    os << "rho-fit-minus " << format_number(decay.rho_fit_minus) << "\n";
    os << "decay " << (decay.passes ? "pass" : "fail") << "\n";
    std::cout << os.str();
    write_file(args.out_dir, "local_solve.txt", os.str());

    std::ostringstream traj;
    traj << "# boundary trajectory, adapted coordinates (stable block first)\n";
    for (Eigen::Index i = 0; i < model.change_of_basis.rows(); ++i)
        traj << "# basis-row " << format_vec(model.change_of_basis.row(i).transpose(), " ")
             << "\n";
    traj << "# t";
    for (int i = 0; i < model.k_plus + model.k_minus; ++i) traj << ", u" << i;
    traj << "\n";
    for (std::size_t i = 0; i < sol.times.size(); ++i)
        traj << format_number(sol.times[i]) << ", " << format_vec(sol.states[i], ", ") << "\n";
    write_file(args.out_dir, "local_trajectory.txt", traj.str());
    return decay.passes ? 0 : 1;
}

int cmd_morse(const CommonArgs& args) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    InstantonTable table = build_instanton_table(field, census, moduli_options(args));
    auto counts = signed_instanton_counts(census, table);

    std::vector<std::pair<std::string, int>> generators;
    for (std::size_t i = 0; i < census.points.size(); ++i)
        generators.emplace_back("p" + std::to_string(i), census.points[i].index);
    ChainComplex complex = build_morse_complex(generators, counts);
    auto h = homology(complex);

    std::ostringstream os;
    os << "# Morse complex of field " << field.id << "\n";
    os << "ranks";
    for (int rk : complex.ranks) os << " " << rk;
    os << "\n";
    os << "betti " << homology_line(h) << "\n";
    os << complex_to_text(complex);
    std::cout << os.str();
    write_file(args.out_dir, "morse.txt", os.str());
    return 0;
}

int cmd_incidence(const std::string& poset_path, const std::string& out_dir) {
    std::ifstream in(poset_path);
    if (!in) throw UsageError("cannot read poset file " + poset_path);
    std::stringstream buf;
    buf << in.rdbuf();
    CornerPoset poset = poset_from_text(buf.str());

    IncidenceReport check = incidence_check(poset);
    std::ostringstream os;
    os << "relation: " << (check.passes ? "pass" : "fail") << "\n";
    for (const auto& v : check.violations)
        os << "violation k=" << v.k << " alpha'=" << v.alpha_prime
           << " alpha''=" << v.alpha_dblprime << " sum=" << v.sum << "\n";
    if (check.passes) {
        auto h = incidence_cohomology(poset);
        os << "H: " << homology_line(h) << "\n";
    }
    std::cout << os.str();
    write_file(out_dir, "incidence.txt", os.str());
    return check.passes ? 0 : 1;
}

int cmd_families(const CommonArgs& args, const std::string& xs, const std::string& ys) {
    FieldSpec field = parse_field_file(args.field_path);
    RestPointCensus census = census_of(field, args);
    int x = resolve_rest_point(field, census, xs);
    int y = resolve_rest_point(field, census, ys);
    ModuliOptions opts = moduli_options(args);
    InstantonTable table = build_instanton_table(field, census, opts);
    auto families = trace_family(field, census, table, x, y, opts);
    CornerPoset poset = moduli_corner_poset(families, table);
    IncidenceReport check = incidence_check(poset);

    std::ostringstream os;
    os << family_report(field, census, table, families);
    os << "relation: " << (check.passes ? "pass" : "fail") << "\n";
    if (check.passes) os << "H: " << homology_line(incidence_cohomology(poset)) << "\n";
    std::cout << os.str();
    write_file(args.out_dir, "families.txt", os.str());
    write_file(args.out_dir, "moduli_poset.txt", poset_to_text(poset));
    return check.passes ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instanton structure of a generic vector field at desk scale"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string xs, ys, rest_spec, poset_path;
    int max_depth = 2;
    double r_cut = 0.5, T1 = 0.0, T2 = 10.0;
    int nodes = 512;
    std::vector<double> p_in, q_in;

    auto* rest_points = app.add_subcommand("rest-points", "rest-point census");
    add_common(rest_points, args);

    auto* instantons = app.add_subcommand("instantons", "instantons between two rest points");
    add_common(instantons, args);
    instantons->add_option("x", xs, "source rest point (#ordinal or coords)")->required();
    instantons->add_option("y", ys, "target rest point")->required();

    auto* strata = app.add_subcommand("strata", "broken-instanton strata");
    add_common(strata, args);
    strata->add_option("x", xs, "source rest point")->required();
    strata->add_option("y", ys, "target rest point")->required();
    strata->add_option("--max-depth", max_depth, "maximal number of intermediate rest points");

    auto* local_solve = app.add_subcommand("local-solve", "near-equilibrium boundary solver");
    add_common(local_solve, args);
    local_solve->add_option("--rest-point", rest_spec, "rest point to model")->required();
    local_solve->add_option("--r-cut", r_cut, "cutoff radius of the local model");
    local_solve->add_option("--p", p_in, "stable boundary value at T1");
    local_solve->add_option("--q", q_in, "unstable boundary value at T2");
    local_solve->add_option("--T1", T1, "left endpoint");
    local_solve->add_option("--T2", T2, "right endpoint");
    local_solve->add_option("--nodes", nodes, "quadrature nodes");

    auto* morse = app.add_subcommand("morse", "Morse complex and homology");
    add_common(morse, args);

    auto* incidence = app.add_subcommand("incidence", "incidence relation and cohomology");
    incidence->add_option("poset", poset_path, "poset file")->required();
    incidence->add_option("--out", args.out_dir, "directory for data files");

    auto* families = app.add_subcommand("families", "one-parameter instanton families");
    add_common(families, args);
    families->add_option("x", xs, "source rest point")->required();
    families->add_option("y", ys, "target rest point")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (rest_points->parsed()) return cmd_rest_points(args);
        if (instantons->parsed()) return cmd_instantons(args, xs, ys);
        if (strata->parsed()) return cmd_strata(args, xs, ys, max_depth);
        if (local_solve->parsed())
            return cmd_local_solve(args, rest_spec, r_cut, p_in, q_in, T1, T2, nodes);
        if (morse->parsed()) return cmd_morse(args);
        if (incidence->parsed()) return cmd_incidence(poset_path, args.out_dir);
        if (families->parsed()) return cmd_families(args, xs, ys);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
