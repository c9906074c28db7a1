// Acceptance checks, one printed line per criterion.  Exits nonzero if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "instanton/io.hpp"
#include "instanton/local_model.hpp"
#include "instanton/moduli.hpp"

using namespace instanton;

namespace {

int failures = 0;

void report(int criterion, const char* what, bool ok) {
    std::printf("criterion %d (%s): %s\n", criterion, what, ok ? "pass" : "FAIL");
    if (!ok) ++failures;
}

Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

Mat saddle2() {
    Mat A(2, 2);
    A << -1, 0, 0, 1;
    return A;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FieldSpec torus_cosine() {
    return parse_field(
        "domain = torus\ndim = 2\nX_0 = sin(x0)\nX_1 = sin(x1)\nf = cos(x0) + cos(x1)\n",
        "torus_cosine");
}

FieldSpec circle_sine() {
    return parse_field("domain = torus\ndim = 1\nX_0 = sin(x0)\nf = cos(x0)\n", "circle_sine");
}

FieldSpec torus_double() {
    return parse_field(
        "domain = torus\ndim = 2\nX_0 = sin(2*x0)\nX_1 = sin(x1)\nf = cos(2*x0)/2 + cos(x1)\n",
        "torus_double");
}

// 1. boundary solver against a closed form and an analytic perturbation
bool criterion_solver() {
    LocalModel lin = build_synthetic_model(saddle2(), 1, 1.0, 1.0);
    auto t0 = std::chrono::steady_clock::now();
    BoundaryProblem prob{vec1(0.05), vec1(0.05), 0.0, 8.0, 512};
    BoundaryTrajectory sol = solve_boundary_trajectory(lin, prob, 1e-12);
    if (seconds_since(t0) >= 1.0) return false;
    double sup = 0.0;
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        double t = sol.times[i];
        sup = std::max(sup, std::abs(sol.states[i][0] - 0.05 * std::exp(-t)));
        sup = std::max(sup, std::abs(sol.states[i][1] - 0.05 * std::exp(t - 8.0)));
    }
    if (sup > 1e-8) return false;

    // g = (0, u0^2): u0 stays exponential and u1 has a closed form
    auto quad = [](const Vec& u) {
        Vec g(2);
        g << 0.0, u[0] * u[0];
        return g;
    };
    LocalModel m = build_synthetic_model(saddle2(), 1, 1.0, 1.0, quad);
    double p = 0.01, q = 0.01, T2 = 6.0;
    BoundaryTrajectory nsol = solve_boundary_trajectory(m, {vec1(p), vec1(q), 0.0, T2, 512}, 1e-13);
    double nsup = 0.0;
    for (std::size_t i = 0; i < nsol.times.size(); ++i) {
        double t = nsol.times[i];
        double u1 = std::exp(t - T2) * q - (p * p / 3.0) * (std::exp(-2 * t) - std::exp(t - 3 * T2));
        nsup = std::max(nsup, std::abs(nsol.states[i][0] - p * std::exp(-t)));
        nsup = std::max(nsup, std::abs(nsol.states[i][1] - u1));
    }
    return nsup <= 1e-6;
}

// 2. contraction factor <= 1/4 across randomized admissible problems
bool criterion_contraction() {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        double c1 = 0.6 * unif(rng), c2 = 0.6 * unif(rng), c3 = 0.6 * unif(rng);
        auto g = [c1, c2, c3](const Vec& u) {
            Vec out(2);
            out << c1 * u[0] * u[1] + c3 * u[1] * u[1], c2 * (u[0] * u[0] + u[1] * u[1]);
            return out;
        };
        LocalModel m = build_synthetic_model(saddle2(), 1, 1.0, 1.0, g);
        double T2 = 4.0 + 6.0 * (trial % 5) / 4.0;
        BoundaryProblem prob{vec1(0.95 * m.eps_contract * unif(rng)),
                             vec1(0.95 * m.eps_contract * unif(rng)), 0.0, T2, 128};
        std::vector<Vec> zero(prob.nodes, Vec::Zero(2));
        BoundaryTrajectory sol = solve_boundary_trajectory(m, prob, 1e-12, &zero);
        for (double f : sol.contraction_factors)
            if (f > 0.25) return false;
    }
    return true;
}

// 3. measured decay rates within 10% of the certified rate
bool criterion_decay() {
    auto quad = [](const Vec& u) {
        Vec g(2);
        g << 0.05 * u[1] * u[1], u[0] * u[0];
        return g;
    };
    for (const auto* which : {"linear", "quad"}) {
        LocalModel m = std::string(which) == "linear"
                           ? build_synthetic_model(saddle2(), 1, 1.0, 1.0)
                           : build_synthetic_model(saddle2(), 1, 1.0, 1.0, quad);
        double amp = std::min(0.9 * m.eps_contract, 0.05);
        if (amp < 1e-3) return false;  // criterion only applies to visible amplitudes
        BoundaryProblem prob{vec1(amp), vec1(amp), 0.0, 8.0, 512};
        BoundaryTrajectory sol = solve_boundary_trajectory(m, prob, 1e-12);
        DecayReport rep = verify_decay(m, sol, prob);
        if (!rep.passes) return false;
        if (rep.rho_fit_plus < 0.9 * m.rho || rep.rho_fit_minus < 0.9 * m.rho) return false;
    }
    return true;
}

// 4. Morse homology of the three bundled gradient fields
bool criterion_morse() {
    auto t0 = std::chrono::steady_clock::now();
    struct Case {
        FieldSpec field;
        int grid;
        std::vector<int> betti;
    };
    std::vector<Case> cases;
    cases.push_back({torus_cosine(), 8, {1, 2, 1}});
    cases.push_back({circle_sine(), 8, {1, 1}});
    cases.push_back({torus_double(), 12, {1, 2, 1}});
    for (const Case& c : cases) {
        RestPointCensus census = find_rest_points(c.field, c.grid);
        InstantonTable table = build_instanton_table(c.field, census);
        std::vector<std::pair<std::string, int>> gens;
        for (std::size_t i = 0; i < census.points.size(); ++i)
            gens.push_back({"p" + std::to_string(i), census.points[i].index});
        ChainComplex complex =
            build_morse_complex(gens, signed_instanton_counts(census, table));
        std::vector<HomologyDegree> h = homology(complex);  // throws if d^2 != 0
        if (h.size() != c.betti.size()) return false;
        for (std::size_t k = 0; k < h.size(); ++k)
            if (h[k].betti != c.betti[k] || !h[k].torsion.empty()) return false;
    }
    return seconds_since(t0) < 60.0;
}

// 5. one-parameter families are bounded by the depth-1 broken stratum
bool criterion_families() {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    std::vector<Family> fams = trace_family(f, census, table, 0, 3);
    if (fams.size() != 4) return false;
    std::set<std::pair<int, int>> endpoints;
    int signed_sum = 0;
    for (const Family& fam : fams) {
        for (const BrokenInstanton* b : {&fam.boundary_start, &fam.boundary_end}) {
            if (b->legs.size() != 2) return false;
            if (!endpoints.insert({b->legs[0], b->legs[1]}).second) return false;
            signed_sum += table.instantons[b->legs[0]].sign * table.instantons[b->legs[1]].sign;
        }
    }
    if (signed_sum != 0) return false;
    std::set<std::pair<int, int>> stratum;
    auto strata = enumerate_broken(census, table, 0, 3, 1);
    for (const BrokenInstanton& b : strata[1]) stratum.insert({b.legs[0], b.legs[1]});
    return stratum.size() == 8 && stratum == endpoints;
}

// 6. incidence relation and cohomology on model corner posets
bool criterion_incidence() {
    CornerPoset interval = interval_poset();
    CornerPoset square = corner_poset_product(interval, interval);
    CornerPoset cube = corner_poset_product(square, interval);

    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    CornerPoset moduli = moduli_corner_poset(trace_family(f, census, table, 0, 3), table);

    for (const CornerPoset* p : {&interval, &square, &cube, &moduli})
        if (!incidence_check(*p).passes) return false;

    auto betti = [](const CornerPoset& p) {
        std::vector<int> b;
        for (const auto& d : incidence_cohomology(p)) b.push_back(d.betti);
        return b;
    };
    if (betti(cube) != std::vector<int>{1, 0, 0, 0}) return false;
    if (betti(moduli) != std::vector<int>{4, 0}) return false;

    std::vector<int> reference = betti(cube);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        int dim = static_cast<int>(rng() % cube.components.size());
        int comp = static_cast<int>(rng() % cube.components[dim].size());
        flip_orientation(cube, dim, comp);
        if (!incidence_check(cube).passes) return false;
        if (betti(cube) != reference) return false;
    }
    return true;
}

// 7. stratum dimensions match what the field computations produce
bool criterion_dimensions() {
    RestPoint x, y;
    x.index = 2;
    y.index = 0;
    if (stratum_dimension(x, y, 0) != 1) return false;
    if (stratum_dimension(x, y, 1) != 0) return false;
    if (stratum_dimension(x, y, 2).has_value()) return false;
    y.index = 1;
    if (stratum_dimension(x, y, 0) != 0) return false;

    // empirically: gap-1 pairs give finitely many rigid instantons, the gap-2
    // pair gives one-dimensional families with zero-dimensional boundaries
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    for (int saddle : {1, 2}) {
        if (find_instantons(f, census, 0, saddle).size() != 2) return false;
        if (find_instantons(f, census, saddle, 3).size() != 2) return false;
    }
    InstantonTable table = build_instanton_table(f, census);
    std::vector<Family> fams = trace_family(f, census, table, 0, 3);
    for (const Family& fam : fams)
        if (!(fam.theta_end > fam.theta_start)) return false;  // genuinely 1-parameter
    return fams.size() == 4;
}

// 8. repeated runs produce byte-identical reports
bool criterion_determinism() {
    auto run = []() {
        FieldSpec f = torus_cosine();
        RestPointCensus census = find_rest_points(f, 8);
        InstantonTable table = build_instanton_table(f, census);
        std::string out = rest_point_report(f, census);
        out += instanton_report(f, census, table.instantons);
        std::vector<std::pair<std::string, int>> gens;
        for (std::size_t i = 0; i < census.points.size(); ++i)
            gens.push_back({"p" + std::to_string(i), census.points[i].index});
        out += complex_to_text(build_morse_complex(gens, signed_instanton_counts(census, table)));
        out += family_report(f, census, table, trace_family(f, census, table, 0, 3));
        return out;
    };
    std::string first = run();
    std::string second = run();
    return !first.empty() && first == second;
}

}  // namespace

int main() {
    report(1, "boundary solver vs closed forms", criterion_solver());
    report(2, "contraction factor <= 1/4", criterion_contraction());
    report(3, "decay rates within 10%", criterion_decay());
    report(4, "Morse homology of bundled fields", criterion_morse());
    report(5, "families bounded by broken stratum", criterion_families());
    report(6, "incidence relation and cohomology", criterion_incidence());
    report(7, "stratum dimension formula", criterion_dimensions());
    report(8, "byte-identical reruns", criterion_determinism());
    return failures == 0 ? 0 : 1;
}
