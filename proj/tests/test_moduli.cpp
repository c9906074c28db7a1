#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "instanton/moduli.hpp"

namespace {

using namespace instanton;

constexpr double kPi = std::numbers::pi;

FieldSpec torus_cosine() {
    return parse_field(
        "domain = torus\ndim = 2\nX_0 = sin(x0)\nX_1 = sin(x1)\nf = cos(x0) + cos(x1)\n",
        "torus_cosine");
}

FieldSpec torus_double() {
    return parse_field(
        "domain = torus\ndim = 2\nX_0 = sin(2*x0)\nX_1 = sin(x1)\nf = cos(2*x0)/2 + cos(x1)\n",
        "torus_double");
}

double lyap(const FieldSpec& f, const Vec& p) {
    Vec w = f.domain.wrap(p);
    return f.lyapunov->eval(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

}  // namespace

TEST_CASE("two instantons from the maximum to each saddle") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    REQUIRE(census.points.size() == 4);
    for (int saddle : {1, 2}) {
        std::vector<Instanton> insts = find_instantons(f, census, 0, saddle);
        REQUIRE(insts.size() == 2);
        for (const Instanton& inst : insts) {
            CHECK(inst.source == 0);
            CHECK(inst.target == saddle);
            CHECK(inst.departure_direction.norm() == doctest::Approx(1.0));
            // anchor on the midpoint level between the critical values 2 and 0
            CHECK(inst.anchor_level == doctest::Approx(1.0).epsilon(1e-2));
            CHECK(std::abs(lyap(f, inst.anchor_point) - inst.anchor_level) <= 1e-9);
        }
        // the two come from opposite sides of the unstable sphere
        double gap = std::abs(insts[0].departure_angle - insts[1].departure_angle);
        CHECK(std::min(gap, 2 * kPi - gap) == doctest::Approx(kPi).epsilon(1e-6));
    }
}

TEST_CASE("equal or lower index gives no instantons") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    CHECK(find_instantons(f, census, 1, 2).empty());
    CHECK(find_instantons(f, census, 3, 0).empty());
    CHECK(find_instantons(f, census, 1, 0).empty());
}

TEST_CASE("index gap two is rejected with a pointer to families") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    CHECK_THROWS_AS(find_instantons(f, census, 0, 3), ModuliError);
}

TEST_CASE("paired instantons carry opposite signs") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    CHECK(table.instantons.size() == 8);  // 2 per gap-1 pair, 4 pairs
    for (int src = 0; src < 3; ++src)
        for (int dst = src + 1; dst < 4; ++dst) {
            std::vector<int> ids = table.for_pair(src, dst);
            if (ids.empty()) continue;
            REQUIRE(ids.size() == 2);
            int s0 = table.instantons[ids[0]].sign;
            int s1 = table.instantons[ids[1]].sign;
            CHECK(std::abs(s0) == 1);
            CHECK(s0 == -s1);
        }
    for (const auto& [pair, count] : signed_instanton_counts(census, table)) CHECK(count == 0);
}

TEST_CASE("circle gradient has two cancelling instantons") {
    FieldSpec f = parse_field("domain = torus\ndim = 1\nX_0 = sin(x0)\nf = cos(x0)\n",
                              "circle_sine");
    RestPointCensus census = find_rest_points(f, 8);
    REQUIRE(census.points.size() == 2);
    CHECK(census.points[0].index == 1);
    CHECK(census.points[1].index == 0);
    std::vector<Instanton> insts = find_instantons(f, census, 0, 1);
    REQUIRE(insts.size() == 2);
    int s0 = instanton_sign(f, census, insts[0]);
    int s1 = instanton_sign(f, census, insts[1]);
    CHECK(std::abs(s0) == 1);
    CHECK(s0 == -s1);
}

TEST_CASE("flipping an orientation negates the adjacent signs") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    std::vector<bool> flip(census.points.size(), false);
    flip[1] = true;  // one of the saddles
    for (const Instanton& inst : table.instantons) {
        int base = instanton_sign(f, census, inst);
        int flipped = instanton_sign(f, census, inst, flip);
        if (inst.source == 1 || inst.target == 1)
            CHECK(flipped == -base);
        else
            CHECK(flipped == base);
    }
}

TEST_CASE("broken instantons between top and bottom") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    auto strata = enumerate_broken(census, table, 0, 3, 2);
    CHECK(strata[0].empty());
    CHECK(strata[1].size() == 8);  // 2x2 through each of the two saddles
    CHECK(strata[2].empty());
    for (const BrokenInstanton& b : strata[1]) {
        REQUIRE(b.legs.size() == 2);
        const Instanton& first = table.instantons[b.legs[0]];
        const Instanton& second = table.instantons[b.legs[1]];
        CHECK(first.source == 0);
        CHECK(first.target == second.source);
        CHECK(second.target == 3);
    }
}

TEST_CASE("broken chains out of the maximum") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    auto strata = enumerate_broken_unstable(census, table, 0, 1);
    CHECK(strata[0].size() == 4);  // the four single instantons out of p0
    CHECK(strata[1].size() == 8);
}

TEST_CASE("stratum dimension formula") {
    RestPoint x, y;
    x.index = 2;
    y.index = 0;
    CHECK(stratum_dimension(x, y, 0) == 1);
    CHECK(stratum_dimension(x, y, 1) == 0);
    CHECK_FALSE(stratum_dimension(x, y, 2).has_value());
    y.index = 2;
    CHECK_FALSE(stratum_dimension(x, y, 0).has_value());
}

TEST_CASE("families between the maximum and the minimum") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    InstantonTable table = build_instanton_table(f, census);
    std::vector<Family> fams = trace_family(f, census, table, 0, 3);
    REQUIRE(fams.size() == 4);

    std::set<std::pair<int, int>> endpoints;
    int signed_sum = 0;
    for (const Family& fam : fams) {
        CHECK(fam.target == 3);
        CHECK(fam.theta_end > fam.theta_start);
        REQUIRE(fam.sample_thetas.size() >= 2);
        CHECK(fam.sample_thetas.size() == fam.sample_anchors.size());
        for (const BrokenInstanton* b : {&fam.boundary_start, &fam.boundary_end}) {
            REQUIRE(b->legs.size() == 2);
            CHECK(endpoints.insert({b->legs[0], b->legs[1]}).second);  // used once
            int prod = table.instantons[b->legs[0]].sign * table.instantons[b->legs[1]].sign;
            signed_sum += prod;
        }
    }
    CHECK(endpoints.size() == 8);  // exhausts the depth-1 stratum
    CHECK(signed_sum == 0);

    auto depth1 = enumerate_broken(census, table, 0, 3, 1)[1];
    std::set<std::pair<int, int>> stratum;
    for (const BrokenInstanton& b : depth1) stratum.insert({b.legs[0], b.legs[1]});
    CHECK(stratum == endpoints);
}

TEST_CASE("family arcs can close up through the same saddle") {
    FieldSpec f = torus_double();
    RestPointCensus census = find_rest_points(f, 12);
    REQUIRE(census.points.size() == 8);
    InstantonTable table = build_instanton_table(f, census);
    std::vector<Family> fams = trace_family(f, census, table, 0, 6);
    REQUIRE(fams.size() == 2);
    std::set<std::pair<int, int>> endpoints;
    for (const Family& fam : fams) {
        endpoints.insert({fam.boundary_start.legs[0], fam.boundary_start.legs[1]});
        endpoints.insert({fam.boundary_end.legs[0], fam.boundary_end.legs[1]});
    }
    CHECK(endpoints.size() == 4);
    auto depth1 = enumerate_broken(census, table, 0, 6, 1)[1];
    CHECK(depth1.size() == 4);
}

TEST_CASE("anchors are stable under mesh refinement") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    ModuliOptions coarse, fine;
    coarse.mesh_density = 720;
    fine.mesh_density = 1440;
    std::vector<Instanton> a = find_instantons(f, census, 0, 1, coarse);
    std::vector<Instanton> b = find_instantons(f, census, 0, 1, fine);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(f.domain.distance(a[i].anchor_point, b[i].anchor_point) <= 1e-4);
}

TEST_CASE("re-integration from the anchor reaches both limits") {
    FieldSpec f = torus_cosine();
    RestPointCensus census = find_rest_points(f, 8);
    FlowOptions opts;
    opts.rest_points = census.points;
    for (int saddle : {1, 2}) {
        for (const Instanton& inst : find_instantons(f, census, 0, saddle)) {
            auto fwd = omega_limit(f, inst.anchor_point, TimeDirection::Forward, opts);
            auto back = omega_limit(f, inst.anchor_point, TimeDirection::Backward, opts);
            REQUIRE(fwd.has_value());
            REQUIRE(back.has_value());
            CHECK(static_cast<int>(*fwd) == inst.target);
            CHECK(static_cast<int>(*back) == inst.source);
        }
    }
}
