#include <cmath>
#include <numbers>

#include "doctest.h"
#include "instanton/flow.hpp"

namespace {

using namespace instanton;

constexpr double kPi = std::numbers::pi;

FieldSpec torus_cosine() {
    return parse_field(
        "domain = torus\ndim = 2\nX_0 = sin(x0)\nX_1 = sin(x1)\nf = cos(x0) + cos(x1)\n",
        "torus_cosine");
}

FieldSpec linear_box() {
    return parse_field(
        "domain = box\ndim = 2\nbounds_0 = -5 5\nbounds_1 = -5 5\nX_0 = -x0\nX_1 = x1\n",
        "linear");
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

FlowOptions with_rest_points(const FieldSpec& field) {
    FlowOptions opts;
    opts.rest_points = find_rest_points(field, 8).points;
    return opts;
}

}  // namespace

TEST_CASE("linear flow hits the closed form") {
    FieldSpec f = linear_box();
    Trajectory traj = integrate(f, vec2(1, 0), {0.0, 1.0});
    CHECK(traj.samples.front().t == 0.0);
    CHECK(traj.samples.back().t == doctest::Approx(1.0));
    CHECK(traj.end()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(std::abs(traj.end()[1]) < 1e-12);
}

TEST_CASE("forward capture at the sink") {
    FieldSpec f = torus_cosine();
    Trajectory traj = integrate(f, vec2(0.1, 0.1), {0.0, 1e3}, with_rest_points(f));
    REQUIRE(traj.limit_forward.has_value());
    CHECK(f.domain.distance(*traj.limit_forward, vec2(kPi, kPi)) < 1e-9);
}

TEST_CASE("backward capture at the source") {
    FieldSpec f = torus_cosine();
    FieldSpec neg = f.negated();
    FlowOptions opts;
    opts.rest_points = find_rest_points(f, 8).points;
    Trajectory traj = integrate(neg, vec2(0.1, 0.1), {0.0, 1e3}, opts);
    REQUIRE(traj.limit_forward.has_value());
    CHECK(f.domain.distance(*traj.limit_forward, vec2(0, 0)) < 1e-9);
}

TEST_CASE("times are strictly increasing and dense output interpolates") {
    FieldSpec f = linear_box();
    Trajectory traj = integrate(f, vec2(1, 0.5), {0.0, 2.0});
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
        CHECK(traj.samples[i].t > traj.samples[i - 1].t);
    for (double t : {0.1, 0.77, 1.5}) {
        Vec p = traj.at(t);
        CHECK(p[0] == doctest::Approx(std::exp(-t)).epsilon(1e-8));
        CHECK(p[1] == doctest::Approx(0.5 * std::exp(t)).epsilon(1e-8));
    }
}

TEST_CASE("reversibility within ten times the tolerance") {
    FieldSpec f = torus_cosine();
    Vec start = vec2(0.4, 2.2);
    Trajectory fwd = integrate(f, start, {0.0, 3.0});
    Trajectory back = integrate(f.negated(), f.domain.wrap(fwd.end()), {0.0, 3.0});
    CHECK(f.domain.distance(back.end(), start) <= 10 * 1e-10);
}

TEST_CASE("box trajectories truncate at the boundary") {
    FieldSpec f = parse_field(
        "domain = box\ndim = 1\nbounds_0 = -1 1\nX_0 = 1 + 0*x0\n", "drift");
    Trajectory traj = integrate(f, Vec::Constant(1, 0.0), {0.0, 10.0});
    CHECK(traj.truncated);
    CHECK(traj.end()[0] <= 1.0 + 1e-9);
    CHECK(traj.end()[0] > 0.99);
}

TEST_CASE("lyapunov values decrease along trajectories") {
    FieldSpec f = torus_cosine();
    Trajectory traj = integrate(f, vec2(0.3, 1.1), {0.0, 8.0});
    auto value = [&](const Vec& p) {
        Vec w = f.domain.wrap(p);
        return f.lyapunov->eval(std::span<const double>(w.data(), 2));
    };
    double prev = value(traj.samples.front().point);
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        double cur = value(traj.samples[i].point);
        CHECK(cur < prev + 1e-9);
        prev = cur;
    }
}

TEST_CASE("flow_to_level on the radial field") {
    FieldSpec f = parse_field(
        "domain = box\ndim = 2\nbounds_0 = -2 2\nbounds_1 = -2 2\nX_0 = -x0\nX_1 = -x1\n",
        "radial");
    Expr half_r2 = Expr::parse("(x0^2 + x1^2)/2");
    Vec hit = flow_to_level(f, half_r2, vec2(1, 0), 0.125);
    CHECK(hit[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(hit[1]) < 1e-12);
}

TEST_CASE("flow_to_level finds the diagonal zero level") {
    FieldSpec f = torus_cosine();
    Vec hit = flow_to_level(f, *f.lyapunov, vec2(0.1, 0.1), 0.0);
    // by symmetry the crossing happens on the diagonal at cos x0 = 0
    CHECK(hit[0] == doctest::Approx(hit[1]).epsilon(1e-7));
    CHECK(hit[0] == doctest::Approx(kPi / 2).epsilon(1e-7));
    double val = f.lyapunov->eval(std::span<const double>(hit.data(), 2));
    CHECK(std::abs(val) <= 1e-9);
}

TEST_CASE("flow_to_level lies on the integrated trajectory") {
    FieldSpec f = torus_cosine();
    Vec start = vec2(0.35, 0.9);
    Vec hit = flow_to_level(f, *f.lyapunov, start, -0.5);
    Trajectory traj = integrate(f, start, {0.0, 50.0}, with_rest_points(f));
    auto dist_at = [&](double t) { return f.domain.distance(traj.at(t), hit); };
    double best = 1e30, t_best = 0.0;
    double t_end = traj.samples.back().t;
    for (int s = 0; s <= 2000; ++s) {
        double t = t_end * s / 2000.0;
        double d = dist_at(t);
        if (d < best) {
            best = d;
            t_best = t;
        }
    }
    double lo = std::max(0.0, t_best - t_end / 2000.0), hi = std::min(t_end, t_best + t_end / 2000.0);
    for (int it = 0; it < 200; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (dist_at(m1) < dist_at(m2))
            hi = m2;
        else
            lo = m1;
    }
    CHECK(dist_at(0.5 * (lo + hi)) <= 10 * 1e-9);
}

TEST_CASE("flow_to_level from a rest point fails") {
    FieldSpec f = torus_cosine();
    FlowOptions opts = with_rest_points(f);
    CHECK_THROWS_AS(flow_to_level(f, *f.lyapunov, vec2(kPi, kPi), -3.0, opts), FlowError);
}

TEST_CASE("omega_limit variants") {
    FieldSpec f = torus_cosine();
    FlowOptions opts = with_rest_points(f);

    auto fwd = omega_limit(f, vec2(0.2, 6.0), TimeDirection::Forward, opts);
    REQUIRE(fwd.has_value());
    CHECK(f.domain.distance(opts.rest_points[*fwd].position, vec2(kPi, kPi)) < 1e-9);

    auto self = omega_limit(f, vec2(kPi, 0.0), TimeDirection::Forward, opts);
    REQUIRE(self.has_value());
    CHECK(f.domain.distance(opts.rest_points[*self].position, vec2(kPi, 0)) < 1e-9);

    auto back = omega_limit(f, vec2(0.2, 6.0), TimeDirection::Backward, opts);
    REQUIRE(back.has_value());
    CHECK(f.domain.distance(opts.rest_points[*back].position, vec2(0, 2 * kPi)) < 1e-9);

    FieldSpec rotation = parse_field(
        "domain = box\ndim = 2\nbounds_0 = -2 2\nbounds_1 = -2 2\nX_0 = -x1\nX_1 = x0\n",
        "rotation");
    FlowOptions ropts;
    ropts.t_max = 50.0;
    RestPoint origin;
    origin.position = vec2(0, 0);
    ropts.rest_points = {origin};
    CHECK_FALSE(omega_limit(rotation, vec2(1, 0), TimeDirection::Forward, ropts).has_value());
}
