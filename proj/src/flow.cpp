#include "instanton/flow.hpp"

#include <cmath>

namespace instanton {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct CaptureHit {
    std::size_t rest_point;
};

}  // namespace

Vec Trajectory::at(double t) const {
    if (samples.empty()) throw FlowError("empty trajectory");
    if (t <= samples.front().t) return samples.front().point;
    if (t >= samples.back().t) return samples.back().point;
    std::size_t lo = 0, hi = samples.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        (samples[mid].t <= t ? lo : hi) = mid;
    }
    const auto& s0 = samples[lo];
    const auto& s1 = samples[hi];
    double h = s1.t - s0.t;
    double u = (t - s0.t) / h;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    return h00 * s0.point + h10 * h * s0.derivative + h01 * s1.point + h11 * h * s1.derivative;
}

Trajectory integrate(const FieldSpec& field, const Vec& start,
                     std::pair<double, double> t_span, const FlowOptions& opts) {
    auto [t0, t1] = t_span;
    if (t1 < t0) throw FlowError("t_span must be ordered; negate the field for backward time");
    if (!field.domain.contains(start)) throw FlowError("start point outside domain");

    Trajectory traj;
    traj.field_id = field.id;
    traj.tol = opts.tol;

    double t = t0;
    Vec y = start;
    Vec k1 = field.eval(y);
    traj.samples.push_back({t, y, k1});

    double h = std::min(opts.h_initial, t1 - t0);
    if (h <= 0) return traj;
    double err_prev = 1.0;
    const int n = field.domain.dimension;

    auto capture_check = [&](const Vec& p, const Vec& v) -> std::optional<CaptureHit> {
        if (v.norm() > opts.capture_speed) return std::nullopt;
        for (std::size_t i = 0; i < opts.rest_points.size(); ++i)
            if (field.domain.distance(p, opts.rest_points[i].position) < opts.capture_radius)
                return CaptureHit{i};
        return std::nullopt;
    };

    while (t < t1) {
        h = std::min(h, t1 - t);
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw FlowError("step-size underflow at t = " + std::to_string(t));

        Vec k2 = field.eval(y + h * (a21 * k1));
        Vec k3 = field.eval(y + h * (a31 * k1 + a32 * k2));
        Vec k4 = field.eval(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Vec k5 = field.eval(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Vec k6 = field.eval(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vec y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Vec k7 = field.eval(y_new);
        Vec err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            double sc = opts.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
            err = std::max(err, std::abs(err_vec[i]) / sc);
        }

        if (err <= 1.0) {
            // accepted
            t += h;
            y = y_new;
            k1 = k7;

            if (field.domain.kind == DomainKind::Box && !field.domain.contains(y)) {
                // clip the final sample to the boundary by bisecting the step
                const TrajectorySample& prev = traj.samples.back();
                double lo_t = prev.t, hi_t = t;
                Vec inside = prev.point;
                traj.samples.push_back({t, y, k1});
                for (int it = 0; it < 60 && hi_t - lo_t > 1e-14; ++it) {
                    double mid = 0.5 * (lo_t + hi_t);
                    Vec pm = traj.at(mid);
                    if (field.domain.contains(pm)) {
                        lo_t = mid;
                        inside = pm;
                    } else {
                        hi_t = mid;
                    }
                }
                if (lo_t > prev.t + 1e-14)
                    traj.samples.back() = {lo_t, inside, field.eval(inside)};
                else
                    traj.samples.pop_back();
                traj.truncated = true;
                return traj;
            }
            traj.samples.push_back({t, y, k1});
            if (auto hit = capture_check(y, k1)) {
                traj.limit_forward = opts.rest_points[hit->rest_point].position;
                return traj;
            }
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                         std::pow(err_prev, 0.4 / 5.0);
            err_prev = std::max(err, 1e-10);
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        }
    }
    return traj;
}

Vec flow_to_level(const FieldSpec& field, const Expr& f, const Vec& start, double level,
                  const FlowOptions& opts) {
    const int n = field.domain.dimension;
    auto fval = [&](const Vec& p) {
        Vec w = field.domain.wrap(p);
        return f.eval(std::span<const double>(w.data(), static_cast<std::size_t>(n)));
    };
    if (fval(start) <= level)
        throw FlowError("flow_to_level: f(start) must exceed the target level");

    FlowOptions o = opts;
    Trajectory traj = integrate(field, start, {0.0, o.t_max}, o);

    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        double f0 = fval(traj.samples[i - 1].point);
        double f1 = fval(traj.samples[i].point);
        if (f0 > level && f1 <= level) {
            double lo = traj.samples[i - 1].t, hi = traj.samples[i].t;
            while (hi - lo > 1e-14 * std::max(1.0, hi)) {
                double mid = 0.5 * (lo + hi);
                double fm = fval(traj.at(mid));
                if (std::abs(fm - level) <= 1e-12) { lo = hi = mid; break; }
                (fm > level ? lo : hi) = mid;
            }
            return field.domain.wrap(traj.at(0.5 * (lo + hi)));
        }
    }
    if (traj.limit_forward)
        throw FlowError("flow_to_level: trajectory captured by a rest point before the level");
    throw FlowError("flow_to_level: level not crossed within max time");
}

std::optional<std::size_t> omega_limit(const FieldSpec& field, const Vec& start,
                                       TimeDirection direction, const FlowOptions& opts) {
    // A start already at a rest point is its own limit.
    for (std::size_t i = 0; i < opts.rest_points.size(); ++i)
        if (field.domain.distance(start, opts.rest_points[i].position) < opts.capture_radius &&
            field.eval(start).norm() < opts.capture_speed)
            return i;

    const FieldSpec* f = &field;
    FieldSpec negated;
    if (direction == TimeDirection::Backward) {
        negated = field.negated();
        f = &negated;
    }
    Trajectory traj = integrate(*f, start, {0.0, opts.t_max}, opts);
    if (!traj.limit_forward) return std::nullopt;
    for (std::size_t i = 0; i < opts.rest_points.size(); ++i)
        if (field.domain.distance(*traj.limit_forward, opts.rest_points[i].position) <
            opts.capture_radius)
            return i;
    return std::nullopt;
}

}  // namespace instanton
