#pragma once

#include <functional>
#include <optional>

#include "instanton/field.hpp"

namespace instanton {

struct FlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrajectorySample {
    double t;
    Vec point;       // unwrapped coordinates; exports reduce modulo periods
    Vec derivative;  // X(point), stored for Hermite dense output
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::string field_id;
    double tol = 1e-10;
    bool truncated = false;  // left the box domain
    std::optional<Vec> limit_forward;
    std::optional<Vec> limit_backward;

    // Cubic Hermite interpolation between the bracketing accepted steps.
    Vec at(double t) const;
    const Vec& start() const { return samples.front().point; }
    const Vec& end() const { return samples.back().point; }
};

struct FlowOptions {
    double tol = 1e-10;
    double capture_radius = 1e-3;
    double capture_speed = 1e-6;
    double t_max = 1e3;
    double h_initial = 1e-3;
    // Rest points eligible for capture; empty disables early stopping.
    std::vector<RestPoint> rest_points;
};

// Adaptive Dormand-Prince 4(5) over t_span; backward time by negating the span.
Trajectory integrate(const FieldSpec& field, const Vec& start,
                     std::pair<double, double> t_span, const FlowOptions& opts = {});

// First point along the forward trajectory where f drops to `level`,
// refined by bisection on the dense output to |f - level| <= 1e-10.
Vec flow_to_level(const FieldSpec& field, const Expr& f, const Vec& start, double level,
                  const FlowOptions& opts = {});

enum class TimeDirection { Forward, Backward };

// Index into opts.rest_points of the captured limit, or nullopt.
std::optional<std::size_t> omega_limit(const FieldSpec& field, const Vec& start,
                                       TimeDirection direction, const FlowOptions& opts);

}  // namespace instanton
