#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "instanton/expr.hpp"

namespace instanton {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DomainKind { FlatTorus, Box };

struct DomainSpec {
    DomainKind kind = DomainKind::FlatTorus;
    int dimension = 0;
    // FlatTorus: periods[i] > 0.  Box: lower[i] < upper[i].
    std::vector<double> periods;
    std::vector<double> lower, upper;

    bool contains(const Vec& p) const;
    // Wrap torus coordinates into [0, period); identity on boxes.
    Vec wrap(const Vec& p) const;
    // Per-coordinate wrapped distance on tori, Euclidean on boxes.
    double distance(const Vec& a, const Vec& b) const;
};

struct FieldSpec {
    DomainSpec domain;
    std::vector<Expr> components;
    std::vector<std::vector<Expr>> jacobian_exprs;  // [i][j] = dX_i/dx_j
    std::optional<Expr> lyapunov;
    std::string id;  // file stem or caller label, for report headers

    Vec eval(const Vec& p) const;
    FieldSpec negated() const;
};

struct RestPoint {
    Vec position;
    Mat linearization;
    std::vector<std::complex<double>> spectrum;
    int index = 0;            // # eigenvalues with positive real part
    bool hyperbolic = false;
    double spectral_margin = 0.0;  // min |Re lambda|
};

struct RestPointCensus {
    std::vector<RestPoint> points;          // hyperbolic, sorted by (index desc, position lex)
    std::vector<RestPoint> non_hyperbolic;  // reported, not silently dropped
    bool converged_anywhere = true;
};

struct LyapunovReport {
    bool passes = false;
    double worst_value = 0.0;
    Vec worst_point;
};

struct Tolerances {
    double rest_point_tol = 1e-10;
    double dedup_radius = 1e-6;
    double spectral_tol = 1e-6;
    int newton_max_iter = 50;
};

FieldSpec parse_field(const std::string& source_text, const std::string& id = "field");
FieldSpec parse_field_file(const std::string& path);

// value = X(p); jacobian from the symbolic per-component derivatives.
std::pair<Vec, Mat> jacobian_at(const FieldSpec& field, const Vec& p);

RestPoint classify_rest_point(const FieldSpec& field, const Vec& p,
                              const Tolerances& tol = {});

RestPointCensus find_rest_points(const FieldSpec& field, int grid_density,
                                 const Tolerances& tol = {});

LyapunovReport check_lyapunov(const FieldSpec& field, const Expr& f, int samples,
                              const std::vector<RestPoint>& rest_points, unsigned seed = 0);

// Halton quasi-random point in the domain, index i of the sequence.
Vec halton_point(const DomainSpec& domain, unsigned long i);

}  // namespace instanton
