#pragma once

#include <functional>

#include "instanton/field.hpp"

namespace instanton {

struct LocalModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hyperbolic local model X = Au + g(u) in adapted real coordinates at a rest
// point, stable block first, with the contraction constants attached.
struct LocalModel {
    RestPoint rest_point;
    FieldSpec field;          // ambient field the model was cut from
    Mat change_of_basis;      // columns: stable basis then unstable basis
    Mat basis_inverse;
    Mat A;                    // block diagonal in adapted coordinates
    int k_plus = 0;           // dim of stable subspace R^+
    int k_minus = 0;          // dim of unstable subspace R^-
    double r_cut = 0.0;
    double C = 1.0;
    double rho_prime = 0.0;
    double rho = 0.0;         // decay rate actually asserted, rho_prime with slack
    double B = 0.0;           // Lipschitz slope bound for Dg
    double eta = 0.0;
    double eps_contract = 0.0;
    // When set, the residual nonlinearity before cutoff; otherwise it is the
    // transported field minus the linear part.
    std::function<Vec(const Vec&)> raw_g;

    Mat A_plus() const { return A.topLeftCorner(k_plus, k_plus); }
    Mat A_minus() const { return A.bottomRightCorner(k_minus, k_minus); }

    // Cut-off residual nonlinearity, vanishing on both coordinate planes.
    Vec g(const Vec& u) const;
    Vec g_plus(const Vec& u) const;   // k_plus components
    Vec g_minus(const Vec& u) const;  // k_minus components

    Vec to_adapted(const Vec& ambient) const;
    Vec to_ambient(const Vec& adapted) const;
};

struct BoundaryProblem {
    Vec p;        // k_plus components, ||p|| <= eps_contract
    Vec q;        // k_minus components, ||q|| <= eps_contract
    double T1 = 0.0, T2 = 1.0;
    int nodes = 512;  // >= 16
};

struct BoundaryTrajectory {
    std::vector<double> times;
    std::vector<Vec> states;  // adapted coordinates, stable block first
    int iterations = 0;
    std::vector<double> contraction_factors;  // per-iteration sup-norm ratios

    Vec plus_part(std::size_t i, int k_plus) const { return states[i].head(k_plus); }
    Vec minus_part(std::size_t i, int k_plus) const {
        return states[i].tail(states[i].size() - k_plus);
    }
};

struct DecayReport {
    double rho_fit_plus = 0.0;
    double rho_fit_minus = 0.0;
    bool passes = false;
    bool degenerate_plus = false;  // p ~ 0, gamma+ branch identically tiny
    bool degenerate_minus = false;
    bool pointwise_ok = true;
};

// Orthonormal real basis of the stable (Re < 0) or unstable (Re > 0) invariant
// subspace of J, with a deterministic column sign convention.
Mat invariant_subspace_basis(const Mat& J, bool stable);

LocalModel build_local_model(const FieldSpec& field, const RestPoint& x, double r_cut);

// Model straight from an adapted-coordinate matrix (stable block first) and an
// optional residual nonlinearity; used for synthetic and test models.
LocalModel build_synthetic_model(const Mat& A, int k_plus, double spectral_margin, double r_cut,
                                 std::function<Vec(const Vec&)> raw_g = nullptr);

// Fixed-point iteration of the two-point integral equation with trapezoidal
// quadrature; boundary values gamma^+(T1) = p and gamma^-(T2) = q are imposed.
BoundaryTrajectory solve_boundary_trajectory(const LocalModel& model, const BoundaryProblem& prob,
                                             double tol,
                                             const std::vector<Vec>* initial_iterate = nullptr);

// Sup-norm change of one more application of the integral map on `sol`.
double fixed_point_residual(const LocalModel& model, const BoundaryProblem& prob,
                            const BoundaryTrajectory& sol);

DecayReport verify_decay(const LocalModel& model, const BoundaryTrajectory& traj,
                         const BoundaryProblem& prob);

// Chart maps: for s > 0 solves the boundary problem on [-1/s, 1/s]; the pair
// is ((p, gamma^-(-1/s)), (gamma^+(1/s), q)), degenerating to ((p,0),(0,q)) at s = 0.
std::pair<Vec, Vec> chart_chi(const LocalModel& model, const Vec& p, const Vec& q, double s);

}  // namespace instanton
