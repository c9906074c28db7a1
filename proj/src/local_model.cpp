#include "instanton/local_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

namespace instanton {

namespace {

// Smooth bump: 1 on [0, r/2], 0 outside r.
double bump(double s, double r_cut) {
    if (s <= 0.5 * r_cut) return 1.0;
    if (s >= r_cut) return 0.0;
    auto psi = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
    double t = (r_cut - s) / (0.5 * r_cut);  // 1 at r/2, 0 at r
    return psi(t) / (psi(t) + psi(1.0 - t));
}

double op_norm(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return m.jacobiSvd().singularValues()[0];
}

}  // namespace

// Real basis of the span of generalized eigenspaces selected by `stable`.
Mat invariant_subspace_basis(const Mat& J, bool want_stable) {
    Eigen::EigenSolver<Mat> es(J);
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    std::vector<Eigen::VectorXcd> cols;
    std::vector<bool> used(J.rows(), false);
    for (int i = 0; i < J.rows(); ++i) {
        if (used[i]) continue;
        bool stable = vals[i].real() < 0;
        if (stable != want_stable) continue;
        if (std::abs(vals[i].imag()) < 1e-12) {
            cols.push_back(vecs.col(i));
        } else {
            // take one member of the conjugate pair, mark the partner
            for (int j = i + 1; j < J.rows(); ++j)
                if (!used[j] && std::abs(vals[j] - std::conj(vals[i])) < 1e-9) {
                    used[j] = true;
                    break;
                }
            cols.push_back(vecs.col(i));
        }
        used[i] = true;
    }
    // real + imaginary parts, then orthonormalize to drop dependent columns
    Mat raw(J.rows(), 0);
    auto append = [&](const Vec& v) {
        if (v.norm() < 1e-12) return;
        raw.conservativeResize(Eigen::NoChange, raw.cols() + 1);
        raw.col(raw.cols() - 1) = v;
    };
    for (const auto& c : cols) {
        append(c.real());
        if (c.imag().norm() > 1e-9) append(c.imag());
    }
    if (raw.cols() == 0) return raw;
    Eigen::ColPivHouseholderQR<Mat> qr(raw);
    int rank = static_cast<int>(qr.rank());
    Mat Q = qr.householderQ();
    Mat basis = Q.leftCols(rank);
    // deterministic sign: largest-magnitude entry of each column positive
    for (int c = 0; c < basis.cols(); ++c) {
        int arg = 0;
        basis.col(c).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, c) < 0) basis.col(c) *= -1.0;
    }
    return basis;
}

namespace {

struct Constants {
    double C, rho_prime;
};

Constants hyperbolic_constants(const Mat& Ap, const Mat& Am, double spectral_margin) {
    const double slack = 0.02;
    double rho_prime = spectral_margin * (1.0 - slack);
    double C = 1.0;
    const double t_end = 50.0, dt = 0.05;
    Mat Ep = Ap.rows() ? Mat((dt * Ap).exp()) : Mat();
    Mat Em = Am.rows() ? Mat((-dt * Am).exp()) : Mat();
    Mat Pp = Ap.rows() ? Mat(Mat::Identity(Ap.rows(), Ap.rows())) : Mat();
    Mat Pm = Am.rows() ? Mat(Mat::Identity(Am.rows(), Am.rows())) : Mat();
    for (double t = 0.0; t <= t_end; t += dt) {
        double growth = std::exp(rho_prime * t);
        if (Ap.rows()) C = std::max(C, op_norm(Pp) * growth);
        if (Am.rows()) C = std::max(C, op_norm(Pm) * growth);
        if (Ap.rows()) Pp = Ep * Pp;
        if (Am.rows()) Pm = Em * Pm;
    }
    return {C, rho_prime};
}

void finish_model(LocalModel& m) {
    auto [C, rho_prime] = hyperbolic_constants(m.A_plus(), m.A_minus(),
                                               m.rest_point.spectral_margin);
    m.C = C;
    m.rho_prime = rho_prime;
    m.rho = rho_prime * (1.0 - 0.1);

    // slope bound for Dg by sampling: ||Dg(u)|| <= B ||u|| on the cut-off support
    const int n = m.k_plus + m.k_minus;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    double B = 0.0;
    const double h = 1e-6 * m.r_cut;
    for (int s = 0; s < 256; ++s) {
        Vec dir(n);
        for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
        if (dir.norm() < 1e-12) continue;
        Vec u = (unif(rng) * m.r_cut) * dir.normalized();
        Mat Dg(n, n);
        for (int j = 0; j < n; ++j) {
            Vec up = u, um = u;
            up[j] += h;
            um[j] -= h;
            Dg.col(j) = (m.g(up) - m.g(um)) / (2 * h);
        }
        B = std::max(B, op_norm(Dg) / u.norm());
    }
    B *= 1.5;  // sampled max, keep headroom
    m.B = B < 1e-9 ? 0.0 : B;

    m.eta = m.B > 0.0 ? std::min(m.rho_prime / (4.0 * m.B * m.C), m.r_cut) : m.r_cut;
    m.eps_contract = 0.999 * m.eta / (4.0 * m.C);
    if (m.eta < 1e-8)
        throw LocalModelError(
            "contraction regime collapsed: B*r_cut too large, retry with r_cut <= " +
            std::to_string(m.rho_prime / (8.0 * m.B * m.C)));
}

}  // namespace

Vec LocalModel::to_adapted(const Vec& ambient) const {
    return basis_inverse * (ambient - rest_point.position);
}

Vec LocalModel::to_ambient(const Vec& adapted) const {
    return rest_point.position + change_of_basis * adapted;
}

Vec LocalModel::g(const Vec& u) const {
    Vec out(k_plus + k_minus);
    out.head(k_plus) = g_plus(u);
    out.tail(k_minus) = g_minus(u);
    return out;
}

namespace detail {
Vec raw_residual(const LocalModel& m, const Vec& u) {
    Vec ambient = m.rest_point.position + m.change_of_basis * u;
    return m.basis_inverse * m.field.eval(ambient) - m.A * u;
}
}  // namespace detail

Vec LocalModel::g_plus(const Vec& u) const {
    if (k_plus == 0) return Vec(0);
    Vec up0 = u;
    up0.tail(k_minus).setZero();
    Vec raw = raw_g ? raw_g(u) : detail::raw_residual(*this, u);
    Vec raw0 = raw_g ? raw_g(up0) : detail::raw_residual(*this, up0);
    return bump(u.norm(), r_cut) * raw.head(k_plus) - bump(up0.norm(), r_cut) * raw0.head(k_plus);
}

Vec LocalModel::g_minus(const Vec& u) const {
    if (k_minus == 0) return Vec(0);
    Vec u0m = u;
    u0m.head(k_plus).setZero();
    Vec raw = raw_g ? raw_g(u) : detail::raw_residual(*this, u);
    Vec raw0 = raw_g ? raw_g(u0m) : detail::raw_residual(*this, u0m);
    return bump(u.norm(), r_cut) * raw.tail(k_minus) - bump(u0m.norm(), r_cut) * raw0.tail(k_minus);
}

LocalModel build_local_model(const FieldSpec& field, const RestPoint& x, double r_cut) {
    if (!x.hyperbolic) throw LocalModelError("rest point is not hyperbolic");
    const int n = field.domain.dimension;
    LocalModel m;
    m.rest_point = x;
    m.field = field;
    m.r_cut = r_cut;

    Mat stable = invariant_subspace_basis(x.linearization, true);
    Mat unstable = invariant_subspace_basis(x.linearization, false);
    m.k_plus = static_cast<int>(stable.cols());
    m.k_minus = static_cast<int>(unstable.cols());
    if (m.k_plus + m.k_minus != n)
        throw LocalModelError("invariant subspaces do not span; spectrum too close to the axis");

    Mat V(n, n);
    V.leftCols(m.k_plus) = stable;
    V.rightCols(m.k_minus) = unstable;
    m.change_of_basis = V;
    m.basis_inverse = V.inverse();
    Mat A_full = m.basis_inverse * x.linearization * V;
    // invariant splitting makes the off-diagonal blocks vanish; enforce exactly
    m.A = Mat::Zero(n, n);
    m.A.topLeftCorner(m.k_plus, m.k_plus) = A_full.topLeftCorner(m.k_plus, m.k_plus);
    m.A.bottomRightCorner(m.k_minus, m.k_minus) =
        A_full.bottomRightCorner(m.k_minus, m.k_minus);
    double coupling = (A_full - m.A).norm();
    if (coupling > 1e-8 * (1.0 + A_full.norm()))
        throw LocalModelError("adapted coordinates failed to decouple the linear part");

    finish_model(m);
    return m;
}

LocalModel build_synthetic_model(const Mat& A, int k_plus, double spectral_margin, double r_cut,
                                 std::function<Vec(const Vec&)> raw_g) {
    const int n = static_cast<int>(A.rows());
    LocalModel m;
    m.rest_point.position = Vec::Zero(n);
    m.rest_point.linearization = A;
    m.rest_point.hyperbolic = true;
    m.rest_point.spectral_margin = spectral_margin;
    m.change_of_basis = Mat::Identity(n, n);
    m.basis_inverse = Mat::Identity(n, n);
    m.A = A;
    m.k_plus = k_plus;
    m.k_minus = n - k_plus;
    m.r_cut = r_cut;
    m.raw_g = raw_g ? std::move(raw_g) : [n](const Vec&) { return Vec(Vec::Zero(n)); };
    finish_model(m);
    return m;
}

BoundaryTrajectory solve_boundary_trajectory(const LocalModel& model, const BoundaryProblem& prob,
                                             double tol,
                                             const std::vector<Vec>* initial_iterate) {
    const int N = prob.nodes;
    if (N < 16) throw LocalModelError("boundary problem needs at least 16 nodes");
    if (prob.T1 >= prob.T2) throw LocalModelError("T1 must precede T2");
    if (prob.p.norm() > model.eps_contract * (1 + 1e-12) ||
        prob.q.norm() > model.eps_contract * (1 + 1e-12))
        throw LocalModelError("problem outside the contraction box: ||p||,||q|| must be <= " +
                              std::to_string(model.eps_contract));

    const int kp = model.k_plus, km = model.k_minus, n = kp + km;
    const double h = (prob.T2 - prob.T1) / (N - 1);

    // transition powers on the uniform grid, decaying direction only
    std::vector<Mat> Pp(N), Pm(N);
    Mat Ep = kp ? Mat((h * model.A_plus()).exp()) : Mat();
    Mat Em = km ? Mat((-h * model.A_minus()).exp()) : Mat();
    if (kp) Pp[0] = Mat::Identity(kp, kp);
    if (km) Pm[0] = Mat::Identity(km, km);
    for (int i = 1; i < N; ++i) {
        if (kp) Pp[i] = Ep * Pp[i - 1];
        if (km) Pm[i] = Em * Pm[i - 1];
    }

    BoundaryTrajectory out;
    out.times.resize(N);
    for (int i = 0; i < N; ++i) out.times[i] = prob.T1 + i * h;

    std::vector<Vec> x(N);
    if (initial_iterate) {
        if (initial_iterate->size() != static_cast<std::size_t>(N))
            throw LocalModelError("initial iterate node count mismatch");
        x = *initial_iterate;
    } else {
        for (int i = 0; i < N; ++i) {
            Vec u = Vec::Zero(n);
            if (kp) u.head(kp) = Pp[i] * prob.p;
            if (km) u.tail(km) = Pm[N - 1 - i] * prob.q;
            x[i] = u;
        }
    }

    auto apply_F = [&](const std::vector<Vec>& cur) {
        std::vector<Vec> gp(N), gm(N);
        for (int i = 0; i < N; ++i) {
            gp[i] = model.g_plus(cur[i]);
            gm[i] = model.g_minus(cur[i]);
        }
        std::vector<Vec> next(N);
        for (int i = 0; i < N; ++i) {
            Vec u = Vec::Zero(n);
            if (kp) {
                Vec acc = Pp[i] * prob.p;
                if (i > 0) {
                    Vec integral = Vec::Zero(kp);
                    for (int j = 0; j <= i; ++j) {
                        double w = (j == 0 || j == i) ? 0.5 : 1.0;
                        integral += w * (Pp[i - j] * gp[j]);
                    }
                    acc += h * integral;
                }
                u.head(kp) = acc;
            }
            if (km) {
                Vec acc = Pm[N - 1 - i] * prob.q;
                if (i < N - 1) {
                    Vec integral = Vec::Zero(km);
                    for (int j = i; j < N; ++j) {
                        double w = (j == i || j == N - 1) ? 0.5 : 1.0;
                        integral += w * (Pm[j - i] * gm[j]);
                    }
                    acc -= h * integral;
                }
                u.tail(km) = acc;
            }
            next[i] = u;
        }
        return next;
    };

    double prev_change = -1.0;
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<Vec> next = apply_F(x);
        double change = 0.0;
        for (int i = 0; i < N; ++i)
            change = std::max(change, (next[i] - x[i]).lpNorm<Eigen::Infinity>());
        x = std::move(next);
        ++out.iterations;
        if (prev_change > 1e-15) out.contraction_factors.push_back(change / prev_change);
        prev_change = change;
        if (change < tol) {
            out.states = std::move(x);
            return out;
        }
    }
    throw LocalModelError("fixed-point iteration did not converge in 200 steps; "
                          "parameters outside the contraction regime");
}

double fixed_point_residual(const LocalModel& model, const BoundaryProblem& prob,
                            const BoundaryTrajectory& sol) {
    BoundaryTrajectory once = solve_boundary_trajectory(model, prob,
                                                        std::numeric_limits<double>::infinity(),
                                                        &sol.states);
    double r = 0.0;
    for (std::size_t i = 0; i < sol.states.size(); ++i)
        r = std::max(r, (once.states[i] - sol.states[i]).lpNorm<Eigen::Infinity>());
    return r;
}

DecayReport verify_decay(const LocalModel& model, const BoundaryTrajectory& traj,
                         const BoundaryProblem& prob) {
    DecayReport rep;
    const int N = static_cast<int>(traj.times.size());
    const int kp = model.k_plus;
    const double span = prob.T2 - prob.T1;
    const double lo = prob.T1 + 0.1 * span, hi = prob.T2 - 0.1 * span;

    auto fit = [&](bool plus_branch, bool& degenerate) -> double {
        double sum_t = 0, sum_y = 0, sum_tt = 0, sum_ty = 0;
        int count = 0;
        double max_norm = 0.0;
        for (int i = 0; i < N; ++i) {
            if (traj.times[i] < lo || traj.times[i] > hi) continue;
            double norm = plus_branch ? traj.plus_part(i, kp).norm()
                                      : traj.minus_part(i, kp).norm();
            max_norm = std::max(max_norm, norm);
            if (norm < 1e-300) continue;
            double y = std::log(norm);
            sum_t += traj.times[i];
            sum_y += y;
            sum_tt += traj.times[i] * traj.times[i];
            sum_ty += traj.times[i] * y;
            ++count;
        }
        if (max_norm < 1e-12 || count < 2) {
            degenerate = true;
            return 0.0;
        }
        double slope = (count * sum_ty - sum_t * sum_y) / (count * sum_tt - sum_t * sum_t);
        // gamma+ decays forward (negative slope), gamma- decays backward
        return plus_branch ? -slope : slope;
    };

    rep.rho_fit_plus = fit(true, rep.degenerate_plus);
    rep.rho_fit_minus = fit(false, rep.degenerate_minus);

    const double eps = model.eps_contract;
    for (int i = 0; i < N; ++i) {
        double bound_p = eps * std::pow(model.C, -model.rho * (traj.times[i] - prob.T1));
        double bound_m = eps * std::pow(model.C, model.rho * (traj.times[i] - prob.T2));
        if (model.k_plus && traj.plus_part(i, kp).norm() > bound_p * (1 + 1e-9))
            rep.pointwise_ok = false;
        if (model.k_minus && traj.minus_part(i, kp).norm() > bound_m * (1 + 1e-9))
            rep.pointwise_ok = false;
    }

    bool plus_ok = rep.degenerate_plus || rep.rho_fit_plus >= model.rho * (1.0 - 0.1);
    bool minus_ok = rep.degenerate_minus || rep.rho_fit_minus >= model.rho * (1.0 - 0.1);
    rep.passes = plus_ok && minus_ok && rep.pointwise_ok;
    return rep;
}

std::pair<Vec, Vec> chart_chi(const LocalModel& model, const Vec& p, const Vec& q, double s) {
    if (s < 0) throw LocalModelError("chart parameter s must be >= 0");
    const int kp = model.k_plus, km = model.k_minus;
    Vec chi1(kp + km), chi2(kp + km);
    if (s == 0.0) {
        chi1.head(kp) = p;
        chi1.tail(km).setZero();
        chi2.head(kp).setZero();
        chi2.tail(km) = q;
        return {chi1, chi2};
    }
    if (2.0 / s < 1e-2)
        throw LocalModelError("chart parameter s too large for node resolution");
    BoundaryProblem prob{p, q, -1.0 / s, 1.0 / s, 512};
    BoundaryTrajectory sol = solve_boundary_trajectory(model, prob, 1e-13);
    chi1.head(kp) = p;
    chi1.tail(km) = sol.minus_part(0, kp);
    chi2.head(kp) = sol.plus_part(sol.states.size() - 1, kp);
    chi2.tail(km) = q;
    return {chi1, chi2};
}

}  // namespace instanton
