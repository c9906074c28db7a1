#include "instanton/field.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace instanton {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_coord(double v, double period) {
    double w = std::fmod(v, period);
    if (w < 0) w += period;
    return w;
}

double halton_1d(unsigned long i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

}  // namespace

bool DomainSpec::contains(const Vec& p) const {
    if (kind == DomainKind::FlatTorus) return p.size() == dimension;
    for (int i = 0; i < dimension; ++i)
        if (p[i] < lower[i] || p[i] > upper[i]) return false;
    return true;
}

Vec DomainSpec::wrap(const Vec& p) const {
    if (kind != DomainKind::FlatTorus) return p;
    Vec w = p;
    for (int i = 0; i < dimension; ++i) w[i] = wrap_coord(p[i], periods[i]);
    return w;
}

double DomainSpec::distance(const Vec& a, const Vec& b) const {
    double s = 0.0;
    for (int i = 0; i < dimension; ++i) {
        double d = a[i] - b[i];
        if (kind == DomainKind::FlatTorus) {
            d = std::fmod(std::abs(d), periods[i]);
            d = std::min(d, periods[i] - d);
        }
        s += d * d;
    }
    return std::sqrt(s);
}

Vec FieldSpec::eval(const Vec& p) const {
    const int n = domain.dimension;
    Vec v(n);
    std::span<const double> x(p.data(), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = components[i].eval(x);
    return v;
}

FieldSpec FieldSpec::negated() const {
    FieldSpec neg = *this;
    for (auto& c : neg.components) c = c.negated();
    for (auto& row : neg.jacobian_exprs)
        for (auto& e : row) e = e.negated();
    neg.lyapunov.reset();
    neg.id = id + "(-)";
    return neg;
}

Vec halton_point(const DomainSpec& domain, unsigned long i) {
    Vec p(domain.dimension);
    for (int d = 0; d < domain.dimension; ++d) {
        double u = halton_1d(i + 1, kPrimes[d % 10]);
        if (domain.kind == DomainKind::FlatTorus)
            p[d] = u * domain.periods[d];
        else
            p[d] = domain.lower[d] + u * (domain.upper[d] - domain.lower[d]);
    }
    return p;
}

namespace {

void check_torus_periodicity(const FieldSpec& field) {
    const int n = field.domain.dimension;
    std::vector<const Expr*> exprs;
    for (const auto& c : field.components) exprs.push_back(&c);
    if (field.lyapunov) exprs.push_back(&*field.lyapunov);
    for (const Expr* e : exprs) {
        for (int d = 0; d < n; ++d) {
            for (unsigned long s = 0; s < 24; ++s) {
                Vec p = halton_point(field.domain, s * 7 + 3);
                Vec q = p;
                q[d] += field.domain.periods[d];
                std::span<const double> xp(p.data(), static_cast<std::size_t>(n));
                std::span<const double> xq(q.data(), static_cast<std::size_t>(n));
                double a = e->eval(xp), b = e->eval(xq);
                double scale = std::max({1.0, std::abs(a), std::abs(b)});
                if (std::abs(a - b) > 1e-8 * scale)
                    throw FieldError("expression '" + e->to_string() +
                                     "' is not periodic in x" + std::to_string(d) +
                                     " with the declared period");
            }
        }
    }
}

void build_jacobian_exprs(FieldSpec& field) {
    const int n = field.domain.dimension;
    field.jacobian_exprs.assign(n, {});
    for (int i = 0; i < n; ++i) {
        field.jacobian_exprs[i].reserve(n);
        for (int j = 0; j < n; ++j) field.jacobian_exprs[i].push_back(field.components[i].diff(j));
    }
}

}  // namespace

FieldSpec parse_field(const std::string& source_text, const std::string& id) {
    FieldSpec field;
    field.id = id;
    std::istringstream in(source_text);
    std::string line;
    int dim = -1;
    std::string domain_kind;
    std::vector<std::pair<int, std::string>> comps;
    std::vector<std::pair<int, double>> periods;
    std::vector<std::pair<int, std::pair<double, double>>> bounds;
    std::optional<std::string> lyap;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw FieldError("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "domain") {
            domain_kind = value;
        } else if (key == "dim") {
            dim = std::stoi(value);
        } else if (key == "f") {
            lyap = value;
        } else if (key.rfind("X_", 0) == 0) {
            comps.emplace_back(std::stoi(key.substr(2)), value);
        } else if (key.rfind("period_", 0) == 0) {
            periods.emplace_back(std::stoi(key.substr(7)), std::stod(value));
        } else if (key.rfind("bounds_", 0) == 0) {
            std::istringstream bs(value);
            double lo, hi;
            char sep = ' ';
            bs >> lo;
            if (bs.peek() == ',') bs >> sep;
            bs >> hi;
            if (!bs) throw FieldError("line " + std::to_string(lineno) + ": malformed bounds");
            bounds.emplace_back(std::stoi(key.substr(7)), std::make_pair(lo, hi));
        } else {
            throw FieldError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }

    if (dim < 1) throw FieldError("missing or invalid 'dim'");
    field.domain.dimension = dim;
    if (domain_kind == "torus") {
        field.domain.kind = DomainKind::FlatTorus;
        field.domain.periods.assign(dim, kTwoPi);
        for (auto& [i, p] : periods) {
            if (i < 0 || i >= dim) throw FieldError("period index out of range");
            if (p <= 0) throw FieldError("period must be positive");
            field.domain.periods[i] = p;
        }
    } else if (domain_kind == "box") {
        field.domain.kind = DomainKind::Box;
        field.domain.lower.assign(dim, -1.0);
        field.domain.upper.assign(dim, 1.0);
        for (auto& [i, b] : bounds) {
            if (i < 0 || i >= dim) throw FieldError("bounds index out of range");
            if (b.first >= b.second) throw FieldError("box bounds must be strictly ordered");
            field.domain.lower[i] = b.first;
            field.domain.upper[i] = b.second;
        }
    } else {
        throw FieldError("domain must be 'torus' or 'box'");
    }

    field.components.resize(dim);
    std::vector<bool> seen(dim, false);
    for (auto& [i, src] : comps) {
        if (i < 0 || i >= dim) throw FieldError("component index X_" + std::to_string(i) + " out of range");
        field.components[i] = Expr::parse(src);
        seen[i] = true;
    }
    for (int i = 0; i < dim; ++i)
        if (!seen[i]) throw FieldError("missing component X_" + std::to_string(i));

    for (int i = 0; i < dim; ++i)
        if (field.components[i].max_var_index() >= dim)
            throw FieldError("component X_" + std::to_string(i) + " references coordinate x" +
                             std::to_string(field.components[i].max_var_index()) +
                             " beyond dim " + std::to_string(dim));
    if (lyap) {
        field.lyapunov = Expr::parse(*lyap);
        if (field.lyapunov->max_var_index() >= dim)
            throw FieldError("lyapunov expression references out-of-range coordinate");
    }

    if (field.domain.kind == DomainKind::FlatTorus) check_torus_periodicity(field);
    build_jacobian_exprs(field);
    return field;
}

FieldSpec parse_field_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FieldError("cannot open field spec '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto slash = path.find_last_of('/');
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem.erase(dot);
    return parse_field(ss.str(), stem);
}

std::pair<Vec, Mat> jacobian_at(const FieldSpec& field, const Vec& p) {
    const int n = field.domain.dimension;
    Vec v = field.eval(p);
    Mat J(n, n);
    std::span<const double> x(p.data(), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) J(i, j) = field.jacobian_exprs[i][j].eval(x);
    return {v, J};
}

RestPoint classify_rest_point(const FieldSpec& field, const Vec& p, const Tolerances& tol) {
    auto [v, J] = jacobian_at(field, p);
    if (v.norm() > std::max(tol.rest_point_tol, 1e-8))
        throw FieldError("classify_rest_point: input is not a rest point (|X| = " +
                         std::to_string(v.norm()) + ")");
    RestPoint rp;
    rp.position = field.domain.wrap(p);
    rp.linearization = J;
    Eigen::EigenSolver<Mat> es(J);
    if (es.info() != Eigen::Success) throw FieldError("eigen solver failed");
    rp.spectral_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < J.rows(); ++i) {
        std::complex<double> lam = es.eigenvalues()[i];
        rp.spectrum.push_back(lam);
        if (lam.real() > tol.spectral_tol) ++rp.index;
        rp.spectral_margin = std::min(rp.spectral_margin, std::abs(lam.real()));
    }
    std::sort(rp.spectrum.begin(), rp.spectrum.end(), [](auto a, auto b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    rp.hyperbolic = rp.spectral_margin > tol.spectral_tol;
    return rp;
}

namespace {

// Newton iteration on X(p) = 0 with the symbolic jacobian.
std::optional<Vec> newton_zero(const FieldSpec& field, Vec p, const Tolerances& tol) {
    // converge on step size, not residual: degenerate zeros (e.g. X = x^2) keep
    // a tiny residual long before the position, and would otherwise be
    // misclassified as hyperbolic from an inflated linearization
    for (int it = 0; it < tol.newton_max_iter; ++it) {
        auto [v, J] = jacobian_at(field, p);
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible()) return std::nullopt;
        Vec step = lu.solve(v);
        if (step.norm() > 10.0) return std::nullopt;  // diverging seed
        p -= step;
        if (field.domain.kind == DomainKind::Box && !field.domain.contains(p)) return std::nullopt;
        if (step.norm() <= tol.rest_point_tol) {
            if (field.eval(p).norm() > tol.rest_point_tol) return std::nullopt;
            return field.domain.wrap(p);
        }
    }
    return std::nullopt;
}

}  // namespace

RestPointCensus find_rest_points(const FieldSpec& field, int grid_density, const Tolerances& tol) {
    if (grid_density < 2) throw FieldError("grid_density must be >= 2");
    const int n = field.domain.dimension;
    RestPointCensus census;
    std::vector<Vec> found;

    std::vector<int> idx(n, 0);
    auto seed_at = [&](const std::vector<int>& ix) {
        Vec p(n);
        for (int d = 0; d < n; ++d) {
            if (field.domain.kind == DomainKind::FlatTorus)
                p[d] = (ix[d] + 0.5) * field.domain.periods[d] / grid_density;
            else
                p[d] = field.domain.lower[d] +
                       (ix[d] + 0.5) * (field.domain.upper[d] - field.domain.lower[d]) / grid_density;
        }
        return p;
    };

    bool done = false;
    while (!done) {
        if (auto z = newton_zero(field, seed_at(idx), tol)) {
            bool duplicate = false;
            for (const Vec& f : found)
                if (field.domain.distance(f, *z) < tol.dedup_radius) {
                    duplicate = true;
                    break;
                }
            if (!duplicate) found.push_back(*z);
        }
        // advance multi-index
        int d = 0;
        for (; d < n; ++d) {
            if (++idx[d] < grid_density) break;
            idx[d] = 0;
        }
        done = (d == n);
    }

    census.converged_anywhere = !found.empty();
    for (const Vec& z : found) {
        RestPoint rp = classify_rest_point(field, z, tol);
        (rp.hyperbolic ? census.points : census.non_hyperbolic).push_back(std::move(rp));
    }
    auto lex_less = [](const RestPoint& a, const RestPoint& b) {
        if (a.index != b.index) return a.index > b.index;
        for (int i = 0; i < a.position.size(); ++i)
            if (a.position[i] != b.position[i]) return a.position[i] < b.position[i];
        return false;
    };
    std::sort(census.points.begin(), census.points.end(), lex_less);
    std::sort(census.non_hyperbolic.begin(), census.non_hyperbolic.end(), lex_less);
    return census;
}

LyapunovReport check_lyapunov(const FieldSpec& field, const Expr& f, int samples,
                              const std::vector<RestPoint>& rest_points, unsigned seed) {
    const int n = field.domain.dimension;
    std::vector<Expr> grad;
    for (int d = 0; d < n; ++d) grad.push_back(f.diff(d));

    LyapunovReport report;
    report.passes = true;
    report.worst_value = -std::numeric_limits<double>::infinity();
    const double exclusion = 1e-2;
    int accepted = 0;
    unsigned long i = seed;
    while (accepted < samples) {
        Vec p = halton_point(field.domain, ++i);
        bool near_rest = false;
        for (const auto& rp : rest_points)
            if (field.domain.distance(p, rp.position) < exclusion) {
                near_rest = true;
                break;
            }
        if (near_rest) continue;
        ++accepted;
        std::span<const double> x(p.data(), static_cast<std::size_t>(n));
        Vec v = field.eval(p);
        double df_X = 0.0;
        for (int d = 0; d < n; ++d) df_X += grad[d].eval(x) * v[d];
        if (df_X > report.worst_value) {
            report.worst_value = df_X;
            report.worst_point = p;
        }
        if (df_X >= 0.0) report.passes = false;
    }
    return report;
}

}  // namespace instanton
