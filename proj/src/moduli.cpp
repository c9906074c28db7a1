#include "instanton/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "instanton/local_model.hpp"

namespace instanton {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec wrapped_disp(const DomainSpec& domain, const Vec& a, const Vec& b) {
    Vec d = a - b;
    if (domain.kind == DomainKind::FlatTorus)
        for (int i = 0; i < domain.dimension; ++i) {
            double p = domain.periods[i];
            d[i] = std::remainder(d[i], p);
        }
    return d;
}

int census_index_of(const FieldSpec& field, const RestPointCensus& census, const Vec& p,
                    double radius) {
    for (std::size_t i = 0; i < census.points.size(); ++i)
        if (field.domain.distance(p, census.points[i].position) < radius)
            return static_cast<int>(i);
    return -1;
}

struct Passage {
    int rest_point;
    int exit_sign;  // sign along the 1-d unstable direction, 0 if not defined
    bool operator==(const Passage&) const = default;
};

struct DirectionClass {
    std::optional<int> omega;
    std::vector<Passage> passages;
};

// Boundary test: a true basin/stratum boundary flips the exit side at some
// shared saddle or changes the limit point.  Passages merely appearing or
// disappearing (the trajectory drifting out of the passage radius) are not
// boundaries.
bool incompatible(const DirectionClass& a, const DirectionClass& b) {
    if (a.omega != b.omega) return true;
    for (const auto& pa : a.passages)
        for (const auto& pb : b.passages)
            if (pa.rest_point == pb.rest_point && pa.exit_sign != 0 && pb.exit_sign != 0 &&
                pa.exit_sign != pb.exit_sign)
                return true;
    return false;
}

struct ShotResult {
    Trajectory traj;
    DirectionClass cls;
};

class Shooter {
  public:
    Shooter(const FieldSpec& field, const RestPointCensus& census, int source,
            const ModuliOptions& opts)
        : field_(field), census_(census), source_(source), opts_(opts) {
        flow_ = opts.flow;
        flow_.rest_points = census.points;
        unstable_ = invariant_subspace_basis(census.points[source].linearization, false);
    }

    int unstable_dim() const { return static_cast<int>(unstable_.cols()); }

    Vec direction_from_angle(double theta) const {
        return std::cos(theta) * unstable_.col(0) + std::sin(theta) * unstable_.col(1);
    }

    Vec seed(const Vec& dir) const {
        return field_.domain.wrap(census_.points[source_].position + opts_.seed_radius * dir);
    }

    ShotResult shoot(const Vec& dir) const {
        ShotResult res;
        res.traj = integrate(field_, seed(dir), {0.0, flow_.t_max}, flow_);
        res.cls = classify(res.traj);
        return res;
    }

    DirectionClass classify(const Trajectory& traj) const {
        DirectionClass cls;
        if (traj.limit_forward)
            cls.omega = census_index_of(field_, census_, *traj.limit_forward,
                                        flow_.capture_radius * 2);
        // passage scan over every rest point of strictly smaller index
        for (std::size_t r = 0; r < census_.points.size(); ++r) {
            const RestPoint& rp = census_.points[r];
            if (static_cast<int>(r) == source_ || rp.index >= census_.points[source_].index)
                continue;
            bool inside = false;
            double min_dist = 1e30;
            for (std::size_t i = 0; i < traj.samples.size(); ++i) {
                double d = field_.domain.distance(traj.samples[i].point, rp.position);
                if (d < opts_.passage_radius) {
                    inside = true;
                    min_dist = std::min(min_dist, d);
                } else if (inside) {
                    // visit closed; exit side along the unstable direction
                    int sign = 0;
                    if (rp.index == 1) {
                        Mat u = invariant_subspace_basis(rp.linearization, false);
                        Vec disp = wrapped_disp(field_.domain, traj.samples[i].point, rp.position);
                        double proj = u.col(0).dot(disp);
                        sign = proj > 0 ? 1 : -1;
                    }
                    cls.passages.push_back({static_cast<int>(r), sign});
                    inside = false;
                    min_dist = 1e30;
                }
            }
        }
        return cls;
    }

    const Mat& unstable_basis() const { return unstable_; }
    const FlowOptions& flow_options() const { return flow_; }

    // set when the trajectory is captured by a rest point one index below the
    // source, i.e. the direction lies on a stable manifold boundary itself
    std::optional<int> direct_saddle(const DirectionClass& cls) const {
        if (cls.omega && *cls.omega >= 0 &&
            census_.points[*cls.omega].index == census_.points[source_].index - 1)
            return cls.omega;
        return std::nullopt;
    }

  private:
    const FieldSpec& field_;
    const RestPointCensus& census_;
    int source_;
    ModuliOptions opts_;
    FlowOptions flow_;
    Mat unstable_;
};

double lyapunov_at(const FieldSpec& field, const Vec& p) {
    Vec w = field.domain.wrap(p);
    return field.lyapunov->eval(
        std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

// Midpoint of the Lyapunov values, nudged off critical values.
double anchor_level(const FieldSpec& field, const RestPointCensus& census, int x_idx, int y_idx) {
    double fx = lyapunov_at(field, census.points[x_idx].position);
    double fy = lyapunov_at(field, census.points[y_idx].position);
    double level = 0.5 * (fx + fy);
    double gap = fx - fy;
    for (const auto& rp : census.points)
        if (std::abs(lyapunov_at(field, rp.position) - level) < 1e-9) {
            level += 1e-3 * gap;
            break;
        }
    return level;
}

// Trajectory cut at the closest approach to the target rest point.
Trajectory truncate_at_closest(const FieldSpec& field, Trajectory traj, const RestPoint& target,
                               double required_dist) {
    std::size_t best = 0;
    double best_d = 1e30;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        double d = field.domain.distance(traj.samples[i].point, target.position);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best_d > required_dist)
        throw ModuliError("limiting trajectory does not approach the claimed target (closest " +
                          std::to_string(best_d) + ")");
    traj.samples.resize(best + 1);
    traj.limit_forward = target.position;
    return traj;
}

struct BoundaryDirection {
    double theta;
    int target;  // saddle the limiting trajectory converges to
};

// Recursive angular bisection between incompatible direction classes.
void refine_boundary(const Shooter& shooter, double lo, const DirectionClass& lo_cls, double hi,
                     const DirectionClass& hi_cls, double tol,
                     std::vector<BoundaryDirection>& out) {
    if (auto hit = shooter.direct_saddle(lo_cls)) {
        out.push_back({lo, *hit});
        return;
    }
    if (auto hit = shooter.direct_saddle(hi_cls)) {
        out.push_back({hi, *hit});
        return;
    }
    if (!incompatible(lo_cls, hi_cls)) return;
    if (hi - lo < tol) {
        // attribute the boundary to the saddle whose exit side flips
        for (const auto& pa : lo_cls.passages)
            for (const auto& pb : hi_cls.passages)
                if (pa.rest_point == pb.rest_point && pa.exit_sign != 0 &&
                    pb.exit_sign != 0 && pa.exit_sign != pb.exit_sign) {
                    out.push_back({0.5 * (lo + hi), pa.rest_point});
                    return;
                }
        throw ModuliError("unresolved direction-cell boundary at angle " +
                          std::to_string(0.5 * (lo + hi)) +
                          ": no saddle passage distinguishes the sides");
    }
    double mid = 0.5 * (lo + hi);
    DirectionClass mid_cls = shooter.shoot(shooter.direction_from_angle(mid)).cls;
    refine_boundary(shooter, lo, lo_cls, mid, mid_cls, tol, out);
    refine_boundary(shooter, mid, mid_cls, hi, hi_cls, tol, out);
}

}  // namespace

std::vector<int> InstantonTable::for_pair(int source, int target) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < instantons.size(); ++i)
        if (instantons[i].source == source && instantons[i].target == target)
            out.push_back(static_cast<int>(i));
    return out;
}

std::optional<int> stratum_dimension(const RestPoint& x, const RestPoint& y, int k) {
    if (k < 0) throw ModuliError("stratum depth must be nonnegative");
    int dim = x.index - y.index - 1 - k;
    if (dim < 0) return std::nullopt;
    return dim;
}

std::vector<Instanton> find_instantons(const FieldSpec& field, const RestPointCensus& census,
                                       int x_idx, int y_idx, const ModuliOptions& opts) {
    const RestPoint& x = census.points.at(x_idx);
    const RestPoint& y = census.points.at(y_idx);
    if (!field.lyapunov) throw ModuliError("find_instantons requires a Lyapunov expression");
    int gap = x.index - y.index;
    if (gap <= 0) return {};
    if (gap != 1)
        throw ModuliError("index gap is " + std::to_string(gap) +
                          "; use trace_family for one-parameter moduli");

    Shooter shooter(field, census, x_idx, opts);
    double level = anchor_level(field, census, x_idx, y_idx);
    std::vector<Instanton> found;

    auto emit = [&](const Vec& dir, double theta, Trajectory traj) {
        Instanton inst;
        inst.source = x_idx;
        inst.target = y_idx;
        inst.departure_direction = dir;
        inst.departure_angle = theta;
        inst.anchor_level = level;
        inst.anchor_point = flow_to_level(field, *field.lyapunov, shooter.seed(dir), level,
                                          shooter.flow_options());
        traj.limit_backward = x.position;
        inst.representative = std::move(traj);
        for (const auto& prev : found)
            if (field.domain.distance(prev.anchor_point, inst.anchor_point) <
                opts.anchor_merge_tol)
                return;  // duplicate representative
        found.push_back(std::move(inst));
    };

    if (shooter.unstable_dim() == 1) {
        for (double s : {1.0, -1.0}) {
            Vec dir = s * shooter.unstable_basis().col(0);
            ShotResult shot = shooter.shoot(dir);
            if (shot.cls.omega == y_idx)
                emit(dir, s > 0 ? 0.0 : std::numbers::pi, std::move(shot.traj));
        }
    } else if (shooter.unstable_dim() == 2) {
        const int m = opts.mesh_density;
        std::vector<DirectionClass> cls(m);
        for (int i = 0; i < m; ++i)
            cls[i] = shooter.shoot(shooter.direction_from_angle(i * kTwoPi / m)).cls;
        std::vector<BoundaryDirection> boundaries;
        for (int i = 0; i < m; ++i) {
            double lo = i * kTwoPi / m, hi = (i + 1) * kTwoPi / m;
            refine_boundary(shooter, lo, cls[i], hi, cls[(i + 1) % m], opts.angle_tol,
                            boundaries);
        }
        // mesh nodes on a boundary are reported by both adjacent intervals
        std::sort(boundaries.begin(), boundaries.end(),
                  [](const BoundaryDirection& a, const BoundaryDirection& b) {
                      return a.theta < b.theta;
                  });
        std::vector<BoundaryDirection> unique;
        for (const auto& b : boundaries) {
            bool dup = false;
            for (const auto& u : unique)
                if (u.target == b.target &&
                    std::abs(std::remainder(u.theta - b.theta, kTwoPi)) < 1e-9)
                    dup = true;
            if (!dup) unique.push_back(b);
        }
        for (const auto& b : unique) {
            if (b.target != y_idx) continue;
            Vec dir = shooter.direction_from_angle(b.theta);
            ShotResult shot = shooter.shoot(dir);
            Trajectory traj =
                truncate_at_closest(field, std::move(shot.traj), y,
                                    shooter.flow_options().capture_radius);
            emit(dir, b.theta, std::move(traj));
        }
    } else {
        throw ModuliError("unstable spheres of dimension > 1 are not supported");
    }

    std::sort(found.begin(), found.end(),
              [](const Instanton& a, const Instanton& b) {
                  return a.departure_angle < b.departure_angle;
              });
    return found;
}

int instanton_sign(const FieldSpec& field, const RestPointCensus& census, const Instanton& inst,
                   const std::vector<bool>& orientation_flip) {
    const RestPoint& x = census.points.at(inst.source);
    const RestPoint& y = census.points.at(inst.target);
    if (x.index - y.index != 1) throw ModuliError("sign defined only for index gap 1");
    const int n = field.domain.dimension;
    const int k = x.index;

    auto flipped = [&](int idx, Mat basis) {
        if (idx < static_cast<int>(orientation_flip.size()) && orientation_flip[idx] &&
            basis.cols() > 0)
            basis.col(0) *= -1.0;
        return basis;
    };

    Mat frame = flipped(inst.source, invariant_subspace_basis(x.linearization, false));
    int frame_flip = 0;  // orientation flips absorbed by QR renormalization (none)

    // transport the unstable frame along the representative by the linearized flow
    const Trajectory& traj = inst.representative;
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        double t0 = traj.samples[i].t, t1 = traj.samples[i + 1].t;
        int sub = std::max(1, static_cast<int>(std::ceil((t1 - t0) / 0.05)));
        double h = (t1 - t0) / sub;
        for (int s = 0; s < sub; ++s) {
            double t = t0 + s * h;
            auto rhs = [&](double tt, const Mat& V) {
                auto [val, J] = jacobian_at(field, traj.at(tt));
                return Mat(J * V);
            };
            Mat k1 = rhs(t, frame);
            Mat k2 = rhs(t + 0.5 * h, frame + 0.5 * h * k1);
            Mat k3 = rhs(t + 0.5 * h, frame + 0.5 * h * k2);
            Mat k4 = rhs(t + h, frame + h * k3);
            frame += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        // re-orthonormalize, keeping the orientation (R diagonal positive)
        Eigen::HouseholderQR<Mat> qr(frame);
        Mat Q = qr.householderQ() * Mat::Identity(n, k);
        Mat R = Q.transpose() * frame;
        for (int c = 0; c < k; ++c)
            if (R(c, c) < 0) Q.col(c) *= -1.0;
        frame = Q;
    }

    const Vec& z = traj.samples.back().point;
    Vec velocity = field.eval(z);
    if (velocity.norm() < 1e-14) throw ModuliError("vanishing velocity at comparison point");

    // Compare the transported frame against [velocity, oriented unstable basis
    // at y].  In the eigenbasis at y the stable part of every frame column is
    // asymptotically parallel to the stable part of the velocity, so the
    // velocity coefficient can be read off by projection; the remaining rows
    // are the unstable-basis coefficients.
    Mat uy = flipped(inst.target, invariant_subspace_basis(y.linearization, false));
    Mat sy = invariant_subspace_basis(y.linearization, true);
    Mat eigenbasis(n, n);
    eigenbasis.leftCols(y.index) = uy;
    eigenbasis.rightCols(n - y.index) = sy;
    auto dec = eigenbasis.fullPivLu();
    Mat coef = dec.solve(frame);                 // n x k
    Vec vcoef = dec.solve(velocity.normalized());
    Vec sv = vcoef.tail(n - y.index);
    if (sv.norm() < 1e-8)
        throw ModuliError("velocity at the comparison point is not stable-dominated");

    Mat M(k, k);
    for (int c = 0; c < k; ++c) {
        Vec sc = coef.col(c).tail(n - y.index);
        double gamma = sv.dot(sc) / sv.squaredNorm();
        M(0, c) = gamma;
        if ((sc - gamma * sv).norm() > 0.1 * coef.col(c).norm() + 1e-9)
            throw ModuliError("transported frame is not transverse along the velocity");
    }
    if (k > 1) M.bottomRows(k - 1) = coef.topRows(y.index);
    double det = M.determinant();
    if (std::abs(det) < 1e-6)
        throw ModuliError("degenerate comparison frame: transversality failure within tolerance");
    (void)frame_flip;
    return det > 0 ? 1 : -1;
}

std::map<int, std::vector<BrokenInstanton>> enumerate_broken(const RestPointCensus& census,
                                                             const InstantonTable& table,
                                                             int x_idx, int y_idx,
                                                             int max_depth) {
    std::map<int, std::vector<BrokenInstanton>> strata;
    std::vector<int> chain;
    auto dfs = [&](auto&& self, int current) -> void {
        if (current == y_idx && !chain.empty()) {
            int depth = static_cast<int>(chain.size()) - 1;
            if (depth <= max_depth) strata[depth].push_back({chain});
            return;
        }
        if (static_cast<int>(chain.size()) > max_depth) return;
        for (std::size_t i = 0; i < table.instantons.size(); ++i) {
            const Instanton& inst = table.instantons[i];
            if (inst.source != current) continue;
            if (census.points[inst.target].index >= census.points[current].index) continue;
            chain.push_back(static_cast<int>(i));
            self(self, inst.target);
            chain.pop_back();
        }
    };
    dfs(dfs, x_idx);
    for (int k = 0; k <= max_depth; ++k) strata.try_emplace(k);
    return strata;
}

std::map<int, std::vector<BrokenInstanton>> enumerate_broken_unstable(
    const RestPointCensus& census, const InstantonTable& table, int x_idx, int max_depth) {
    std::map<int, std::vector<BrokenInstanton>> strata;
    for (std::size_t y = 0; y < census.points.size(); ++y) {
        if (static_cast<int>(y) == x_idx) continue;
        auto part = enumerate_broken(census, table, x_idx, static_cast<int>(y), max_depth);
        for (auto& [k, v] : part)
            strata[k].insert(strata[k].end(), v.begin(), v.end());
    }
    return strata;
}

std::vector<Family> trace_family(const FieldSpec& field, const RestPointCensus& census,
                                 const InstantonTable& table, int x_idx, int y_idx,
                                 const ModuliOptions& opts) {
    const RestPoint& x = census.points.at(x_idx);
    const RestPoint& y = census.points.at(y_idx);
    if (x.index - y.index != 2)
        throw ModuliError("trace_family requires index gap exactly 2");
    if (!field.lyapunov) throw ModuliError("trace_family requires a Lyapunov expression");

    Shooter shooter(field, census, x_idx, opts);
    if (shooter.unstable_dim() != 2)
        throw ModuliError("trace_family supports 2-dimensional unstable spaces only");

    // boundary angles: departure directions of the gap-1 instantons out of x
    struct Boundary {
        double theta;
        int instanton;  // leg x -> saddle
        int saddle;
    };
    std::vector<Boundary> boundaries;
    for (std::size_t s = 0; s < census.points.size(); ++s) {
        if (census.points[s].index != x.index - 1) continue;
        for (int idx : table.for_pair(x_idx, static_cast<int>(s)))
            boundaries.push_back(
                {table.instantons[idx].departure_angle, idx, static_cast<int>(s)});
    }
    if (boundaries.empty())
        throw ModuliError("no gap-1 instantons out of the source; table incomplete?");
    std::sort(boundaries.begin(), boundaries.end(),
              [](const Boundary& a, const Boundary& b) { return a.theta < b.theta; });

    double level = anchor_level(field, census, x_idx, y_idx);
    const double eps_in = 1e-6;

    // match an arc-side approach at a saddle to the outgoing leg it limits onto
    auto exit_leg = [&](const Boundary& b, double side) -> int {
        Vec dir = shooter.direction_from_angle(b.theta + side * eps_in);
        DirectionClass cls = shooter.shoot(dir).cls;
        for (const auto& pass : cls.passages)
            if (pass.rest_point == b.saddle && pass.exit_sign != 0) {
                Mat u = invariant_subspace_basis(census.points[b.saddle].linearization, false);
                for (int idx : table.for_pair(b.saddle, y_idx)) {
                    double proj = u.col(0).dot(table.instantons[idx].departure_direction);
                    if ((proj > 0 ? 1 : -1) == pass.exit_sign) return idx;
                }
            }
        throw ModuliError("arc endpoint at angle " + std::to_string(b.theta) +
                          " does not match any known broken instanton");
    };

    std::vector<Family> families;
    const int nb = static_cast<int>(boundaries.size());
    for (int i = 0; i < nb; ++i) {
        const Boundary& start = boundaries[i];
        const Boundary& end = boundaries[(i + 1) % nb];
        double theta0 = start.theta;
        double theta1 = end.theta + (i + 1 == nb ? kTwoPi : 0.0);

        Family fam;
        fam.target = y_idx;
        fam.theta_start = theta0;
        fam.theta_end = theta1;
        // interior samples double as the membership check; arcs that flow to a
        // different minimum belong to another family and are skipped
        const int samples = 8;
        int arc_omega = -2;
        bool mixed = false;
        for (int sIdx = 1; sIdx <= samples; ++sIdx) {
            double theta = theta0 + (theta1 - theta0) * sIdx / (samples + 1);
            Vec dir = shooter.direction_from_angle(theta);
            DirectionClass cls = shooter.shoot(dir).cls;
            int om = cls.omega.value_or(-1);
            if (arc_omega == -2)
                arc_omega = om;
            else if (om != arc_omega)
                mixed = true;
            if (om != y_idx) continue;
            fam.sample_thetas.push_back(theta);
            fam.sample_anchors.push_back(flow_to_level(field, *field.lyapunov,
                                                       shooter.seed(dir), level,
                                                       shooter.flow_options()));
        }
        if (mixed)
            throw ModuliError("direction arc has inconsistent limits; boundary table incomplete");
        if (arc_omega != y_idx) continue;
        fam.boundary_start.legs = {start.instanton, exit_leg(start, +1.0)};
        fam.boundary_end.legs = {end.instanton, exit_leg(end, -1.0)};
        families.push_back(std::move(fam));
    }
    return families;
}

CornerPoset moduli_corner_poset(const std::vector<Family>& families,
                                const InstantonTable& table) {
    CornerPoset poset;
    poset.components.resize(2);
    poset.incidence.resize(1);

    // vertices are identified by their legs: distinct broken limits through the
    // same intermediate rest point are different corner components
    auto broken_label = [&](const BrokenInstanton& b) {
        std::string s = "b";
        for (std::size_t i = 0; i < b.legs.size(); ++i)
            s += (i ? "-" : "") + std::to_string(b.legs[i]);
        return s;
    };
    auto vertex = [&](const BrokenInstanton& b) {
        std::string label = broken_label(b);
        auto& verts = poset.components[0];
        for (std::size_t i = 0; i < verts.size(); ++i)
            if (verts[i] == label) return static_cast<int>(i);
        verts.push_back(label);
        return static_cast<int>(verts.size()) - 1;
    };

    for (std::size_t i = 0; i < families.size(); ++i) {
        poset.components[1].push_back("arc" + std::to_string(i));
        int a = static_cast<int>(i);
        poset.set_incidence(1, a, vertex(families[i].boundary_start), -1);
        poset.set_incidence(1, a, vertex(families[i].boundary_end), +1);
    }
    return poset;
}

InstantonTable build_instanton_table(const FieldSpec& field, const RestPointCensus& census,
                                     const ModuliOptions& opts) {
    InstantonTable table;
    for (std::size_t xi = 0; xi < census.points.size(); ++xi)
        for (std::size_t yi = 0; yi < census.points.size(); ++yi) {
            if (census.points[xi].index - census.points[yi].index != 1) continue;
            auto found = find_instantons(field, census, static_cast<int>(xi),
                                         static_cast<int>(yi), opts);
            for (auto& inst : found) {
                inst.sign = instanton_sign(field, census, inst);
                table.instantons.push_back(std::move(inst));
            }
        }
    return table;
}

std::map<std::pair<std::string, std::string>, std::int64_t> signed_instanton_counts(
    const RestPointCensus& census, const InstantonTable& table) {
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    // every gap-1 pair gets an entry, including canceling and empty ones
    for (std::size_t xi = 0; xi < census.points.size(); ++xi)
        for (std::size_t yi = 0; yi < census.points.size(); ++yi)
            if (census.points[xi].index - census.points[yi].index == 1)
                counts[{"p" + std::to_string(xi), "p" + std::to_string(yi)}] = 0;
    for (const auto& inst : table.instantons)
        counts[{"p" + std::to_string(inst.source), "p" + std::to_string(inst.target)}] +=
            inst.sign;
    return counts;
}

}  // namespace instanton
