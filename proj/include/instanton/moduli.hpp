#pragma once

#include <map>
#include <optional>

#include "instanton/complexes.hpp"
#include "instanton/flow.hpp"

namespace instanton {

struct ModuliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One connecting trajectory modulo time shift, anchored on the midpoint
// Lyapunov level.
struct Instanton {
    int source = -1, target = -1;  // indices into the rest-point census
    Vec anchor_point;
    double anchor_level = 0.0;
    Vec departure_direction;  // unit vector in the unstable eigenspace at source
    double departure_angle = 0.0;  // only meaningful for 2-dimensional unstable spheres
    int sign = 0;                  // 0 until instanton_sign is applied
    Trajectory representative;
};

struct BrokenInstanton {
    std::vector<int> legs;  // indices into the instanton table, endpoints matching
};

struct InstantonTable {
    std::vector<Instanton> instantons;
    std::vector<int> for_pair(int source, int target) const;
};

struct Family {
    int target = -1;
    double theta_start = 0.0, theta_end = 0.0;  // departure-angle arc at the source
    std::vector<double> sample_thetas;
    std::vector<Vec> sample_anchors;
    BrokenInstanton boundary_start, boundary_end;  // depth-1 broken limits
};

struct ModuliOptions {
    double seed_radius = 1e-2;   // radius on the linear unstable eigenspace
    int mesh_density = 720;      // direction samples on a 1-sphere of directions
    double angle_tol = 1e-12;
    double passage_radius = 0.35;  // a trajectory "passes" a saddle inside this
    double anchor_merge_tol = 1e-4;
    FlowOptions flow;
};

std::optional<int> stratum_dimension(const RestPoint& x, const RestPoint& y, int k);

// Instantons for an index-difference-1 pair.  Requires a field with a declared
// Lyapunov expression.  Equal or lower index returns the empty list.
std::vector<Instanton> find_instantons(const FieldSpec& field, const RestPointCensus& census,
                                       int x_idx, int y_idx, const ModuliOptions& opts = {});

// Coherent-orientation sign relative to the chosen unstable-eigenspace bases
// (the deterministic bases of invariant_subspace_basis, optionally flipped).
// orientation_flip[i] == true negates the first basis vector at rest point i.
int instanton_sign(const FieldSpec& field, const RestPointCensus& census, const Instanton& inst,
                   const std::vector<bool>& orientation_flip = {});

// Strata k -> broken instantons x to y with k intermediate rest points.
std::map<int, std::vector<BrokenInstanton>> enumerate_broken(const RestPointCensus& census,
                                                             const InstantonTable& table,
                                                             int x_idx, int y_idx, int max_depth);

// W^-_x variant: chains out of x with a free terminal rest point.
std::map<int, std::vector<BrokenInstanton>> enumerate_broken_unstable(
    const RestPointCensus& census, const InstantonTable& table, int x_idx, int max_depth);

// One-parameter families for an index-difference-2 pair, each bounded by two
// depth-1 broken instantons.  The table must already hold all gap-1 instantons.
std::vector<Family> trace_family(const FieldSpec& field, const RestPointCensus& census,
                                 const InstantonTable& table, int x_idx, int y_idx,
                                 const ModuliOptions& opts = {});

// Convenience: all gap-1 instantons of the census, signed.
InstantonTable build_instanton_table(const FieldSpec& field, const RestPointCensus& census,
                                     const ModuliOptions& opts = {});

// Corner poset of the 1-dimensional moduli space: arcs in P_1, depth-1 broken
// limits in P_0.  Arcs are oriented by increasing departure angle, so the end
// boundary carries incidence +1 and the start boundary -1.
CornerPoset moduli_corner_poset(const std::vector<Family>& families,
                                const InstantonTable& table);

// Signed counts keyed by generator labels p0, p1, ... in census order.
std::map<std::pair<std::string, std::string>, std::int64_t> signed_instanton_counts(
    const RestPointCensus& census, const InstantonTable& table);

}  // namespace instanton
