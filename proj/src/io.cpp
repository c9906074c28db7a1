#include "instanton/io.hpp"

#include <cstdio>
#include <sstream>

namespace instanton {

std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_vec(const Vec& v, const std::string& sep) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_number(v[i]);
    }
    return out;
}

std::string rest_point_report(const FieldSpec& field, const RestPointCensus& census) {
    std::ostringstream os;
    os << "# rest points of field " << field.id << "\n";
    os << "count " << census.points.size() << "\n";
    for (std::size_t i = 0; i < census.points.size(); ++i) {
        const RestPoint& rp = census.points[i];
        os << "rest-point #" << i << "\n";
        os << "  position " << format_vec(rp.position) << "\n";
        os << "  index " << rp.index << "\n";
        os << "  spectral-margin " << format_number(rp.spectral_margin) << "\n";
        for (const auto& lam : rp.spectrum)
            os << "  eigenvalue " << format_number(lam.real()) << " "
               << format_number(lam.imag()) << "\n";
    }
    for (const auto& rp : census.non_hyperbolic)
        os << "non-hyperbolic " << format_vec(rp.position) << "\n";
    return os.str();
}

std::string trajectory_to_text(const FieldSpec& field, const Trajectory& traj) {
    std::ostringstream os;
    os << "# trajectory of field " << traj.field_id << "\n";
    os << "# tolerance " << format_number(traj.tol) << "\n";
    os << "# t";
    for (int i = 0; i < field.domain.dimension; ++i) os << ", x" << i;
    os << "\n";
    for (const auto& s : traj.samples) {
        Vec p = field.domain.wrap(s.point);
        os << format_number(s.t);
        for (Eigen::Index i = 0; i < p.size(); ++i) os << ", " << format_number(p[i]);
        os << "\n";
    }
    return os.str();
}

std::string instanton_report(const FieldSpec& field, const RestPointCensus& census,
                             const std::vector<Instanton>& instantons) {
    std::ostringstream os;
    os << "# instantons of field " << field.id << "\n";
    os << "count " << instantons.size() << "\n";
    for (std::size_t i = 0; i < instantons.size(); ++i) {
        const Instanton& inst = instantons[i];
        os << "instanton #" << i << " from #" << inst.source << " to #" << inst.target << "\n";
        os << "  anchor-level " << format_number(inst.anchor_level) << "\n";
        os << "  anchor " << format_vec(inst.anchor_point) << "\n";
        os << "  departure " << format_vec(inst.departure_direction) << "\n";
        if (inst.sign != 0) os << "  sign " << (inst.sign > 0 ? "+1" : "-1") << "\n";
    }
    (void)census;
    return os.str();
}

std::string broken_report(const RestPointCensus& census, const InstantonTable& table,
                          const std::map<int, std::vector<BrokenInstanton>>& strata) {
    std::ostringstream os;
    for (const auto& [depth, chains] : strata) {
        os << "stratum depth " << depth << " count " << chains.size() << "\n";
        for (const auto& chain : chains) {
            os << "  chain";
            if (!chain.legs.empty()) os << " #" << table.instantons[chain.legs.front()].source;
            for (int leg : chain.legs) os << " -> #" << table.instantons[leg].target;
            os << "\n";
        }
    }
    (void)census;
    return os.str();
}

std::string family_report(const FieldSpec& field, const RestPointCensus& census,
                          const InstantonTable& table, const std::vector<Family>& families) {
    std::ostringstream os;
    os << "# instanton families of field " << field.id << "\n";
    os << "count " << families.size() << "\n";
    for (std::size_t i = 0; i < families.size(); ++i) {
        const Family& fam = families[i];
        os << "family #" << i << " into #" << fam.target << "\n";
        os << "  angle-range " << format_number(fam.theta_start) << " "
           << format_number(fam.theta_end) << "\n";
        auto describe = [&](const BrokenInstanton& b) {
            std::string s;
            if (!b.legs.empty()) s += "#" + std::to_string(table.instantons[b.legs.front()].source);
            for (int leg : b.legs) s += " -> #" + std::to_string(table.instantons[leg].target);
            return s;
        };
        os << "  boundary-start " << describe(fam.boundary_start) << "\n";
        os << "  boundary-end " << describe(fam.boundary_end) << "\n";
        for (std::size_t j = 0; j < fam.sample_thetas.size(); ++j)
            os << "  sample " << format_number(fam.sample_thetas[j]) << " anchor "
               << format_vec(fam.sample_anchors[j]) << "\n";
    }
    (void)census;
    return os.str();
}

}  // namespace instanton
