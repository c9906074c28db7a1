#pragma once

#include <string>

#include "instanton/flow.hpp"
#include "instanton/moduli.hpp"

namespace instanton {

// Shortest round-trip style decimal with 17 significant digits, so reruns are
// byte-identical across platforms with IEEE doubles.
std::string format_number(double v);
std::string format_vec(const Vec& v, const std::string& sep = " ");

// One block per rest point: position, index, spectrum, margin.
std::string rest_point_report(const FieldSpec& field, const RestPointCensus& census);

// Delimited text: comment header (field id, tolerance), then t, x0, ..., x(n-1)
// per accepted step.  Torus coordinates are reduced modulo the periods.
std::string trajectory_to_text(const FieldSpec& field, const Trajectory& traj);

std::string instanton_report(const FieldSpec& field, const RestPointCensus& census,
                             const std::vector<Instanton>& instantons);

std::string broken_report(const RestPointCensus& census, const InstantonTable& table,
                          const std::map<int, std::vector<BrokenInstanton>>& strata);

std::string family_report(const FieldSpec& field, const RestPointCensus& census,
                          const InstantonTable& table, const std::vector<Family>& families);

}  // namespace instanton
