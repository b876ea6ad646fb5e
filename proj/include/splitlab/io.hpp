#pragma once

#include <string>

#include <json.hpp>

#include "splitlab/birkhoff.hpp"
#include "splitlab/bundle.hpp"
#include "splitlab/cascade.hpp"
#include "splitlab/invariants.hpp"

namespace splitlab {

using json = nlohmann::json;

// Matrices are stored column-major as separate real and imaginary arrays.
// nlohmann prints doubles with max_digits10, so values round-trip exactly.
json to_json(const Mat& m);
Mat mat_from_json(const json& j);

json to_json(const GroupSpec& s);
GroupSpec spec_from_json(const json& j);

json to_json(const WeightVector& d);
WeightVector weights_from_json(const json& j);

json to_json(const DiscreteLoop& loop);
DiscreteLoop loop_from_json(const json& j);

json to_json(const LaurentLoop& g);
LaurentLoop laurent_from_json(const json& j);

json to_json(const SphereGrid& g);
SphereGrid grid_from_json(const json& j);

json to_json(const ChartField& f);
ChartField chart_field_from_json(const json& j);

/// Full field data: grid dims, chart potentials, transition, label, convention tag.
json to_json(const TwoChartConnection& a);
TwoChartConnection connection_from_json(const json& j);

json to_json(const GaugeGenerator& g);
GaugeGenerator gauge_generator_from_json(const json& j);

json to_json(const ConnectionFamily& f);
ConnectionFamily family_from_json(const json& j);

/// Built-in problems are referenced by id; shooting settings travel along.
json to_json(const MorseBottProblem& p);
MorseBottProblem problem_from_json(const json& j);

json to_json(const CascadeComplexData& c);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j, int indent = -1);

}  // namespace splitlab
