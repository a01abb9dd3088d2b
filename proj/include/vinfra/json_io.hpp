#pragma once

#include "vinfra/cascade.hpp"
#include "vinfra/embed.hpp"
#include "vinfra/pooling.hpp"
#include "vinfra/sim.hpp"
#include "vinfra/topology.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace vinfra {

using nlohmann::json;

json physical_to_json(const PhysicalNetwork& net);
PhysicalNetwork physical_from_json(const json& j); // SchemaError on bad input

json vinf_to_json(const VInfRequest& v);
VInfRequest vinf_from_json(const json& j);

CascadeModel cascade_from_json(const json& j);
json cascade_to_json(const CascadeModel& m);

json config_to_json(const ScenarioConfig& c);
ScenarioConfig config_from_json(const json& j);

// a simulation job: base config plus an optional policy/sweep/seed grid
struct SimJob {
    ScenarioConfig base;
    std::vector<std::string> policies;
    std::string sweep_param; // "", "vbw_max" or "reliability"
    std::vector<double> sweep_values;
    std::vector<std::uint64_t> seeds;
};
SimJob job_from_json(const json& j);

json pool_to_json(const BackupPool& pool);
BackupPool pool_from_json(const json& j); // SchemaError / invariant violations

json solution_to_json(const EmbeddingSolution& sol, const PhysicalNetwork& net);

// structural self-checks for machine-readable outputs
void check_solution_json(const json& j);
void check_pool_json(const json& j);

json parse_json_file(const std::string& path);           // SchemaError on parse failure
void write_text_file_atomic(const std::string& path, const std::string& text);

} // namespace vinfra
