#pragma once

// Private helpers shared by the JSON readers and writers.

#include <string>

#include <json.hpp>

#include "asdopt/design_space.hpp"
#include "asdopt/allocation.hpp"
#include "asdopt/trial_sim.hpp"

namespace asdopt::detail {

using nlohmann::json;

json to_json(const EffectSet& e);
json to_json(const DesignPoint& p);
json to_json(const AllocationResult& a);
json to_json(const PowerEstimate& p);

DesignPoint design_from_json(const json& j);

}  // namespace asdopt::detail
