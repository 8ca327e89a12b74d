#pragma once

#include <string>

#include <json.hpp>

#include "fpa/constructions.hpp"
#include "fpa/core.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/profiles.hpp"

namespace fpa {

using Json = nlohmann::json;

Json to_json(const Instance& inst);
Instance instance_from_json(const Json& j);

Json to_json(const RandomBidProfile& profile);
RandomBidProfile profile_from_json(const Json& j);

Json to_json(const EquilibriumReport& report);
Json to_json(const ConstructionReport& report);

Instance load_instance(const std::string& path);
RandomBidProfile load_profile(const std::string& path);
void save_json(const Json& j, const std::string& path);

}  // namespace fpa
