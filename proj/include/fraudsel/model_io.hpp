#pragma once

#include "fraudsel/config.hpp"
#include "fraudsel/ridge.hpp"
#include "fraudsel/tree_boost.hpp"

namespace fraudsel {

// Lossless JSON forms (doubles round-trip exactly). Malformed input raises
// ConfigError.
json to_json(const RidgeModel& model);
RidgeModel ridge_model_from_json(const json& j);

json to_json(const BoostModel& model);
BoostModel boost_model_from_json(const json& j);

}  // namespace fraudsel
