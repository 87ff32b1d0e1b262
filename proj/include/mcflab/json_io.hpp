#pragma once

#include "mcflab/submersions.hpp"

#include <json.hpp>

namespace mcflab {

using Json = nlohmann::ordered_json;

/// {"kind": "ROUND_SPHERE", "dim": 2, "params": {"c": 1.0}}
Json space_to_json(const AmbientSpace& space);
/// Throws CONFIG_ERROR on unknown kinds or missing parameters.
AmbientSpace space_from_json(const Json& j);

/// {"kind": "HOPF", "total": {...}, "base": {...}}
Json submersion_to_json(const SubmersionModel& sub);
/// Accepts the full descriptor or only {"kind", "total"}; a given base must match.
SubmersionModel submersion_from_json(const Json& j);

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

}  // namespace mcflab
