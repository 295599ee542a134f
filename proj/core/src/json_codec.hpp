#pragma once

// nlohmann::json conversions shared by the model serializers. Not installed.

#include <nlohmann/json.hpp>

#include "wqcascade/error.hpp"
#include "wqcascade/forest.hpp"

namespace wqcascade::detail {

using Json = nlohmann::json;

Json forest_to_json(const Forest& f);
Forest forest_from_json(const Json& j);

Json params_to_json(const ForestParams& p);
ForestParams params_from_json(const Json& j);

/// Reads j[key] as T, turning type and lookup failures into ValidationError.
template <typename T>
T field(const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model JSON field '") + key + "': " + e.what());
    }
}

Json parse_json(std::string_view text, std::string_view what);

}  // namespace wqcascade::detail
