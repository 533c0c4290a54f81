#pragma once

#include <json.hpp>

#include "absorbmc/lattice_walk.hpp"

namespace absorbmc {

inline nlohmann::json site_to_json(const Site& s, int dimension) {
    nlohmann::json arr = nlohmann::json::array();
    for (int a = 0; a < dimension; ++a) arr.push_back(s[a]);
    return arr;
}

inline Site site_from_json(const nlohmann::json& arr, int dimension, const std::string& field) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != dimension)
        throw std::invalid_argument(field + ": expected an array of exactly " +
                                    std::to_string(dimension) + " integers");
    Site s{0, 0, 0};
    for (int a = 0; a < dimension; ++a) {
        if (!arr[a].is_number_integer())
            throw std::invalid_argument(field + ": coordinates must be integers");
        s[a] = arr[a].get<int>();
    }
    return s;
}

}  // namespace absorbmc
