#pragma once

#include <map>
#include <memory>
#include <string>

#include "equistab/dynamics.hpp"
#include "equistab/symplectic.hpp"

namespace equistab {

struct Model {
    std::string name;
    std::shared_ptr<const HamiltonianSystem> system;
    InvariantCoordinates invariants;
    std::map<std::string, Vec> points;
    bool momentum_auto = false;
    bool proper_action = false;
    bool orthogonal = true;
    std::string hash; // FNV-1a of the source text, hex

    // Empty name picks the first point in name order.
    const Vec &point(const std::string &name) const;
};

// Parses the JSON model format (see README). Malformed JSON raises ParseError;
// schema problems raise InvalidModel.
Model parse_model(const std::string &text);
Model load_model(const std::string &path);

std::string fnv1a_hex(const std::string &bytes);

} // namespace equistab
