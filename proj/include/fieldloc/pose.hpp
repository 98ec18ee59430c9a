#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "fieldloc/errors.hpp"

namespace fieldloc {

enum class Mode { k2Dof, k3Dof };

inline std::string mode_to_string(Mode mode) {
    return mode == Mode::k2Dof ? "2dof" : "3dof";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "2dof") return Mode::k2Dof;
    if (s == "3dof") return Mode::k3Dof;
    throw ValidationError("mode must be 2dof or 3dof, got: " + s);
}

// A 2D location in normalized map coordinates [-1, 1]^2, optionally
// carrying a unit-vector heading.
struct PoseHypothesis {
    double x = 0.0;
    double y = 0.0;
    std::optional<std::array<double, 2>> gamma;

    void validate() const {
        if (!(x >= -1.0 && x <= 1.0 && y >= -1.0 && y <= 1.0))
            throw ContractError("PoseHypothesis: coordinates outside [-1, 1]");
        if (gamma) {
            const double n = std::hypot((*gamma)[0], (*gamma)[1]);
            if (std::abs(n - 1.0) > 1e-9)
                throw ContractError("PoseHypothesis: heading is not unit norm");
        }
    }
};

inline double pose_distance(const PoseHypothesis& a, const PoseHypothesis& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace fieldloc
