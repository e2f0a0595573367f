#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"

namespace chemolab {

enum class InitialFamily { gaussian, uniform_ball };

inline std::string_view to_string(InitialFamily f) {
    return f == InitialFamily::gaussian ? "gaussian" : "uniform_ball";
}

inline InitialFamily initial_family_from_string(std::string_view s) {
    if (s == "gaussian") return InitialFamily::gaussian;
    if (s == "uniform_ball") return InitialFamily::uniform_ball;
    throw Error(ErrorCode::ConfigError, "unknown initial data family '" + std::string(s) + "'");
}

/// Gaussian bump mass * exp(-|x-c|^2/width^2) / norm, or a uniform ball of
/// radius `width`. Radial meshes ignore the centre.
struct InitialData {
    InitialFamily family = InitialFamily::gaussian;
    double mass = 1.0;
    double width = 0.5;
    std::array<double, 3> center{0.0, 0.0, 0.0};

    bool operator==(const InitialData&) const = default;
};

/// Samples the profile on the geometry and rescales so that the discrete
/// mass equals `mass` exactly (up to rounding).
inline Field make_initial_field(const Geometry& geometry, const InitialData& init) {
    if (!(init.mass >= 0.0)) throw Error(ErrorCode::ConfigError, "initial mass must be >= 0");
    if (!(init.width > 0.0)) throw Error(ErrorCode::ConfigError, "initial width must be > 0");
    Field rho(geometry);
    if (init.mass == 0.0) return rho;

    if (const auto* mesh = std::get_if<RadialMesh>(&geometry)) {
        const int n = mesh->n();
        const double dr = mesh->spacing();
        for (int i = 0; i < mesh->cells(); ++i) {
            double& v = rho.values[static_cast<std::size_t>(i)];
            if (init.family == InitialFamily::gaussian) {
                const double r = mesh->center(i);
                v = std::exp(-(r * r) / (init.width * init.width));
            } else {
                // Exact overlap of the shell with the ball.
                const double lo = i * dr;
                const double hi = std::min((i + 1) * dr, init.width);
                v = hi > lo ? (std::pow(hi, n) - std::pow(lo, n)) / (std::pow((i + 1) * dr, n) - std::pow(lo, n)) : 0.0;
            }
        }
    } else {
        const BoxGrid& g = std::get<BoxGrid>(geometry);
        const int N = g.points_per_axis;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < N; ++k) {
                    const double dx = g.coordinate(i) - init.center[0];
                    const double dy = g.coordinate(j) - init.center[1];
                    const double dz = g.coordinate(k) - init.center[2];
                    const double r2 = dx * dx + dy * dy + dz * dz;
                    double& v = rho.values[g.index(i, j, k)];
                    if (init.family == InitialFamily::gaussian) {
                        v = std::exp(-r2 / (init.width * init.width));
                    } else {
                        v = r2 <= init.width * init.width ? 1.0 : 0.0;
                    }
                }
    }
    const double raw = total_mass(rho);
    if (!(raw > 0.0)) throw Error(ErrorCode::ConfigError, "initial profile does not intersect the grid");
    for (double& v : rho.values) v *= init.mass / raw;
    return rho;
}

}  // namespace chemolab
