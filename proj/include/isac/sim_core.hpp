// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "isac/config.hpp"
#include "isac/rng.hpp"

namespace isac {

/// Kinematic truth for one vehicle. The RSU sits at the origin and the ULA
/// axis lies along the road (+x), so theta is the angle from the array axis.
struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;        // speed magnitude [m/s]
    double theta = 0.0;    // [rad]
    double dist = 0.0;     // [m]
    double radial_v = 0.0; // [m/s], positive when receding
};

struct Geometry {
    double theta;
    double dist;
    double radial_v;
};

/// Angle, range and radial speed of a vehicle at (x, y) moving at speed v
/// along +x. Throws std::invalid_argument at the origin.
inline Geometry derive_geometry(double x, double y, double v)
{
    double dist = std::hypot(x, y);
    if (!(dist > 0.0)) throw std::invalid_argument("derive_geometry: vehicle at the RSU position (zero distance)");
    return {std::atan2(y, x), dist, v * x / dist};
}

inline VehicleState make_state(double x, double y, double v)
{
    auto g = derive_geometry(x, y, v);
    return {x, y, v, g.theta, g.dist, g.radial_v};
}

/// Nominal start position of vehicle k: (anchor_x0 + k * anchor_spacing, road_y).
inline double anchor_x(const SimConfig& cfg, int k) { return cfg.anchor_x0 + cfg.anchor_spacing * k; }

/// Draws K initial states. For each vehicle in order: dx, dy ~ N(0, jitter^2)
/// and then v ~ U(v_min, v_max).
inline std::vector<VehicleState> init_vehicles(const SimConfig& cfg, Rng& rng)
{
    std::vector<VehicleState> out;
    out.reserve(static_cast<std::size_t>(cfg.n_vehicles));
    for (int k = 0; k < cfg.n_vehicles; ++k) {
        double dx = cfg.position_jitter * rng.normal();
        double dy = cfg.position_jitter * rng.normal();
        double v = rng.uniform(cfg.v_min, cfg.v_max);
        out.push_back(make_state(anchor_x(cfg, k) + dx, cfg.road_y + dy, v));
    }
    return out;
}

/// One slot of motion: redraw the speed, then advance along +x by v * slot_dur.
inline VehicleState step_motion(const VehicleState& s, const SimConfig& cfg, Rng& rng)
{
    double v = rng.uniform(cfg.v_min, cfg.v_max);
    return make_state(s.x + v * cfg.slot_dur, s.y, v);
}

inline std::vector<VehicleState> step_all(const std::vector<VehicleState>& states, const SimConfig& cfg, Rng& rng)
{
    std::vector<VehicleState> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(step_motion(s, cfg, rng));
    return out;
}

} // namespace isac
