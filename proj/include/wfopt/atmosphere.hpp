#pragma once

#include "error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace wfopt {

inline constexpr double kDefaultReferenceHeight = 25.0; // m
inline constexpr double kDefaultShearExponent = 0.1;    // offshore

/// Power-law atmospheric boundary layer, u(z) = U_ref (z / z_ref)^alpha.
struct ABLProfile {
    double u_ref = 8.0;
    double z_ref = kDefaultReferenceHeight;
    double alpha = kDefaultShearExponent;

    bool operator==(const ABLProfile &) const = default;
};

inline void validate(const ABLProfile &p) {
    detail::require(p.u_ref > 0.0, "ABL profile: U_ref must be positive");
    detail::require(p.z_ref > 0.0, "ABL profile: z_ref must be positive");
    detail::require(p.alpha >= 0.0 && p.alpha < 1.0, "ABL profile: alpha must lie in [0, 1)");
}

inline double free_stream(const ABLProfile &p, double z) {
    if (!(z > 0.0)) {
        throw std::domain_error("free_stream: height must be positive");
    }
    if (p.alpha == 0.0) {
        return p.u_ref;
    }
    return p.u_ref * std::pow(z / p.z_ref, p.alpha);
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Flow-vector angle (radians, counter-clockwise from +x = east) of a wind
/// blowing FROM compass bearing `from_deg` (clockwise from north).
/// A westerly (270) flows toward +x and maps to 0.
inline double flow_angle_from_bearing(double from_deg) {
    double a = deg_to_rad(270.0 - from_deg);
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a;
}

/// Inverse of flow_angle_from_bearing, normalised to [0, 360).
inline double bearing_from_flow_angle(double flow_rad) {
    double b = 270.0 - rad_to_deg(flow_rad);
    b = std::fmod(b, 360.0);
    if (b < 0.0) {
        b += 360.0;
    }
    // snap values that are 360 - eps back to 0 so compass labels stay stable
    if (360.0 - b < 1e-9) {
        b = 0.0;
    }
    return b;
}

/// One wind condition of the rose. The direction is kept as the compass
/// bearing the wind blows from (as written in case files); `direction()`
/// gives the flow-vector angle used by the wake model.
struct WindState {
    double bearing_deg = 270.0;
    ABLProfile profile;
    double probability = 1.0;

    double direction() const { return flow_angle_from_bearing(bearing_deg); }

    static WindState from_flow_angle(double flow_rad, ABLProfile profile, double probability) {
        return {bearing_from_flow_angle(flow_rad), profile, probability};
    }

    bool operator==(const WindState &) const = default;
};

struct WindRose {
    std::vector<WindState> states;

    std::size_t size() const { return states.size(); }
    const WindState &operator[](std::size_t j) const { return states[j]; }

    bool operator==(const WindRose &) const = default;
};

inline void validate(const WindRose &rose) {
    detail::require(!rose.states.empty(), "wind rose: needs at least one state");
    double total = 0.0;
    for (std::size_t j = 0; j < rose.size(); ++j) {
        const auto &s = rose[j];
        detail::require(s.probability >= 0.0 && s.probability <= 1.0,
                        "wind rose: state " + std::to_string(j) + " probability outside [0, 1]");
        validate(s.profile);
        total += s.probability;
    }
    detail::require(std::abs(total - 1.0) <= 1e-9,
                    "wind rose: probabilities sum to " + std::to_string(total) + ", expected 1");
}

/// Eight-point (or n-point) compass rose: equally spaced bearings starting
/// at north, each with probability 1/n and a shared profile.
inline WindRose uniform_rose(int n_dirs, double u_ref, double z_ref = kDefaultReferenceHeight,
                             double alpha = kDefaultShearExponent) {
    detail::require(n_dirs >= 1, "uniform_rose: need at least one direction");
    WindRose rose;
    rose.states.reserve(static_cast<std::size_t>(n_dirs));
    for (int k = 0; k < n_dirs; ++k) {
        const double bearing = 360.0 * k / n_dirs;
        rose.states.push_back({bearing, {u_ref, z_ref, alpha}, 1.0 / n_dirs});
    }
    return rose;
}

/// Uneven rose dominated by a strong westerly.
inline WindRose wf4_rose(double z_ref = kDefaultReferenceHeight, double alpha = kDefaultShearExponent) {
    struct Entry {
        double bearing, speed, probability;
    };
    constexpr Entry entries[] = {
        {0.0, 8.0, 0.10},   {45.0, 8.0, 0.10},  {90.0, 8.0, 0.10},   {135.0, 8.0, 0.10},
        {180.0, 8.0, 0.10}, {225.0, 9.0, 0.15}, {270.0, 11.0, 0.20}, {315.0, 9.0, 0.15},
    };
    WindRose rose;
    for (const auto &e : entries) {
        rose.states.push_back({e.bearing, {e.speed, z_ref, alpha}, e.probability});
    }
    return rose;
}

/// Conventional compass label for a bearing that sits on the 8-point rose;
/// otherwise the bearing in degrees.
inline std::string compass_label(double bearing_deg) {
    static const char *names[] = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
    const double k = bearing_deg / 45.0;
    const double r = std::round(k);
    if (std::abs(k - r) < 1e-9) {
        return names[static_cast<int>(r) % 8];
    }
    return std::to_string(bearing_deg);
}

} // namespace wfopt
