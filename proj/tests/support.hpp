#pragma once

#include <wfopt/cases.hpp>
#include <wfopt/farm.hpp>
#include <wfopt/turbine.hpp>

#include <initializer_list>
#include <utility>

namespace wfopt::test {

inline const TurbineSpec &v80() {
    static const TurbineSpec spec = load_turbine(data_dir() / "turbines" / "vestas_v80");
    return spec;
}

inline const TurbineSpec &v112() {
    static const TurbineSpec spec = load_turbine(data_dir() / "turbines" / "vestas_v112");
    return spec;
}

/// Single-state V80 farm on a generous domain; the wind blows from
/// `bearing_deg`.
inline FarmCase single_state_case(std::size_t n, double bearing_deg = 270.0, double u_ref = 8.0, double alpha = 0.1) {
    FarmCase c;
    c.turbines = n;
    c.turbine = v80();
    c.bounds = {-5000.0, 5000.0, -5000.0, 5000.0};
    c.rose.states = {{bearing_deg, {u_ref, 25.0, alpha}, 1.0}};
    return c;
}

inline DecisionMatrix layout(std::initializer_list<std::pair<double, double>> xy, std::size_t states = 1) {
    DecisionMatrix X(xy.size(), states);
    std::size_t i = 0;
    for (const auto &[x, y] : xy) {
        X.x(i) = x;
        X.y(i) = y;
        ++i;
    }
    return X;
}

} // namespace wfopt::test
