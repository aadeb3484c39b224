#pragma once

#include "atmosphere.hpp"
#include "decision.hpp"
#include "error.hpp"
#include "turbine.hpp"
#include "wake.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

namespace wfopt {

inline constexpr double kHoursPerYear = 365.0 * 24.0;

struct Bounds {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
    bool operator==(const Bounds &) const = default;
};

/// Quadrature on the swept disc: n_rings equal-width annuli times
/// n_sectors equal sectors. Nodes sit at the area midpoint of each annulus,
/// weighted by the exact annular-sector area.
class RotorGrid {
public:
    struct Node {
        double dy; // crosswind offset from the rotor centre, m
        double dz; // vertical offset, m
        double weight; // m^2
    };

    RotorGrid() = default;
    RotorGrid(double radius, int n_rings, int n_sectors)
        : radius_(radius), n_rings_(n_rings), n_sectors_(n_sectors) {
        detail::require(radius > 0.0 && n_rings >= 1 && n_sectors >= 1, "rotor grid: invalid resolution");
        const double dtheta = 2.0 * std::numbers::pi / n_sectors;
        nodes_.reserve(static_cast<std::size_t>(n_rings * n_sectors));
        for (int k = 0; k < n_rings; ++k) {
            const double r_in = radius * k / n_rings;
            const double r_out = radius * (k + 1) / n_rings;
            // midpoint in area rather than radius: half the error on narrow wakes
            const double r = std::sqrt(0.5 * (r_in * r_in + r_out * r_out));
            const double w = 0.5 * dtheta * (r_out * r_out - r_in * r_in);
            for (int l = 0; l < n_sectors; ++l) {
                const double theta = (l + 0.5) * dtheta;
                nodes_.push_back({r * std::cos(theta), r * std::sin(theta), w});
            }
        }
        for (const auto &n : nodes_) {
            total_weight_ += n.weight;
        }
    }

    double radius() const { return radius_; }
    int rings() const { return n_rings_; }
    int sectors() const { return n_sectors_; }
    const std::vector<Node> &nodes() const { return nodes_; }
    double total_weight() const { return total_weight_; }

private:
    double radius_ = 0.0;
    int n_rings_ = 0;
    int n_sectors_ = 0;
    std::vector<Node> nodes_;
    double total_weight_ = 0.0;
};

struct FarmCase {
    bool operator==(const FarmCase &) const = default;

    std::size_t turbines = 1;
    TurbineSpec turbine;
    Bounds bounds;
    WindRose rose;
    MergeRule merge_rule = MergeRule::LinearLocal;
    double min_spacing = 0.0; // m; 0 means one rotor diameter
    double rho = kStandardAirDensity;
    double yaw_power_exponent = 1.0; // P of a yawed rotor scales as cos^p(yaw)
    int rotor_rings = 10;
    int rotor_sectors = 20;
    WakeParams wake;

    double spacing() const { return min_spacing > 0.0 ? min_spacing : turbine.rotor_diameter; }
    RotorGrid rotor_grid() const { return RotorGrid(turbine.rotor_radius(), rotor_rings, rotor_sectors); }
};

inline void validate(const FarmCase &c) {
    using detail::require;
    require(c.turbines >= 1, "farm: need at least one turbine");
    require(c.bounds.x_min < c.bounds.x_max, "farm.bounds: x_min must be below x_max");
    require(c.bounds.y_min < c.bounds.y_max, "farm.bounds: y_min must be below y_max");
    require(c.spacing() >= c.turbine.rotor_diameter, "farm.min_spacing: must be at least the rotor diameter");
    require(c.rho > 0.0, "farm.rho: must be positive");
    require(c.yaw_power_exponent >= 0.0, "farm.yaw_power_exponent: must be non-negative");
    require(c.rotor_rings >= 1 && c.rotor_sectors >= 1, "farm.rotor_grid: need at least one ring and sector");
    validate(c.turbine, c.rho);
    validate(c.rose);
}

/// Turbine indices in ascending order of flow-direction projection; ties keep
/// their original relative order.
inline std::vector<std::size_t> sort_downstream(const Matrix &positions, double wind_dir) {
    const WindFrame frame(wind_dir);
    std::vector<double> proj(positions.rows());
    for (std::size_t i = 0; i < positions.rows(); ++i) {
        proj[i] = frame.downstream(positions(i, 0), positions(i, 1));
    }
    std::vector<std::size_t> order(positions.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });
    return order;
}

/// Disc-averaged merged speed over a rotor centred at (x, y, hub_height) in
/// the wind frame, sampling plane perpendicular to the flow.
inline double rotor_average_inflow(std::span<const WakeSource> upstream, MergeRule rule, const ABLProfile &profile,
                                   double x, double y, double hub_height, const RotorGrid &grid,
                                   const WakeParams &params = {}) {
    std::vector<std::pair<WakeSlice, const WakeSource *>> slices;
    for (const auto &src : upstream) {
        WakeSlice slice(src, x - src.x, params);
        if (slice.active() && std::abs(y - src.y) < slice.reach() + grid.radius()) {
            slices.emplace_back(slice, &src);
        }
    }
    double sum = 0.0;
    for (const auto &node : grid.nodes()) {
        const double z = hub_height + node.dz;
        const double u_inf = free_stream(profile, z);
        DeficitSum deficit(rule);
        for (const auto &[slice, src] : slices) {
            deficit.add(slice.fraction(y + node.dy - src->y, z), src->inflow, u_inf);
        }
        sum += node.weight * deficit.speed(u_inf);
    }
    return sum / grid.total_weight();
}

struct StateEvaluation {
    std::vector<double> inflow;      // ū_in per turbine, m/s
    std::vector<double> power;       // W per turbine
    double farm_power = 0.0;         // W
    std::vector<std::size_t> order;  // upstream to downstream
    std::vector<WakeSource> sources; // wake-generating turbines, wind frame
};

/// Speed the power lookup sees for a rotor yawed by `yaw`: the disc average
/// scaled by cos^(p/3) so that P follows cos^p.
inline double yawed_power_speed(double inflow, double yaw, double exponent) {
    if (exponent == 0.0 || yaw == 0.0) {
        return inflow;
    }
    return inflow * std::pow(std::cos(yaw), exponent / 3.0);
}

/// Farm power under wind state j. Turbines are swept upstream to downstream;
/// each operating turbine then contributes its yawed wake to everything
/// behind it.
inline StateEvaluation evaluate_state(const FarmCase &c, const DecisionMatrix &X, std::size_t j,
                                      const RotorGrid &grid) {
    const auto &state = c.rose[j];
    const auto &spec = c.turbine;
    const std::size_t n = X.turbines();
    const WindFrame frame(state.direction());

    StateEvaluation ev;
    ev.inflow.assign(n, 0.0);
    ev.power.assign(n, 0.0);
    ev.order = sort_downstream(X.positions(), state.direction());
    ev.sources.reserve(n);

    // Every rotor shares one hub height, so the free-stream value at each
    // quadrature node is the same for all turbines.
    const auto &nodes = grid.nodes();
    std::vector<double> node_z(nodes.size());
    std::vector<double> node_u(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        node_z[k] = spec.hub_height + nodes[k].dz;
        node_u[k] = free_stream(state.profile, node_z[k]);
    }
    const double radius = spec.rotor_radius();

    std::vector<std::pair<WakeSlice, double>> slices; // slice, crosswind offset of the source
    std::vector<double> slice_inflow;

    for (const std::size_t i : ev.order) {
        const double xs = frame.downstream(X.x(i), X.y(i));
        const double ys = frame.crosswind(X.x(i), X.y(i));

        slices.clear();
        slice_inflow.clear();
        for (const auto &src : ev.sources) {
            WakeSlice slice(src, xs - src.x, c.wake);
            if (slice.active() && std::abs(ys - src.y) < slice.reach() + radius) {
                slices.emplace_back(slice, src.y);
                slice_inflow.push_back(src.inflow);
            }
        }

        double inflow = 0.0;
        if (slices.empty()) {
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                inflow += nodes[k].weight * node_u[k];
            }
        } else {
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                DeficitSum deficit(c.merge_rule);
                for (std::size_t s = 0; s < slices.size(); ++s) {
                    const double f = slices[s].first.fraction(ys + nodes[k].dy - slices[s].second, node_z[k]);
                    deficit.add(f, slice_inflow[s], node_u[k]);
                }
                inflow += nodes[k].weight * deficit.speed(node_u[k]);
            }
        }
        inflow /= grid.total_weight();
        ev.inflow[i] = inflow;

        const double yaw = X.yaw(i, j);
        const double u_power = yawed_power_speed(inflow, yaw, c.yaw_power_exponent);
        ev.power[i] = aero_power(spec, u_power, c.rho);

        if (spec.operating(inflow)) {
            ev.sources.push_back({xs, ys, spec.rotor_diameter, spec.hub_height, spec.rotor_offset, yaw,
                                  interp(spec, CurveQuantity::Ct, inflow), inflow});
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        ev.farm_power += ev.power[i];
    }
    return ev;
}

inline StateEvaluation evaluate_state(const FarmCase &c, const DecisionMatrix &X, std::size_t j) {
    return evaluate_state(c, X, j, c.rotor_grid());
}

/// Per-state farm power, in state order.
inline std::vector<double> state_powers(const FarmCase &c, const DecisionMatrix &X, const RotorGrid &grid) {
    std::vector<double> p(c.rose.size());
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        p[j] = evaluate_state(c, X, j, grid).farm_power;
    }
    return p;
}

/// Annual energy production in watt-hours.
inline double aep(const FarmCase &c, const DecisionMatrix &X, const RotorGrid &grid) {
    validate(c.rose);
    detail::require(X.turbines() == c.turbines && X.states() == c.rose.size(),
                    "decision matrix shape does not match the case");
    double sum = 0.0;
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        sum += c.rose[j].probability * evaluate_state(c, X, j, grid).farm_power;
    }
    return kHoursPerYear * sum;
}

inline double aep(const FarmCase &c, const DecisionMatrix &X) { return aep(c, X, c.rotor_grid()); }

/// AEP with no wake interaction and no yaw: every turbine sees the
/// unwaked rotor-averaged inflow.
inline double ideal_aep(const FarmCase &c) {
    const auto grid = c.rotor_grid();
    double sum = 0.0;
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        const auto &s = c.rose[j];
        const double u = rotor_average_inflow({}, c.merge_rule, s.profile, 0.0, 0.0, c.turbine.hub_height, grid);
        sum += s.probability * aero_power(c.turbine, u, c.rho);
    }
    return kHoursPerYear * sum * static_cast<double>(c.turbines);
}

struct SpacingViolation {
    std::size_t a = 0;
    std::size_t b = 0;
    double distance = 0.0;
};

/// Turbine pairs closer than `min_spacing`.
inline std::vector<SpacingViolation> spacing_violations(const Matrix &positions, double min_spacing) {
    std::vector<SpacingViolation> out;
    for (std::size_t a = 0; a < positions.rows(); ++a) {
        for (std::size_t b = a + 1; b < positions.rows(); ++b) {
            const double d = std::hypot(positions(a, 0) - positions(b, 0), positions(a, 1) - positions(b, 1));
            if (d < min_spacing) {
                out.push_back({a, b, d});
            }
        }
    }
    return out;
}

struct FieldSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    double resolution = 10.0; // m
    double z = 0.0;           // sampling height; <= 0 means hub height
};

/// Speeds on a regular horizontal grid; row r holds y = ys[r].
struct FieldGrid {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> u; // ys.size() x xs.size(), row-major
    double z = 0.0;

    double at(std::size_t row, std::size_t col) const { return u[row * xs.size() + col]; }
};

inline std::vector<double> grid_axis(double lo, double hi, double step) {
    detail::require(step > 0.0 && hi >= lo, "field: invalid axis");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> axis(count);
    for (std::size_t k = 0; k < count; ++k) {
        axis[k] = lo + step * static_cast<double>(k);
    }
    return axis;
}

/// Merged speed field of wind state j on a horizontal plane.
inline FieldGrid sample_field(const FarmCase &c, const DecisionMatrix &X, std::size_t j, const FieldSpec &spec) {
    detail::require(j < c.rose.size(), "field: wind state index " + std::to_string(j) + " out of range");
    const auto ev = evaluate_state(c, X, j);
    const auto &state = c.rose[j];
    FieldGrid g;
    g.xs = grid_axis(spec.x_min, spec.x_max, spec.resolution);
    g.ys = grid_axis(spec.y_min, spec.y_max, spec.resolution);
    g.z = spec.z > 0.0 ? spec.z : c.turbine.hub_height;
    g.u.resize(g.xs.size() * g.ys.size());
    for (std::size_t r = 0; r < g.ys.size(); ++r) {
        for (std::size_t col = 0; col < g.xs.size(); ++col) {
            g.u[r * g.xs.size() + col] =
                merged_speed(ev.sources, c.merge_rule, state.profile, g.xs[col], g.ys[r], g.z, state.direction(), c.wake);
        }
    }
    return g;
}

} // namespace wfopt
