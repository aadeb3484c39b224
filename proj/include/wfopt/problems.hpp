#pragma once

#include "decision.hpp"
#include "farm.hpp"
#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace wfopt {

/// Returned by cost() when the farm produces no energy at all.
inline constexpr double kDegenerateCost = 1e30;

struct RunSettings {
    SwarmConfig swarm;
    Algorithm algorithm = Algorithm::Agldpso;
    double yaw_max = deg_to_rad(30.0); // radians

    bool operator==(const RunSettings &) const = default;
};

/// Reciprocal AEP in 1/Wh.
inline double cost_from_aep(double energy) { return energy > 0.0 ? 1.0 / energy : kDegenerateCost; }

inline double cost(const FarmCase &c, const DecisionMatrix &X) { return cost_from_aep(aep(c, X)); }

/// Sum over turbine pairs of max(0, s - d)^2 / s^2.
inline double spacing_penalty(const Matrix &positions, double min_spacing) {
    double sum = 0.0;
    for (std::size_t a = 0; a < positions.rows(); ++a) {
        for (std::size_t b = a + 1; b < positions.rows(); ++b) {
            const double d = std::hypot(positions(a, 0) - positions(b, 0), positions(a, 1) - positions(b, 1));
            if (d < min_spacing) {
                const double depth = (min_spacing - d) / min_spacing;
                sum += depth * depth;
            }
        }
    }
    return sum;
}

/// Penalty weight: `factor` times the cost of the same farm with no wakes,
/// so a single full-depth violation outweighs any achievable AEP.
inline double penalty_lambda(const FarmCase &c, double factor) { return factor * cost_from_aep(ideal_aep(c)); }

/// cost_fn(X) plus the weighted spacing penalty of X's positions; feasible
/// exactly when no pair is closer than the minimum spacing.
template <class CostFn>
Evaluation penalized_cost(CostFn &&cost_fn, const DecisionMatrix &X, const FarmCase &c, double lambda) {
    const double pen = spacing_penalty(X.positions(), c.spacing());
    return {cost_fn(X) + lambda * pen, pen == 0.0};
}

/// Regular k x k grid spanning the domain (k = ceil(sqrt(n))), filled row
/// by row; for 25 turbines on 1600 m this is the 400 m checkerboard.
inline Matrix checkerboard_layout(const FarmCase &c) {
    const auto n = c.turbines;
    const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)) - 1e-12));
    Matrix p(n, 2);
    const double dx = k > 1 ? (c.bounds.x_max - c.bounds.x_min) / static_cast<double>(k - 1) : 0.0;
    const double dy = k > 1 ? (c.bounds.y_max - c.bounds.y_min) / static_cast<double>(k - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p(i, 0) = c.bounds.x_min + dx * static_cast<double>(i % k);
        p(i, 1) = c.bounds.y_min + dy * static_cast<double>(i / k);
    }
    if (k == 1) {
        p(0, 0) = 0.5 * (c.bounds.x_min + c.bounds.x_max);
        p(0, 1) = 0.5 * (c.bounds.y_min + c.bounds.y_max);
    }
    return p;
}

inline SearchSpace layout_space(const FarmCase &c, double vmax_fraction) {
    SearchSpace s{c.turbines, 2, {c.bounds.x_min, c.bounds.y_min}, {c.bounds.x_max, c.bounds.y_max}, {}};
    s.set_velocity_fraction(vmax_fraction);
    return s;
}

inline SearchSpace yaw_space(std::size_t turbines, std::size_t columns, double yaw_max, double vmax_fraction) {
    return SearchSpace::uniform(turbines, columns, -yaw_max, yaw_max, vmax_fraction);
}

inline SearchSpace joint_space(const FarmCase &c, double yaw_max, double vmax_fraction) {
    const std::size_t m = c.rose.size();
    SearchSpace s = yaw_space(c.turbines, m + 2, yaw_max, vmax_fraction);
    s.lower[0] = c.bounds.x_min;
    s.upper[0] = c.bounds.x_max;
    s.lower[1] = c.bounds.y_min;
    s.upper[1] = c.bounds.y_max;
    s.set_velocity_fraction(vmax_fraction);
    return s;
}

/// Penalized 1/AEP over full n x (m + 2) decision matrices.
class JointCost {
public:
    JointCost(const FarmCase &c, double lambda) : case_(c), grid_(c.rotor_grid()), lambda_(lambda) {}

    Evaluation operator()(const Matrix &m) const {
        const DecisionMatrix X(m);
        return penalized_cost([&](const DecisionMatrix &d) { return cost_from_aep(aep(case_, d, grid_)); }, X,
                              case_, lambda_);
    }

private:
    const FarmCase &case_;
    RotorGrid grid_;
    double lambda_;
};

/// Penalized 1/AEP over n x 2 layouts with every rotor facing the wind.
class GreedyLayoutCost {
public:
    GreedyLayoutCost(const FarmCase &c, double lambda) : case_(c), grid_(c.rotor_grid()), lambda_(lambda) {}

    Evaluation operator()(const Matrix &positions) const {
        DecisionMatrix X(case_.turbines, case_.rose.size());
        X.set_positions(positions);
        return penalized_cost([&](const DecisionMatrix &d) { return cost_from_aep(aep(case_, d, grid_)); }, X,
                              case_, lambda_);
    }

private:
    const FarmCase &case_;
    RotorGrid grid_;
    double lambda_;
};

/// 1/P_j over a single n x 1 yaw column of wind state j at fixed positions.
class StateYawCost {
public:
    StateYawCost(const FarmCase &c, Matrix positions, std::size_t state)
        : case_(c), positions_(std::move(positions)), state_(state), grid_(c.rotor_grid()) {}

    double operator()(const Matrix &yaw) const { return cost_from_aep(power(yaw)); }

    double power(const Matrix &yaw) const {
        DecisionMatrix X(case_.turbines, case_.rose.size());
        X.set_positions(positions_);
        for (std::size_t i = 0; i < case_.turbines; ++i) {
            X.yaw(i, state_) = yaw(i, 0);
        }
        return evaluate_state(case_, X, state_, grid_).farm_power;
    }

private:
    const FarmCase &case_;
    Matrix positions_;
    std::size_t state_;
    RotorGrid grid_;
};

namespace detail {

inline SwarmConfig stage_config(const SwarmConfig &base, std::uint64_t salt) {
    SwarmConfig cfg = base;
    cfg.seed = splitmix64(base.seed ^ splitmix64(salt));
    return cfg;
}

} // namespace detail

/// Per-state yaw optimisation at fixed positions. Each column is searched
/// independently with the zero column injected, so no state loses power.
inline std::pair<Matrix, std::vector<OptimizeResult>> optimize_yaw_columns(const FarmCase &c, const Matrix &positions,
                                                                           const RunSettings &settings,
                                                                           std::uint64_t salt) {
    const std::size_t n = c.turbines;
    const std::size_t m = c.rose.size();
    Matrix yaws(n, m);
    std::vector<OptimizeResult> runs;
    runs.reserve(m);
    const auto space = yaw_space(n, 1, settings.yaw_max, settings.swarm.vmax_fraction);
    for (std::size_t j = 0; j < m; ++j) {
        StateYawCost cost_fn(c, positions, j);
        auto res = optimize(space, cost_fn, detail::stage_config(settings.swarm, salt + j), settings.algorithm,
                            {Matrix(n, 1)});
        for (std::size_t i = 0; i < n; ++i) {
            yaws(i, j) = res.best_x(i, 0);
        }
        runs.push_back(std::move(res));
    }
    return {yaws, std::move(runs)};
}

struct SequentialResult {
    DecisionMatrix X; // [X_pos_seq, X_yaw_seq]
    double s_theta = 0.0;
    double s_ayc = 0.0;
    OptimizeResult layout_run;
    std::vector<OptimizeResult> yaw_runs;

    std::size_t evaluations() const {
        std::size_t e = layout_run.evaluations;
        for (const auto &r : yaw_runs) {
            e += r.evaluations;
        }
        return e;
    }
};

/// Layout under greedy yaw, then per-state yaw on the frozen layout.
inline SequentialResult optimize_sequential(const FarmCase &c, const RunSettings &settings) {
    validate(c);
    const double lambda = penalty_lambda(c, settings.swarm.penalty_lambda_factor);
    GreedyLayoutCost layout_cost(c, lambda);
    SequentialResult out;
    out.layout_run = optimize(layout_space(c, settings.swarm.vmax_fraction), layout_cost,
                              detail::stage_config(settings.swarm, 0x5E01), settings.algorithm,
                              {checkerboard_layout(c)});

    auto [yaws, runs] = optimize_yaw_columns(c, out.layout_run.best_x, settings, 0x5E02);
    out.yaw_runs = std::move(runs);
    out.X = make_decision(out.layout_run.best_x, yaws);
    out.s_theta = aep(c, out.X.greedy());
    out.s_ayc = aep(c, out.X);
    return out;
}

struct JointResult {
    DecisionMatrix X;
    double j_theta = 0.0;
    double j_ayc = 0.0;
    OptimizeResult run;
    std::size_t greedy_columns = 0; // yaw columns replaced by zero after the search
};

/// Replaces a yaw column by zeros wherever greedy control produces more
/// power in that state; afterwards AEP(X) >= AEP(greedy(X)) holds exactly.
inline std::size_t keep_greedy_where_better(const FarmCase &c, DecisionMatrix &X) {
    const auto grid = c.rotor_grid();
    const auto greedy = X.greedy();
    std::size_t replaced = 0;
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        const double p_yaw = evaluate_state(c, X, j, grid).farm_power;
        const double p_greedy = evaluate_state(c, greedy, j, grid).farm_power;
        if (p_greedy > p_yaw) {
            for (std::size_t i = 0; i < X.turbines(); ++i) {
                X.yaw(i, j) = 0.0;
            }
            ++replaced;
        }
    }
    return replaced;
}

/// Single swarm search over positions and every state's yaw at once.
/// `seed` (typically the sequential optimum) is injected as a particle.
inline JointResult optimize_joint(const FarmCase &c, const RunSettings &settings,
                                  const DecisionMatrix *seed = nullptr) {
    validate(c);
    const double lambda = penalty_lambda(c, settings.swarm.penalty_lambda_factor);
    JointCost cost_fn(c, lambda);

    std::vector<Matrix> seeds;
    DecisionMatrix board(c.turbines, c.rose.size());
    board.set_positions(checkerboard_layout(c));
    seeds.push_back(board.matrix());
    if (seed != nullptr) {
        seeds.push_back(seed->matrix());
    }

    JointResult out;
    out.run = optimize(joint_space(c, settings.yaw_max, settings.swarm.vmax_fraction), cost_fn,
                       detail::stage_config(settings.swarm, 0x1017), settings.algorithm, seeds);
    out.X = DecisionMatrix(out.run.best_x);
    out.greedy_columns = keep_greedy_where_better(c, out.X);
    out.j_ayc = aep(c, out.X);
    out.j_theta = aep(c, out.X.greedy());
    return out;
}

inline double improvement_percent(double value, double baseline) { return 100.0 * (value - baseline) / baseline; }

/// Per-state AEP contributions 8760 p_j P_j in Wh.
inline std::vector<double> direction_breakdown(const FarmCase &c, const DecisionMatrix &X) {
    const auto grid = c.rotor_grid();
    std::vector<double> out(c.rose.size());
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        out[j] = kHoursPerYear * c.rose[j].probability * evaluate_state(c, X, j, grid).farm_power;
    }
    return out;
}

struct DirectionRow {
    double bearing_deg = 0.0;
    double u_ref = 0.0;
    double probability = 0.0;
    double s_theta = 0.0; // Wh
    double s_ayc = 0.0;
    double j_theta = 0.0;
    double j_ayc = 0.0;
};

/// States sharing the same reference speed and probability, with their mean
/// per-state AEP and that mean's share of the sum of group means.
struct DirectionGroup {
    std::vector<std::size_t> states;
    double u_ref = 0.0;
    double probability = 0.0;
    DirectionRow mean;
    double j_ayc_share = 0.0;
};

inline std::vector<DirectionGroup> group_directions(const std::vector<DirectionRow> &rows) {
    std::vector<DirectionGroup> groups;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const DirectionGroup &g) {
            return g.u_ref == rows[j].u_ref && g.probability == rows[j].probability;
        });
        if (it == groups.end()) {
            groups.push_back({{}, rows[j].u_ref, rows[j].probability, {}, 0.0});
            it = groups.end() - 1;
        }
        it->states.push_back(j);
    }
    double total = 0.0;
    for (auto &g : groups) {
        const double k = static_cast<double>(g.states.size());
        for (auto j : g.states) {
            g.mean.s_theta += rows[j].s_theta / k;
            g.mean.s_ayc += rows[j].s_ayc / k;
            g.mean.j_theta += rows[j].j_theta / k;
            g.mean.j_ayc += rows[j].j_ayc / k;
        }
        g.mean.u_ref = g.u_ref;
        g.mean.probability = g.probability;
        total += g.mean.j_ayc;
    }
    for (auto &g : groups) {
        g.j_ayc_share = total > 0.0 ? g.mean.j_ayc / total : 0.0;
    }
    std::sort(groups.begin(), groups.end(), [](const DirectionGroup &a, const DirectionGroup &b) {
        return a.mean.j_ayc > b.mean.j_ayc;
    });
    return groups;
}

/// Normalised-power bookkeeping of turbines that lose (up) or gain (down)
/// power when yaw control replaces greedy control, over every (turbine,
/// state) pair whose power changes.
struct PowerDiagnostics {
    std::size_t up_count = 0;
    std::size_t down_count = 0;
    double p_up = 0.0;       // mean P/P_rated under greedy control
    double dp_up = 0.0;      // mean change in P/P_rated (<= 0)
    double grad_up = 0.0;    // mean d(P/P_rated)/du at the greedy inflow, s/m
    double p_down = 0.0;
    double dp_down = 0.0;    // >= 0
    double grad_down = 0.0;
};

inline double normalized_power_gradient(const TurbineSpec &spec, double u, double rho, double h = 0.05) {
    const double lo = std::max(0.0, u - h);
    const double hi = u + h;
    return (aero_power(spec, hi, rho) - aero_power(spec, lo, rho)) / ((hi - lo) * spec.rated_power);
}

inline PowerDiagnostics power_diagnostics(const FarmCase &c, const DecisionMatrix &X) {
    const auto grid = c.rotor_grid();
    const auto greedy = X.greedy();
    const double rated = c.turbine.rated_power;
    PowerDiagnostics d;
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        const auto ayc = evaluate_state(c, X, j, grid);
        const auto base = evaluate_state(c, greedy, j, grid);
        for (std::size_t i = 0; i < X.turbines(); ++i) {
            const double delta = (ayc.power[i] - base.power[i]) / rated;
            if (delta == 0.0) {
                continue;
            }
            const double p = base.power[i] / rated;
            const double g = normalized_power_gradient(c.turbine, base.inflow[i], c.rho);
            if (delta < 0.0) {
                ++d.up_count;
                d.p_up += p;
                d.dp_up += delta;
                d.grad_up += g;
            } else {
                ++d.down_count;
                d.p_down += p;
                d.dp_down += delta;
                d.grad_down += g;
            }
        }
    }
    if (d.up_count > 0) {
        const double k = static_cast<double>(d.up_count);
        d.p_up /= k;
        d.dp_up /= k;
        d.grad_up /= k;
    }
    if (d.down_count > 0) {
        const double k = static_cast<double>(d.down_count);
        d.p_down /= k;
        d.dp_down /= k;
        d.grad_down /= k;
    }
    return d;
}

struct ComparisonReport {
    double s_theta = 0.0; // Wh
    double s_ayc = 0.0;
    double j_theta = 0.0;
    double j_ayc = 0.0;
    DecisionMatrix sequential;
    DecisionMatrix joint;
    std::vector<DirectionRow> directions;
    PowerDiagnostics diagnostics; // of the joint result
    double layout_distance = 0.0; // ||X_pos_joint - X_pos_seq||_2, m
    std::size_t sequential_evaluations = 0;
    std::size_t joint_evaluations = 0;
    std::vector<double> layout_history; // stage-1 best cost per iteration
    std::vector<double> joint_history;

    double improvement(double value) const { return improvement_percent(value, s_theta); }
};

inline std::vector<DirectionRow> direction_table(const FarmCase &c, const DecisionMatrix &seq,
                                                 const DecisionMatrix &joint) {
    const auto st = direction_breakdown(c, seq.greedy());
    const auto sa = direction_breakdown(c, seq);
    const auto jt = direction_breakdown(c, joint.greedy());
    const auto ja = direction_breakdown(c, joint);
    std::vector<DirectionRow> rows(c.rose.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        rows[j] = {c.rose[j].bearing_deg, c.rose[j].profile.u_ref, c.rose[j].probability, st[j], sa[j], jt[j], ja[j]};
    }
    return rows;
}

/// Sequential pipeline, then joint search seeded with its optimum.
inline ComparisonReport compare(const FarmCase &c, const RunSettings &settings) {
    const auto seq = optimize_sequential(c, settings);
    const auto joint = optimize_joint(c, settings, &seq.X);

    ComparisonReport r;
    r.s_theta = seq.s_theta;
    r.s_ayc = seq.s_ayc;
    r.j_theta = joint.j_theta;
    r.j_ayc = joint.j_ayc;
    r.sequential = seq.X;
    r.joint = joint.X;
    r.directions = direction_table(c, seq.X, joint.X);
    r.diagnostics = power_diagnostics(c, joint.X);
    r.layout_distance = frobenius_distance(joint.X.positions(), seq.X.positions());
    r.sequential_evaluations = seq.evaluations();
    r.joint_evaluations = joint.run.evaluations;
    r.layout_history = seq.layout_run.history;
    r.joint_history = joint.run.history;
    return r;
}

} // namespace wfopt
