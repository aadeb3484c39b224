#pragma once

#include "cases.hpp"
#include "decision.hpp"
#include "error.hpp"
#include "problems.hpp"

#include <json.hpp>

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wfopt {

inline constexpr double kWhPerGWh = 1e9;

/// What a single `optimize` invocation produced. Entries belonging to a
/// pipeline that was not run stay empty.
struct RunReport {
    RunMode mode = RunMode::Both;
    std::optional<SequentialResult> sequential;
    std::optional<JointResult> joint;
    std::vector<DirectionRow> directions;
    std::optional<PowerDiagnostics> diagnostics;

    std::optional<double> s_theta() const { return sequential ? std::optional(sequential->s_theta) : std::nullopt; }
    std::optional<double> s_ayc() const { return sequential ? std::optional(sequential->s_ayc) : std::nullopt; }
    std::optional<double> j_theta() const { return joint ? std::optional(joint->j_theta) : std::nullopt; }
    std::optional<double> j_ayc() const { return joint ? std::optional(joint->j_ayc) : std::nullopt; }

    /// Percent change against S_Θ; empty without a sequential run.
    std::optional<double> improvement(std::optional<double> value) const {
        if (!value || !sequential) {
            return std::nullopt;
        }
        return improvement_percent(*value, sequential->s_theta);
    }
};

inline RunReport run_case(const CaseConfig &cfg) {
    RunReport r;
    r.mode = cfg.mode;
    const auto &c = cfg.farm;
    if (cfg.mode != RunMode::Joint) {
        r.sequential = optimize_sequential(c, cfg.run);
    }
    if (cfg.mode != RunMode::Sequential) {
        r.joint = optimize_joint(c, cfg.run, r.sequential ? &r.sequential->X : nullptr);
        r.diagnostics = power_diagnostics(c, r.joint->X);
    }

    const std::size_t m = c.rose.size();
    r.directions.resize(m);
    std::vector<double> st(m), sa(m), jt(m), ja(m);
    if (r.sequential) {
        st = direction_breakdown(c, r.sequential->X.greedy());
        sa = direction_breakdown(c, r.sequential->X);
    }
    if (r.joint) {
        jt = direction_breakdown(c, r.joint->X.greedy());
        ja = direction_breakdown(c, r.joint->X);
    }
    for (std::size_t j = 0; j < m; ++j) {
        r.directions[j] = {c.rose[j].bearing_deg, c.rose[j].profile.u_ref, c.rose[j].probability, st[j], sa[j], jt[j], ja[j]};
    }
    return r;
}

namespace detail {

inline nlohmann::json optional_number(std::optional<double> v, double scale = 1.0) {
    return v ? nlohmann::json(*v * scale) : nlohmann::json(nullptr);
}

inline nlohmann::json matrix_rows(const Matrix &m, double scale = 1.0) {
    auto out = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) {
            row.push_back(m(i, k) * scale);
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline Matrix matrix_from_rows(const nlohmann::json &rows, std::size_t cols, double scale, const std::string &what) {
    require(rows.is_array() && !rows.empty(), what + ": expected a non-empty array of rows");
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].is_array() && rows[i].size() == cols,
                what + "[" + std::to_string(i) + "]: expected " + std::to_string(cols) + " numbers");
        for (std::size_t k = 0; k < cols; ++k) {
            require(rows[i][k].is_number(), what + "[" + std::to_string(i) + "][" + std::to_string(k) + "]: not a number");
            m(i, k) = rows[i][k].get<double>() * scale;
        }
    }
    return m;
}

inline nlohmann::json decision_json(const DecisionMatrix &X) {
    return {{"layout", matrix_rows(X.positions())}, {"yaw_deg", matrix_rows(X.yaws(), rad_to_deg(1.0))}};
}

} // namespace detail

/// Deterministic result document. Wall-clock data is deliberately absent so
/// that reruns with the same seed are byte-identical; it lives in the
/// manifest instead.
inline nlohmann::json report_json(const CaseConfig &cfg, const RunReport &r) {
    using nlohmann::json;
    using detail::optional_number;
    const double gwh = 1.0 / kWhPerGWh;
    json out;
    out["case"] = cfg.name;
    out["case_hash"] = case_hash(cfg);
    out["mode"] = to_string(r.mode);
    out["seed"] = cfg.run.swarm.seed;
    out["config"] = to_json(cfg);
    out["aep_gwh"] = {{"s_theta", optional_number(r.s_theta(), gwh)},
                      {"s_ayc", optional_number(r.s_ayc(), gwh)},
                      {"j_theta", optional_number(r.j_theta(), gwh)},
                      {"j_ayc", optional_number(r.j_ayc(), gwh)}};
    out["aep_wh"] = {{"s_theta", optional_number(r.s_theta())},
                     {"s_ayc", optional_number(r.s_ayc())},
                     {"j_theta", optional_number(r.j_theta())},
                     {"j_ayc", optional_number(r.j_ayc())}};
    out["improvement_percent"] = {{"s_theta", optional_number(r.improvement(r.s_theta()))},
                                  {"s_ayc", optional_number(r.improvement(r.s_ayc()))},
                                  {"j_theta", optional_number(r.improvement(r.j_theta()))},
                                  {"j_ayc", optional_number(r.improvement(r.j_ayc()))}};
    out["sequential"] = r.sequential ? detail::decision_json(r.sequential->X) : json(nullptr);
    out["joint"] = r.joint ? detail::decision_json(r.joint->X) : json(nullptr);

    auto dirs = json::array();
    for (const auto &d : r.directions) {
        dirs.push_back({{"direction_deg", d.bearing_deg},
                        {"label", compass_label(d.bearing_deg)},
                        {"u_ref", d.u_ref},
                        {"probability", d.probability},
                        {"s_theta_gwh", r.sequential ? json(d.s_theta * gwh) : json(nullptr)},
                        {"s_ayc_gwh", r.sequential ? json(d.s_ayc * gwh) : json(nullptr)},
                        {"j_theta_gwh", r.joint ? json(d.j_theta * gwh) : json(nullptr)},
                        {"j_ayc_gwh", r.joint ? json(d.j_ayc * gwh) : json(nullptr)}});
    }
    out["directions"] = dirs;
    auto groups = json::array();
    if (r.joint) {
        for (const auto &g : group_directions(r.directions)) {
            auto labels = json::array();
            for (auto j : g.states) {
                labels.push_back(compass_label(r.directions[j].bearing_deg));
            }
            groups.push_back({{"directions", labels},
                              {"u_ref", g.u_ref},
                              {"probability", g.probability},
                              {"mean_j_ayc_gwh", g.mean.j_ayc * gwh},
                              {"j_ayc_share_percent", 100.0 * g.j_ayc_share}});
        }
    }
    out["direction_groups"] = groups;

    if (r.diagnostics) {
        const auto &d = *r.diagnostics;
        out["diagnostics"] = {{"up_count", d.up_count},     {"p_up", d.p_up},       {"dp_up", d.dp_up},
                              {"grad_up", d.grad_up},       {"down_count", d.down_count},
                              {"p_down", d.p_down},         {"dp_down", d.dp_down}, {"grad_down", d.grad_down}};
    } else {
        out["diagnostics"] = nullptr;
    }
    if (r.sequential && r.joint) {
        out["layout_distance_m"] = frobenius_distance(r.joint->X.positions(), r.sequential->X.positions());
    } else {
        out["layout_distance_m"] = nullptr;
    }
    out["evaluations"] = {{"sequential", r.sequential ? json(r.sequential->evaluations()) : json(nullptr)},
                          {"joint", r.joint ? json(r.joint->run.evaluations) : json(nullptr)}};
    out["budget"] = {{"particles", cfg.run.swarm.particles},
                     {"iterations", cfg.run.swarm.max_iterations},
                     {"max_evaluations", cfg.run.swarm.max_evaluations},
                     {"algorithm", to_string(cfg.run.algorithm)}};
    if (r.joint) {
        out["joint_greedy_columns"] = r.joint->greedy_columns;
    }
    return out;
}

/// Reads the decision matrix of `entry` ("sequential" or "joint") back from
/// a result document.
inline DecisionMatrix decision_from_report(const nlohmann::json &doc, const std::string &entry) {
    detail::require(doc.is_object() && doc.contains(entry) && doc.at(entry).is_object(),
            "result file has no '" + entry + "' entry");
    const auto &e = doc.at(entry);
    detail::require(e.contains("layout") && e.contains("yaw_deg"), "result '" + entry + "' entry lacks layout or yaw_deg");
    const auto pos = detail::matrix_from_rows(e.at("layout"), 2, 1.0, entry + ".layout");
    const auto &yaw_rows = e.at("yaw_deg");
    detail::require(yaw_rows.is_array() && !yaw_rows.empty() && yaw_rows[0].is_array(), entry + ".yaw_deg: expected rows");
    const auto yaws = detail::matrix_from_rows(yaw_rows, yaw_rows[0].size(), deg_to_rad(1.0), entry + ".yaw_deg");
    return make_decision(pos, yaws);
}

/// One line per (stage, iteration) with the best feasible cost.
inline void write_history_csv(std::ostream &os, const RunReport &r) {
    os << "stage,iteration,best_cost\n";
    char buf[64];
    auto emit = [&](const std::string &stage, const std::vector<double> &h) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", h[k]);
            os << stage << ',' << k << ',' << buf << '\n';
        }
    };
    if (r.sequential) {
        emit("layout", r.sequential->layout_run.history);
        for (std::size_t j = 0; j < r.sequential->yaw_runs.size(); ++j) {
            emit("yaw_state_" + std::to_string(j), r.sequential->yaw_runs[j].history);
        }
    }
    if (r.joint) {
        emit("joint", r.joint->run.history);
    }
}

} // namespace wfopt
