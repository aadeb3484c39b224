#include "support.hpp"

#include <wfopt/problems.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace wfopt;
using wfopt::test::layout;
using wfopt::test::single_state_case;

namespace {

double deg(double d) { return d * std::numbers::pi / 180.0; }

FarmCase small_case() {
    FarmCase c;
    c.turbines = 4;
    c.turbine = wfopt::test::v80();
    c.bounds = {0.0, 800.0, 0.0, 800.0};
    c.rose.states = {{270.0, {8.0, 25.0, 0.1}, 0.6}, {0.0, {8.0, 25.0, 0.1}, 0.4}};
    return c;
}

RunSettings small_settings(std::uint64_t seed = 3) {
    RunSettings s;
    s.swarm.particles = 16;
    s.swarm.max_iterations = 15;
    s.swarm.seed = seed;
    s.swarm.threads = 1;
    return s;
}

} // namespace

TEST(Cost, ReciprocalWithSentinel) {
    EXPECT_DOUBLE_EQ(cost_from_aep(4.0), 0.25);
    EXPECT_EQ(cost_from_aep(0.0), kDegenerateCost);
    EXPECT_EQ(cost_from_aep(-1.0), kDegenerateCost);
}

TEST(Penalty, QuadraticInViolationDepth) {
    const auto X = layout({{0, 0}, {40, 0}, {500, 0}});
    EXPECT_DOUBLE_EQ(spacing_penalty(X.positions(), 80.0), 0.25);
    EXPECT_EQ(spacing_penalty(layout({{0, 0}, {80, 0}}).positions(), 80.0), 0.0);
}

TEST(Penalty, LambdaScalesWithIdealCost) {
    const auto c = small_case();
    EXPECT_DOUBLE_EQ(penalty_lambda(c, 10.0), 10.0 / ideal_aep(c));
}

TEST(Penalty, FeasibilityFlagTracksSpacing) {
    const auto c = small_case();
    const double lambda = penalty_lambda(c, 10.0);
    JointCost fn(c, lambda);
    auto X = layout({{0, 0}, {400, 0}, {0, 400}, {400, 400}}, 2);
    const auto ok = fn(X.matrix());
    EXPECT_TRUE(ok.feasible);
    EXPECT_DOUBLE_EQ(ok.cost, cost(c, X));
    X.x(1) = 30.0;
    const auto bad = fn(X.matrix());
    EXPECT_FALSE(bad.feasible);
    EXPECT_GT(bad.cost, ok.cost);
}

TEST(Checkerboard, WF1Grid) {
    FarmCase c;
    c.turbines = 25;
    c.bounds = {0.0, 1600.0, 0.0, 1600.0};
    const auto p = checkerboard_layout(c);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_DOUBLE_EQ(p(i, 0), 400.0 * static_cast<double>(i % 5));
        EXPECT_DOUBLE_EQ(p(i, 1), 400.0 * static_cast<double>(i / 5));
    }
}

TEST(Checkerboard, NonSquareCountsStayInside) {
    FarmCase c;
    c.bounds = {0.0, 1000.0, -200.0, 300.0};
    for (std::size_t n : {1u, 2u, 7u, 10u}) {
        c.turbines = n;
        const auto p = checkerboard_layout(c);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_TRUE(c.bounds.contains(p(i, 0), p(i, 1)));
        }
    }
}

TEST(YawCost, PowerOfOneState) {
    const auto c = small_case();
    const auto X = layout({{0, 0}, {400, 0}, {0, 400}, {400, 400}}, 2);
    StateYawCost fn(c, X.positions(), 1);
    const Matrix zero(4, 1);
    EXPECT_DOUBLE_EQ(fn.power(zero), evaluate_state(c, X, 1).farm_power);
}

TEST(KeepGreedy, ReplacesHarmfulColumns) {
    const auto c = small_case();
    auto X = layout({{0, 0}, {400, 0}, {0, 400}, {400, 400}}, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        X.yaw(i, 0) = deg(i % 2 == 0 ? 0.0 : 30.0); // yaws the downstream row: pure loss
    }
    const double before = aep(c, X);
    EXPECT_EQ(keep_greedy_where_better(c, X), 1u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(X.yaw(i, 0), 0.0);
    }
    EXPECT_GT(aep(c, X), before);
}

TEST(Sequential, OrderingAndFeasibility) {
    const auto c = small_case();
    const auto r = optimize_sequential(c, small_settings());
    EXPECT_GE(r.s_ayc, r.s_theta);
    EXPECT_TRUE(spacing_violations(r.X.positions(), c.spacing()).empty());
    EXPECT_EQ(r.yaw_runs.size(), 2u);
    EXPECT_DOUBLE_EQ(r.s_theta, aep(c, r.X.greedy()));
    EXPECT_GE(r.s_theta, aep(c, [&] {
                  DecisionMatrix b(4, 2);
                  b.set_positions(checkerboard_layout(c));
                  return b;
              }()));
    EXPECT_EQ(r.evaluations(), r.layout_run.evaluations + r.yaw_runs[0].evaluations + r.yaw_runs[1].evaluations);
}

TEST(Sequential, SingleTurbineKeepsZeroYaw) {
    auto c = single_state_case(1);
    c.bounds = {0.0, 100.0, 0.0, 100.0};
    const auto r = optimize_sequential(c, small_settings());
    EXPECT_EQ(r.s_ayc, r.s_theta);
    EXPECT_EQ(r.X.yaw(0, 0), 0.0);
}

TEST(Sequential, Deterministic) {
    const auto c = small_case();
    const auto a = optimize_sequential(c, small_settings(5));
    const auto b = optimize_sequential(c, small_settings(5));
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.s_ayc, b.s_ayc);
}

TEST(Joint, SeedInjectionGuarantees) {
    const auto c = small_case();
    const auto seq = optimize_sequential(c, small_settings());
    const auto joint = optimize_joint(c, small_settings(), &seq.X);
    EXPECT_GE(joint.j_ayc, seq.s_ayc);
    EXPECT_GE(joint.j_ayc, joint.j_theta);
    EXPECT_TRUE(spacing_violations(joint.X.positions(), c.spacing()).empty());
}

TEST(Joint, UnseededStillFeasible) {
    const auto c = small_case();
    const auto joint = optimize_joint(c, small_settings());
    EXPECT_GE(joint.j_ayc, joint.j_theta);
    EXPECT_TRUE(spacing_violations(joint.X.positions(), c.spacing()).empty());
    EXPECT_EQ(joint.X.states(), 2u);
}

TEST(Report, DirectionBreakdownSumsToAep) {
    const auto c = small_case();
    auto X = layout({{0, 0}, {400, 50}, {0, 400}, {400, 400}}, 2);
    X.yaw(0, 0) = deg(12.0);
    const auto parts = direction_breakdown(c, X);
    EXPECT_NEAR(std::accumulate(parts.begin(), parts.end(), 0.0) / aep(c, X), 1.0, 1e-12);
}

TEST(Report, ImprovementPercent) {
    EXPECT_NEAR(improvement_percent(103.73, 100.0), 3.73, 1e-12);
    EXPECT_DOUBLE_EQ(improvement_percent(100.0, 100.0), 0.0);
}

TEST(Report, DirectionGroupsShareOfMeans) {
    std::vector<DirectionRow> rows;
    const double speeds[] = {8, 8, 8, 8, 8, 9, 11, 9};
    const double probs[] = {0.1, 0.1, 0.1, 0.1, 0.1, 0.15, 0.2, 0.15};
    const double energy[] = {1, 1, 1, 1, 1, 3, 8, 5};
    for (int j = 0; j < 8; ++j) {
        rows.push_back({45.0 * j, speeds[j], probs[j], 0, 0, 0, energy[j]});
    }
    const auto groups = group_directions(rows);
    ASSERT_EQ(groups.size(), 3u);
    EXPECT_EQ(groups[0].u_ref, 11.0);
    EXPECT_EQ(groups[0].states, (std::vector<std::size_t>{6}));
    EXPECT_DOUBLE_EQ(groups[1].mean.j_ayc, 4.0);
    EXPECT_DOUBLE_EQ(groups[0].j_ayc_share, 8.0 / 13.0);
    EXPECT_DOUBLE_EQ(groups[2].j_ayc_share, 1.0 / 13.0);
}

TEST(Report, DiagnosticsSigns) {
    const auto c = single_state_case(2);
    auto X = layout({{0.0, 0.0}, {400.0, 0.0}});
    X.yaw(0, 0) = deg(25.0);
    const auto d = power_diagnostics(c, X);
    EXPECT_EQ(d.up_count, 1u);
    EXPECT_EQ(d.down_count, 1u);
    EXPECT_LT(d.dp_up, 0.0);
    EXPECT_GT(d.dp_down, 0.0);
    EXPECT_GT(d.p_up, d.p_down);
    EXPECT_GT(d.grad_up, 0.0);
}
