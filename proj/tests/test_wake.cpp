#include <wfopt/wake.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace wfopt;

namespace {

constexpr double kD = 80.0;
constexpr double kHub = 70.0;

double deg(double d) { return d * std::numbers::pi / 180.0; }

WakeSource source(double ct, double yaw = 0.0, double inflow = 8.0) {
    return {0.0, 0.0, kD, kHub, 0.0, yaw, ct, inflow};
}

// Straight transcription of the deficit formula for yaw >= 0, written
// without any of the library's caching or cutoffs.
double oracle_fraction(double ct, double gamma, double d_rt, double x, double y, double z) {
    const double delta_star = 0.607, zeta = 0.75, k = 0.0125;
    const double delta = delta_star * ct;
    const double ct_star = ct * std::cos(gamma) * std::cos(gamma);
    const double s = std::sqrt(1.0 - ct_star * std::cos(gamma));
    const double beta = (1.0 + s) / (2.0 * s);
    const double sigma_yaw = k * x / (kD * std::cos(gamma)) + std::sqrt(beta) / 5.0;
    const double sigma_z = k * x / kD + std::sqrt(beta) / 5.0;
    const double y_off = kD * delta * std::pow(ct * std::sin(gamma), zeta) * std::pow(std::cos(gamma), 2 * zeta) *
                             std::sqrt(x / kD) +
                         d_rt * std::sin(gamma);
    const double y_off_z =
        (y_off - d_rt * std::sin(gamma)) * std::exp(-0.5 * std::pow(z - kHub, 2) / std::pow(kD * sigma_z, 2)) +
        d_rt * std::sin(gamma);
    const double arg = 1.0 - ct_star * std::cos(gamma) / (8.0 * sigma_yaw * sigma_z);
    const double amp = 1.0 - std::sqrt(std::max(0.0, arg));
    return amp * std::exp(-std::pow((y - y_off_z) / (kD * std::cos(gamma)), 2) / (2 * sigma_yaw * sigma_yaw) -
                          std::pow((z - kHub) / kD, 2) / (2 * sigma_z * sigma_z));
}

} // namespace

TEST(Wake, BetaAndSigmaHandValues) {
    const WakeSlice s(source(0.8), 10.0 * kD);
    const double beta = (1.0 + std::sqrt(0.2)) / (2.0 * std::sqrt(0.2));
    EXPECT_NEAR(beta, 1.618, 1e-3);
    EXPECT_NEAR(s.sigma_z(), 0.3794, 1e-4);
    EXPECT_NEAR(s.sigma_yaw(), 0.3794, 1e-4);
}

TEST(Wake, CenterlineFractionHandValue) {
    const double f = deficit_fraction(source(0.8), {10.0 * kD, 0.0, kHub});
    EXPECT_NEAR(f, 0.447, 1e-3);
}

TEST(Wake, YawOffsetHandValue) {
    const WakeSlice s(source(0.8, deg(20.0)), 5.0 * kD);
    EXPECT_NEAR(s.center_offset() / kD, 0.374, 1e-3);
}

TEST(Wake, MatchesIndependentOracleUnyawed) {
    for (double x : {2.0, 5.0, 10.0, 30.0}) {
        for (double y = -160.0; y <= 160.0; y += 20.0) {
            for (double z : {30.0, 70.0, 110.0}) {
                const double expected = oracle_fraction(0.75, 0.0, 0.0, x * kD, y, z);
                EXPECT_NEAR(deficit_fraction(source(0.75), {x * kD, y, z}), expected, 1e-12)
                    << x << " " << y << " " << z;
            }
        }
    }
}

TEST(Wake, MatchesIndependentOracleYawed) {
    for (double g : {5.0, 20.0, 30.0}) {
        for (double x : {3.0, 7.0, 15.0}) {
            for (double y = -120.0; y <= 160.0; y += 20.0) {
                for (double z : {40.0, 70.0, 95.0}) {
                    const double expected = oracle_fraction(0.8, deg(g), 0.0, x * kD, y, z);
                    EXPECT_NEAR(deficit_fraction(source(0.8, deg(g)), {x * kD, y, z}), expected, 1e-12);
                }
            }
        }
    }
}

TEST(Wake, MatchesOracleWithRotorOffset) {
    auto src = source(0.8, deg(25.0));
    src.rotor_offset = 4.0;
    for (double y = -100.0; y <= 200.0; y += 25.0) {
        for (double z : {40.0, 70.0, 100.0}) {
            EXPECT_NEAR(deficit_fraction(src, {6.0 * kD, y, z}), oracle_fraction(0.8, deg(25.0), 4.0, 6.0 * kD, y, z),
                        1e-12);
        }
    }
}

TEST(Wake, ZeroUpstreamAndAtRotorPlane) {
    EXPECT_EQ(deficit_fraction(source(0.8), {0.0, 0.0, kHub}), 0.0);
    EXPECT_EQ(deficit_fraction(source(0.8), {-50.0, 0.0, kHub}), 0.0);
}

TEST(Wake, SymmetricInYWithoutYaw) {
    for (double x : {1.0, 4.0, 12.0}) {
        for (double y : {5.0, 40.0, 90.0}) {
            const double a = deficit_fraction(source(0.8), {x * kD, y, 80.0});
            const double b = deficit_fraction(source(0.8), {x * kD, -y, 80.0});
            EXPECT_EQ(a, b);
        }
    }
}

TEST(Wake, EvenAboutDeformedCentre) {
    const WakeSlice s(source(0.8, deg(20.0)), 6.0 * kD);
    const double c = s.center_offset();
    for (double dy : {10.0, 35.0, 70.0}) {
        EXPECT_NEAR(s.fraction(c + dy, kHub), s.fraction(c - dy, kHub), 1e-14);
    }
    const double z_off = 30.0;
    EXPECT_NEAR(s.fraction(c, kHub + z_off), s.fraction(c, kHub - z_off), 1e-14);
}

TEST(Wake, DecaysFarDownstream) {
    for (double ct : {0.3, 0.6, 0.8, 0.9}) {
        EXPECT_LT(deficit_fraction(source(ct), {200.0 * kD, 0.0, kHub}), 0.01) << ct;
    }
    double prev = 1.0;
    for (double x = 5.0; x <= 200.0; x += 5.0) {
        const double f = deficit_fraction(source(0.8), {x * kD, 0.0, kHub});
        EXPECT_LT(f, prev);
        prev = f;
    }
}

TEST(Wake, OffsetGrowsWithSquareRootOfDistance) {
    auto src = source(0.8, deg(20.0));
    src.rotor_offset = 3.0;
    const double tail = src.rotor_offset * std::sin(src.yaw);
    for (double x0 : {2.0 * kD, 5.0 * kD, 11.0 * kD}) {
        const double a = WakeSlice(src, x0).center_offset() - tail;
        const double b = WakeSlice(src, 4.0 * x0).center_offset() - tail;
        EXPECT_NEAR(b, 2.0 * a, 1e-12 * std::abs(b));
    }
}

TEST(Wake, NegativeYawMirrors) {
    const WakeSlice pos(source(0.8, deg(20.0)), 5.0 * kD);
    const WakeSlice neg(source(0.8, deg(-20.0)), 5.0 * kD);
    EXPECT_NEAR(neg.center_offset(), -pos.center_offset(), 1e-12);
    EXPECT_NEAR(neg.fraction(-30.0, kHub), pos.fraction(30.0, kHub), 1e-14);
}

TEST(Wake, ClampedWithinUnitInterval) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ct(0.01, 0.99), yaw(-deg(30.0), deg(30.0)), x(1e-6, 20.0 * kD),
        y(-200.0, 200.0), z(0.0, 200.0);
    for (int i = 0; i < 20000; ++i) {
        const double f = deficit_fraction(source(ct(rng), yaw(rng)), {x(rng), y(rng), z(rng)});
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
    }
    // near wake where the square root argument goes negative
    EXPECT_EQ(deficit_fraction(source(0.5), {1e-3, 0.0, kHub}), 1.0);
}

TEST(Wake, UnyawedZeroOffsetEverywhere) {
    const WakeSlice s(source(0.8), 7.0 * kD);
    EXPECT_EQ(s.center_offset(), 0.0);
    EXPECT_EQ(s.center_offset(30.0), 0.0);
}

TEST(Wake, CutoffOmitsNegligibleMass) {
    const WakeSlice s(source(0.8, deg(15.0)), 8.0 * kD);
    for (double y = -1000.0; y <= 1000.0; y += 1.0) {
        const double f = s.fraction(y, kHub);
        const double exact = oracle_fraction(0.8, deg(15.0), 0.0, 8.0 * kD, y, kHub);
        EXPECT_NEAR(f, exact, 1e-13 * s.amplitude());
    }
}

TEST(MergeRule, NamesRoundTrip) {
    for (auto r : {MergeRule::LinearFreestream, MergeRule::EnergyFreestream, MergeRule::EnergyLocal,
                   MergeRule::LinearLocal}) {
        EXPECT_EQ(merge_rule_from_string(to_string(r)), r);
    }
    EXPECT_THROW(merge_rule_from_string("sum"), ValidationError);
}

TEST(MergedSpeed, NoSourcesGivesFreeStream) {
    const ABLProfile p{8.0, 25.0, 0.1};
    for (double z : {20.0, 70.0, 150.0}) {
        EXPECT_EQ(merged_speed({}, MergeRule::LinearLocal, p, 10.0, 20.0, z, 0.0), free_stream(p, z));
    }
}

TEST(MergedSpeed, LocalEqualsFreestreamForSingleSourceAtMatchingInflow) {
    const ABLProfile p{8.0, 25.0, 0.1};
    auto src = source(0.8, deg(10.0), free_stream(p, kHub));
    const std::vector<WakeSource> one{src};
    for (double x : {200.0, 600.0}) {
        for (double y : {-40.0, 0.0, 25.0}) {
            const double local = merged_speed(one, MergeRule::LinearLocal, p, x, y, kHub, 0.0);
            const double free = merged_speed(one, MergeRule::LinearFreestream, p, x, y, kHub, 0.0);
            EXPECT_DOUBLE_EQ(local, free);
        }
    }
}

TEST(MergedSpeed, TwoColocatedSources) {
    const ABLProfile p{8.0, 25.0, 0.0};
    const double u_bar = 7.0;
    const auto src = source(0.8, 0.0, u_bar);
    const std::vector<WakeSource> two{src, src};
    const double f = deficit_fraction(src, {1600.0, 10.0, kHub});
    ASSERT_LT(2.0 * u_bar * f, 8.0);
    EXPECT_NEAR(merged_speed(two, MergeRule::LinearLocal, p, 1600.0, 10.0, kHub, 0.0), 8.0 - 2.0 * u_bar * f, 1e-12);
    EXPECT_NEAR(merged_speed(two, MergeRule::EnergyLocal, p, 1600.0, 10.0, kHub, 0.0),
                8.0 - std::sqrt(2.0) * u_bar * f, 1e-12);
}

TEST(MergedSpeed, LinearNeverFasterThanEnergy) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(0.0, 1500.0), lat(-150.0, 150.0), ct(0.2, 0.9),
        yaw(-deg(30.0), deg(30.0)), inflow(5.0, 9.0);
    const ABLProfile p{8.0, 25.0, 0.1};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<WakeSource> sources;
        for (int s = 0; s < 4; ++s) {
            sources.push_back({pos(rng), lat(rng), kD, kHub, 0.0, yaw(rng), ct(rng), inflow(rng)});
        }
        const double x = 1600.0 + pos(rng), y = lat(rng), z = kHub + lat(rng) / 5.0;
        for (auto [lin, en] : {std::pair{MergeRule::LinearLocal, MergeRule::EnergyLocal},
                               std::pair{MergeRule::LinearFreestream, MergeRule::EnergyFreestream}}) {
            EXPECT_LE(merged_speed(sources, lin, p, x, y, z, 0.0), merged_speed(sources, en, p, x, y, z, 0.0));
        }
    }
}

TEST(MergedSpeed, NeverNegative) {
    const ABLProfile p{8.0, 25.0, 0.1};
    std::vector<WakeSource> stack(30, source(0.95, 0.0, 12.0));
    EXPECT_EQ(merged_speed(stack, MergeRule::LinearLocal, p, 1.0, 0.0, kHub, 0.0), 0.0);
}

TEST(MergedSpeed, RotatesIntoWindFrame) {
    // flow toward +y: a source at the origin wakes points with larger y
    const ABLProfile p{8.0, 25.0, 0.0};
    const std::vector<WakeSource> one{source(0.8)};
    const double flow = std::numbers::pi / 2.0;
    EXPECT_LT(merged_speed(one, MergeRule::LinearLocal, p, 0.0, 400.0, kHub, flow), 8.0);
    EXPECT_EQ(merged_speed(one, MergeRule::LinearLocal, p, 400.0, 0.0, kHub, flow), 8.0);
}
