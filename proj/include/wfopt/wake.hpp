#pragma once

#include "atmosphere.hpp"
#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

namespace wfopt {

/// Constants of the yawed Gaussian wake.
struct WakeParams {
    double delta_star = 0.607;
    double zeta = 0.75;
    double k = 0.0125; // wake expansion rate

    bool operator==(const WakeParams &) const = default;
};

/// A wake-generating rotor, expressed in the wind-aligned frame of one wind
/// state (x downstream, y crosswind to the left of the flow, z up).
struct WakeSource {
    double x = 0.0;
    double y = 0.0;
    double diameter = 0.0;
    double hub_height = 0.0;
    double rotor_offset = 0.0; // d_rt
    double yaw = 0.0;          // radians, relative to the incoming wind
    double ct = 0.0;           // unyawed thrust coefficient at the source inflow
    double inflow = 0.0;       // rotor-averaged inflow of the source, m/s
};

/// Point in the wind-aligned frame: x, y relative to the source rotor
/// center, z absolute height above ground.
struct WakePoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Wake cross-section at one downstream distance. Everything that depends on
/// x alone is evaluated once here so that sampling a rotor disc costs two
/// exponentials per node.
class WakeSlice {
public:
    WakeSlice() = default;

    WakeSlice(const WakeSource &src, double x, const WakeParams &params = {}) {
        if (!(x > 0.0) || src.ct <= 0.0) {
            return;
        }
        const double D = src.diameter;
        const double cos_g = std::cos(src.yaw);
        const double sin_g = std::sin(src.yaw);

        const double ct_yawed = src.ct * cos_g * cos_g;
        const double root = std::sqrt(std::max(0.0, 1.0 - ct_yawed * cos_g));
        const double beta = (1.0 + root) / (2.0 * root);
        const double sigma0 = std::sqrt(beta) / 5.0;
        sigma_yaw_ = params.k * x / (D * cos_g) + sigma0;
        sigma_z_ = params.k * x / D + sigma0;

        const double arg = 1.0 - ct_yawed * cos_g / (8.0 * sigma_yaw_ * sigma_z_);
        amplitude_ = 1.0 - std::sqrt(std::max(0.0, arg));

        // (C_T sin γ)^ζ extended as an odd function so negative yaw mirrors
        // positive yaw.
        const double delta = params.delta_star * src.ct;
        const double skew = std::copysign(std::pow(src.ct * std::abs(sin_g), params.zeta), sin_g);
        const double deflection = delta * skew * std::pow(cos_g, 2.0 * params.zeta) * std::sqrt(x / D) * D;
        offset_tail_ = src.rotor_offset * sin_g;
        offset_core_ = deflection; // Y_offset - d_rt sin γ
        lateral_width_ = D * cos_g * sigma_yaw_;
        vertical_width_ = D * sigma_z_;
        hub_height_ = src.hub_height;
    }

    bool active() const { return amplitude_ > 0.0; }
    double amplitude() const { return amplitude_; }
    double sigma_yaw() const { return sigma_yaw_; }
    double sigma_z() const { return sigma_z_; }

    /// Centre deflection Y_offset at hub height.
    double center_offset() const { return offset_core_ + offset_tail_; }

    /// Deflection of the wake centre at height z (Y_offset,z).
    double center_offset(double z) const {
        const double dz = z - hub_height_;
        return offset_core_ * std::exp(-0.5 * dz * dz / (vertical_width_ * vertical_width_)) + offset_tail_;
    }

    /// Fractional deficit Δu/u at crosswind offset y and height z. Points
    /// more than 8 widths from every possible centre position contribute
    /// below 1e-14 of the amplitude and return exactly 0.
    double fraction(double y, double z) const {
        if (amplitude_ <= 0.0) {
            return 0.0;
        }
        const double dz = z - hub_height_;
        const double ez = dz / vertical_width_;
        if (offset_core_ == 0.0) {
            const double ey = (y - offset_tail_) / lateral_width_;
            const double q = ey * ey + ez * ez;
            return q > kCutoff * kCutoff ? 0.0 : amplitude_ * std::exp(-0.5 * q);
        }
        const double lo = offset_tail_ + std::min(0.0, offset_core_);
        const double hi = offset_tail_ + std::max(0.0, offset_core_);
        const double gap = y < lo ? lo - y : (y > hi ? y - hi : 0.0);
        if (gap > kCutoff * lateral_width_ || std::abs(ez) > kCutoff) {
            return 0.0;
        }
        const double vertical = std::exp(-0.5 * ez * ez);
        const double ey = (y - (offset_core_ * vertical + offset_tail_)) / lateral_width_;
        return amplitude_ * vertical * std::exp(-0.5 * ey * ey);
    }

    /// Crosswind half-width outside of which fraction() is zero.
    double reach() const { return std::abs(offset_core_) + std::abs(offset_tail_) + kCutoff * lateral_width_; }

private:
    static constexpr double kCutoff = 8.0;

    double amplitude_ = 0.0;
    double sigma_yaw_ = 0.0;
    double sigma_z_ = 0.0;
    double offset_core_ = 0.0;
    double offset_tail_ = 0.0;
    double lateral_width_ = 1.0;
    double vertical_width_ = 1.0;
    double hub_height_ = 0.0;
};

/// Δu/u of a single yawed wake. Zero upstream of (and at) the rotor plane;
/// the near-wake square root is clamped so the result stays in [0, 1].
inline double deficit_fraction(const WakeSource &src, const WakePoint &p, const WakeParams &params = {}) {
    return WakeSlice(src, p.x, params).fraction(p.y, p.z);
}

enum class MergeRule {
    LinearFreestream, // linear sum of deficits relative to u_inf(z)
    EnergyFreestream, // root-sum-square relative to u_inf(z)
    EnergyLocal,      // root-sum-square relative to each source inflow
    LinearLocal,      // linear sum relative to each source inflow
};

inline std::string_view to_string(MergeRule rule) {
    switch (rule) {
    case MergeRule::LinearFreestream:
        return "linear_freestream";
    case MergeRule::EnergyFreestream:
        return "energy_freestream";
    case MergeRule::EnergyLocal:
        return "energy_local";
    case MergeRule::LinearLocal:
        return "linear_local";
    }
    return "linear_local";
}

inline MergeRule merge_rule_from_string(std::string_view name) {
    for (auto rule : {MergeRule::LinearFreestream, MergeRule::EnergyFreestream, MergeRule::EnergyLocal,
                      MergeRule::LinearLocal}) {
        if (to_string(rule) == name) {
            return rule;
        }
    }
    throw ValidationError("unknown merge rule '" + std::string(name) + "'");
}

/// Accumulates per-source deficits at one point under a merge rule.
class DeficitSum {
public:
    explicit DeficitSum(MergeRule rule) : rule_(rule) {}

    void add(double fraction, double source_inflow, double u_inf) {
        const bool local = rule_ == MergeRule::LinearLocal || rule_ == MergeRule::EnergyLocal;
        const double d = fraction * (local ? source_inflow : u_inf);
        if (rule_ == MergeRule::LinearLocal || rule_ == MergeRule::LinearFreestream) {
            sum_ += d;
        } else {
            sum_ += d * d;
        }
    }

    double combined() const {
        return (rule_ == MergeRule::LinearLocal || rule_ == MergeRule::LinearFreestream) ? sum_ : std::sqrt(sum_);
    }

    double speed(double u_inf) const { return std::max(0.0, u_inf - combined()); }

private:
    MergeRule rule_;
    double sum_ = 0.0;
};

/// Global (x, y) to the wind-aligned frame of flow angle `wind_dir`.
struct WindFrame {
    double fx = 1.0;
    double fy = 0.0;

    explicit WindFrame(double wind_dir) : fx(std::cos(wind_dir)), fy(std::sin(wind_dir)) {}

    double downstream(double x, double y) const { return x * fx + y * fy; }
    double crosswind(double x, double y) const { return -x * fy + y * fx; }
};

/// Merged wind speed at a global point. `sources` are already in the wind
/// frame of `wind_dir` with their inflows filled in.
inline double merged_speed(std::span<const WakeSource> sources, MergeRule rule, const ABLProfile &profile,
                           double x, double y, double z, double wind_dir, const WakeParams &params = {}) {
    const WindFrame frame(wind_dir);
    const double px = frame.downstream(x, y);
    const double py = frame.crosswind(x, y);
    const double u_inf = free_stream(profile, z);
    DeficitSum sum(rule);
    for (const auto &src : sources) {
        const double f = deficit_fraction(src, {px - src.x, py - src.y, z}, params);
        sum.add(f, src.inflow, u_inf);
    }
    return sum.speed(u_inf);
}

} // namespace wfopt
