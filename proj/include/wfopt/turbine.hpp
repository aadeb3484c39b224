#pragma once

#include "error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace wfopt {

inline constexpr double kStandardAirDensity = 1.225; // kg/m^3
inline constexpr double kBetzLimit = 16.0 / 27.0;

/// Tabulated turbine performance. All arrays align with `speed`.
struct PerformanceCurve {
    std::vector<double> speed; // m/s, strictly increasing
    std::vector<double> power; // W
    std::vector<double> cp;
    std::vector<double> ct;

    bool operator==(const PerformanceCurve &) const = default;
};

enum class CurveQuantity { Power, Cp, Ct };

struct TurbineSpec {
    std::string name;
    double rotor_diameter = 0.0; // m
    double hub_height = 0.0;     // m
    double rotor_offset = 0.0;   // m, rotor center to hub center along the shaft
    double rated_power = 0.0;    // W
    double cut_in = 0.0;         // m/s
    double cut_out = 0.0;        // m/s
    PerformanceCurve curve;

    double rotor_radius() const { return 0.5 * rotor_diameter; }
    double rotor_area() const { return std::numbers::pi * rotor_diameter * rotor_diameter / 4.0; }

    /// True when the rotor spins and therefore sheds a wake.
    bool operating(double u) const { return u >= cut_in && u <= cut_out; }

    bool operator==(const TurbineSpec &) const = default;
};

namespace detail {

inline double lerp_table(const std::vector<double> &xs, const std::vector<double> &ys, double x) {
    if (x <= xs.front()) {
        return ys.front();
    }
    if (x >= xs.back()) {
        return ys.back();
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

} // namespace detail

/// Piecewise-linear lookup of a tabulated quantity at inflow speed u >= 0.
///
/// Outside [cut_in, cut_out] power and C_P are zero. Below cut-in C_T holds
/// its first tabulated value; above cut-out it is zero. Whether a wake is
/// shed at all is decided by TurbineSpec::operating.
inline double interp(const TurbineSpec &spec, CurveQuantity which, double u) {
    const auto &c = spec.curve;
    if (u > spec.cut_out) {
        return 0.0;
    }
    if (u < spec.cut_in) {
        return which == CurveQuantity::Ct ? c.ct.front() : 0.0;
    }
    switch (which) {
    case CurveQuantity::Power:
        return detail::lerp_table(c.speed, c.power, u);
    case CurveQuantity::Cp:
        return detail::lerp_table(c.speed, c.cp, u);
    case CurveQuantity::Ct:
        return detail::lerp_table(c.speed, c.ct, u);
    }
    return 0.0;
}

/// Aerodynamic power ½ρ C_P(u) u³ A.
inline double aero_power(const TurbineSpec &spec, double u, double rho) {
    return 0.5 * rho * interp(spec, CurveQuantity::Cp, u) * u * u * u * spec.rotor_area();
}

/// Checks geometry and curve invariants; throws ValidationError naming the
/// first violation. The C_P/power consistency check uses `rho`.
inline void validate(const TurbineSpec &spec, double rho = kStandardAirDensity) {
    using detail::require;
    const std::string who = "turbine '" + spec.name + "': ";
    require(spec.rotor_diameter > 0.0, who + "D must be positive");
    require(spec.hub_height > spec.rotor_diameter / 2.0, who + "z_hub must exceed D/2");
    require(spec.rotor_offset >= 0.0, who + "d_rt must be non-negative");
    require(spec.cut_in < spec.cut_out, who + "cut_in must be below cut_out");
    require(spec.rated_power > 0.0, who + "rated_power must be positive");

    const auto &c = spec.curve;
    require(c.speed.size() >= 2, who + "curve needs at least two samples");
    require(c.power.size() == c.speed.size() && c.cp.size() == c.speed.size() &&
                c.ct.size() == c.speed.size(),
            who + "curve columns have different lengths");
    for (std::size_t i = 0; i < c.speed.size(); ++i) {
        const std::string at = who + "row " + std::to_string(i) + " (u=" + std::to_string(c.speed[i]) + "): ";
        require(c.speed[i] >= 0.0, at + "negative speed");
        if (i > 0) {
            require(c.speed[i] > c.speed[i - 1], at + "speeds must be strictly increasing");
        }
        require(c.power[i] >= 0.0, at + "negative power");
        require(c.cp[i] >= 0.0 && c.cp[i] <= kBetzLimit, at + "C_P outside [0, 16/27]");
        require(c.ct[i] > 0.0 && c.ct[i] < 1.0, at + "C_T outside (0, 1)");
        const double u = c.speed[i];
        if (u < spec.cut_in || u > spec.cut_out) {
            require(c.power[i] == 0.0, at + "power must be zero outside [cut_in, cut_out]");
            continue;
        }
        const double aero = 0.5 * rho * c.cp[i] * u * u * u * spec.rotor_area();
        const double tol = 0.02 * c.power[i] + 1.0; // 1 W floor for zero-power rows
        require(std::abs(aero - c.power[i]) <= tol, at + "C_P inconsistent with power (>2%)");
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return cells;
}

inline double parse_double(const std::string &text, const std::string &context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw ParseError(context + ": trailing characters in '" + text + "'");
        }
        return v;
    } catch (const std::invalid_argument &) {
        throw ParseError(context + ": not a number: '" + text + "'");
    } catch (const std::out_of_range &) {
        throw ParseError(context + ": number out of range: '" + text + "'");
    }
}

inline std::filesystem::path turbine_stem(std::filesystem::path path) {
    if (path.extension() == ".csv" || path.extension() == ".json") {
        path.replace_extension();
    }
    return path;
}

} // namespace detail

/// Loads `<stem>.csv` (header `u,power,cp,ct`) and its `<stem>.json`
/// sidecar. `path` may name either file or the bare stem.
inline TurbineSpec load_turbine(const std::filesystem::path &path) {
    const auto stem = detail::turbine_stem(path);
    auto csv_path = stem;
    csv_path += ".csv";
    auto json_path = stem;
    json_path += ".json";

    std::ifstream meta_in(json_path);
    if (!meta_in) {
        throw ParseError("cannot open turbine sidecar " + json_path.string());
    }
    TurbineSpec spec;
    try {
        const auto meta = nlohmann::json::parse(meta_in);
        spec.name = meta.at("name").get<std::string>();
        spec.rotor_diameter = meta.at("D").get<double>();
        spec.hub_height = meta.at("z_hub").get<double>();
        spec.rotor_offset = meta.value("d_rt", 0.0);
        spec.rated_power = meta.at("rated_power").get<double>();
        spec.cut_in = meta.at("cut_in").get<double>();
        spec.cut_out = meta.at("cut_out").get<double>();
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(json_path.string() + ": " + e.what());
    }

    std::ifstream in(csv_path);
    if (!in) {
        throw ParseError("cannot open turbine curve " + csv_path.string());
    }
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) != std::vector<std::string>{"u", "power", "cp", "ct"}) {
        throw ParseError(csv_path.string() + ": expected header 'u,power,cp,ct'");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        const std::string ctx = csv_path.string() + ":" + std::to_string(line_no);
        if (cells.size() != 4) {
            throw ParseError(ctx + ": expected 4 columns");
        }
        spec.curve.speed.push_back(detail::parse_double(cells[0], ctx));
        spec.curve.power.push_back(detail::parse_double(cells[1], ctx));
        spec.curve.cp.push_back(detail::parse_double(cells[2], ctx));
        spec.curve.ct.push_back(detail::parse_double(cells[3], ctx));
    }
    validate(spec);
    return spec;
}

/// Writes the CSV + JSON pair read by load_turbine. Numbers are written with
/// full round-trip precision.
inline void save_turbine(const TurbineSpec &spec, const std::filesystem::path &path) {
    const auto stem = detail::turbine_stem(path);
    auto csv_path = stem;
    csv_path += ".csv";
    auto json_path = stem;
    json_path += ".json";

    const nlohmann::json meta = {{"name", spec.name},           {"D", spec.rotor_diameter},
                                 {"z_hub", spec.hub_height},    {"d_rt", spec.rotor_offset},
                                 {"rated_power", spec.rated_power}, {"cut_in", spec.cut_in},
                                 {"cut_out", spec.cut_out}};
    std::ofstream(json_path) << meta.dump(2) << '\n';

    std::ofstream out(csv_path);
    out.precision(17);
    out << "u,power,cp,ct\n";
    const auto &c = spec.curve;
    for (std::size_t i = 0; i < c.speed.size(); ++i) {
        out << c.speed[i] << ',' << c.power[i] << ',' << c.cp[i] << ',' << c.ct[i] << '\n';
    }
}

} // namespace wfopt
