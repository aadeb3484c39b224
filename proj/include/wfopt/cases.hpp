#pragma once

#include "atmosphere.hpp"
#include "error.hpp"
#include "farm.hpp"
#include "optimizer.hpp"
#include "problems.hpp"
#include "turbine.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wfopt {

#ifndef WFOPT_DEFAULT_DATA_DIR
#define WFOPT_DEFAULT_DATA_DIR "data"
#endif

enum class RunMode { Sequential, Joint, Both };

inline std::string_view to_string(RunMode m) {
    switch (m) {
    case RunMode::Sequential:
        return "sequential";
    case RunMode::Joint:
        return "joint";
    case RunMode::Both:
        return "both";
    }
    return "both";
}

inline RunMode run_mode_from_string(std::string_view s) {
    if (s == "sequential") {
        return RunMode::Sequential;
    }
    if (s == "joint") {
        return RunMode::Joint;
    }
    if (s == "both") {
        return RunMode::Both;
    }
    throw ValidationError("unknown mode '" + std::string(s) + "' (expected sequential, joint or both)");
}

/// Everything needed to reproduce a run: the farm, the swarm settings and
/// which pipelines to execute.
struct CaseConfig {
    std::string name;
    std::string turbine_ref; // data-file name (e.g. "vestas_v80") or a path
    FarmCase farm;
    RunSettings run;
    RunMode mode = RunMode::Both;

    bool operator==(const CaseConfig &) const = default;
};

/// Directory holding `turbines/`; `WFOPT_DATA_DIR` overrides the build-time
/// default.
inline std::filesystem::path data_dir() {
    if (const char *env = std::getenv("WFOPT_DATA_DIR")) {
        return env;
    }
    return WFOPT_DEFAULT_DATA_DIR;
}

/// Resolves a turbine reference: anything that looks like a path is taken
/// relative to `base`, a bare name is looked up under data_dir()/turbines.
inline TurbineSpec resolve_turbine(const std::string &ref, const std::filesystem::path &base = {}) {
    const bool pathlike = ref.find('/') != std::string::npos || ref.ends_with(".csv") || ref.ends_with(".json");
    if (pathlike) {
        std::filesystem::path p(ref);
        if (p.is_relative() && !base.empty()) {
            p = base / p;
        }
        return load_turbine(p);
    }
    return load_turbine(data_dir() / "turbines" / ref);
}

inline const std::array<std::string_view, 6> &builtin_names() {
    static const std::array<std::string_view, 6> names{"wf1", "wf2", "wf3", "wf4", "wf1_u6", "wf1_v112"};
    return names;
}

/// The reference cases: 25 (or 36) turbines in a square domain whose side
/// is (k - 1) grid intervals of 5D or 6D, under an 8-direction rose.
inline CaseConfig builtin(std::string_view name) {
    CaseConfig cfg;
    cfg.name = std::string(name);
    cfg.turbine_ref = "vestas_v80";
    double side = 1600.0;
    std::size_t n = 25;
    double u_ref = 8.0;
    bool uneven = false;

    if (name == "wf1") {
    } else if (name == "wf2") {
        side = 1920.0;
    } else if (name == "wf3") {
        side = 2400.0;
        n = 36;
    } else if (name == "wf4") {
        uneven = true;
    } else if (name == "wf1_u6") {
        u_ref = 6.0;
    } else if (name == "wf1_v112") {
        cfg.turbine_ref = "vestas_v112";
    } else {
        throw ValidationError("unknown builtin case '" + std::string(name) + "'");
    }

    auto &f = cfg.farm;
    f.turbine = resolve_turbine(cfg.turbine_ref);
    f.turbines = n;
    f.bounds = {0.0, side, 0.0, side};
    f.rose = uneven ? wf4_rose() : uniform_rose(8, u_ref);
    f.min_spacing = f.turbine.rotor_diameter;
    validate(f);
    return cfg;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json &obj, const std::string &path, std::initializer_list<std::string_view> allowed) {
    for (const auto &[key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ValidationError(path + "." + key + ": unknown key");
        }
    }
}

template <class T>
T read_key(const json &obj, const std::string &path, const char *key, const T &fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &) {
        throw ValidationError(path + "." + key + ": wrong type");
    }
}

template <class T>
T require_key(const json &obj, const std::string &path, const char *key) {
    if (!obj.contains(key)) {
        throw ValidationError(path + "." + key + ": missing");
    }
    return read_key<T>(obj, path, key, T{});
}

/// Absent or null means "use the default".
inline std::optional<double> read_optional(const json &obj, const std::string &path, const char *key) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    return read_key<double>(obj, path, key, 0.0);
}

inline const json &object_at(const json &obj, const std::string &path, const char *key) {
    static const json empty = json::object();
    if (!obj.contains(key)) {
        return empty;
    }
    const auto &v = obj.at(key);
    if (!v.is_object()) {
        throw ValidationError(path + "." + key + ": expected an object");
    }
    return v;
}

// 30 rather than 29.999999999999996 when that still parses back to the same radians
inline double tidy_degrees(double rad) {
    const double d = rad_to_deg(rad);
    const double r = std::round(d * 1e9) / 1e9;
    return deg_to_rad(r) == rad ? r : d;
}

} // namespace detail

/// Serialises a case; units in the file are meters and degrees.
inline nlohmann::json to_json(const CaseConfig &cfg) {
    using nlohmann::json;
    const auto &f = cfg.farm;
    json rose = json::array();
    for (const auto &s : f.rose.states) {
        rose.push_back({{"direction_deg", s.bearing_deg}, {"u_ref", s.profile.u_ref}, {"probability", s.probability}});
    }
    const auto &first = f.rose.states.front().profile;
    const auto &o = cfg.run.swarm;
    return {
        {"name", cfg.name},
        {"mode", to_string(cfg.mode)},
        {"farm",
         {{"turbine", cfg.turbine_ref},
          {"turbines", f.turbines},
          {"bounds", {{"x_min", f.bounds.x_min}, {"x_max", f.bounds.x_max}, {"y_min", f.bounds.y_min}, {"y_max", f.bounds.y_max}}},
          {"min_spacing", f.spacing()},
          {"rho", f.rho},
          {"merge_rule", to_string(f.merge_rule)},
          {"yaw_power_exponent", f.yaw_power_exponent},
          {"rotor_grid", {{"rings", f.rotor_rings}, {"sectors", f.rotor_sectors}}},
          {"wake", {{"delta_star", f.wake.delta_star}, {"zeta", f.wake.zeta}, {"k", f.wake.k}}},
          {"abl", {{"z_ref", first.z_ref}, {"alpha", first.alpha}}},
          {"wind_rose", rose}}},
        {"optimizer",
         {{"algorithm", to_string(cfg.run.algorithm)},
          {"particles", o.particles},
          {"iterations", o.max_iterations},
          {"max_evaluations", o.max_evaluations},
          {"seed", o.seed},
          {"c1", o.c1 ? json(*o.c1) : json(nullptr)},
          {"c2", o.c2 ? json(*o.c2) : json(nullptr)},
          {"omega", o.omega},
          {"omega_range", {o.omega_lo, o.omega_hi}},
          {"subpop_sizes", o.subpop_sizes},
          {"penalty_lambda_factor", o.penalty_lambda_factor},
          {"vmax_fraction", o.vmax_fraction},
          {"yaw_max_deg", detail::tidy_degrees(cfg.run.yaw_max)}}},
    };
}

/// Builds and fully validates a case from JSON. Missing keys take the
/// documented defaults; errors carry the key path (e.g.
/// `case.farm.bounds.x_max`). Relative turbine paths resolve against `base`.
inline CaseConfig case_from_json(const nlohmann::json &j, const std::filesystem::path &base = {}) {
    using namespace detail;
    if (!j.is_object()) {
        throw ValidationError("case: expected a JSON object");
    }
    reject_unknown(j, "case", {"name", "mode", "farm", "optimizer"});
    CaseConfig cfg;
    cfg.name = read_key<std::string>(j, "case", "name", "custom");
    cfg.mode = run_mode_from_string(read_key<std::string>(j, "case", "mode", "both"));

    const auto &farm = object_at(j, "case", "farm");
    const std::string fp = "case.farm";
    reject_unknown(farm, fp,
                   {"turbine", "turbines", "bounds", "min_spacing", "rho", "merge_rule", "yaw_power_exponent",
                    "rotor_grid", "wake", "abl", "wind_rose"});
    auto &f = cfg.farm;
    cfg.turbine_ref = read_key<std::string>(farm, fp, "turbine", "vestas_v80");
    try {
        f.turbine = resolve_turbine(cfg.turbine_ref, base);
    } catch (const ValidationError &e) {
        throw ValidationError(fp + ".turbine: " + e.what());
    }
    const auto turbines = read_key<long long>(farm, fp, "turbines", 25);
    require(turbines >= 1, fp + ".turbines: must be at least 1");
    f.turbines = static_cast<std::size_t>(turbines);

    const auto &b = object_at(farm, fp, "bounds");
    reject_unknown(b, fp + ".bounds", {"x_min", "x_max", "y_min", "y_max"});
    f.bounds = {read_key<double>(b, fp + ".bounds", "x_min", 0.0), read_key<double>(b, fp + ".bounds", "x_max", 1600.0),
                read_key<double>(b, fp + ".bounds", "y_min", 0.0), read_key<double>(b, fp + ".bounds", "y_max", 1600.0)};
    require(f.bounds.x_min < f.bounds.x_max, fp + ".bounds: x_min must be below x_max");
    require(f.bounds.y_min < f.bounds.y_max, fp + ".bounds: y_min must be below y_max");

    f.min_spacing = read_key<double>(farm, fp, "min_spacing", f.turbine.rotor_diameter);
    require(f.min_spacing >= f.turbine.rotor_diameter,
            fp + ".min_spacing: must be at least the rotor diameter (" + std::to_string(f.turbine.rotor_diameter) + " m)");
    f.rho = read_key<double>(farm, fp, "rho", kStandardAirDensity);
    require(f.rho > 0.0, fp + ".rho: must be positive");
    try {
        f.merge_rule = merge_rule_from_string(read_key<std::string>(farm, fp, "merge_rule", "linear_local"));
    } catch (const ValidationError &e) {
        throw ValidationError(fp + ".merge_rule: " + e.what());
    }
    f.yaw_power_exponent = read_key<double>(farm, fp, "yaw_power_exponent", 1.0);
    require(f.yaw_power_exponent >= 0.0, fp + ".yaw_power_exponent: must be non-negative");

    const auto &grid = object_at(farm, fp, "rotor_grid");
    reject_unknown(grid, fp + ".rotor_grid", {"rings", "sectors"});
    f.rotor_rings = read_key<int>(grid, fp + ".rotor_grid", "rings", 10);
    f.rotor_sectors = read_key<int>(grid, fp + ".rotor_grid", "sectors", 20);
    require(f.rotor_rings >= 1 && f.rotor_sectors >= 1, fp + ".rotor_grid: rings and sectors must be >= 1");

    const auto &wake = object_at(farm, fp, "wake");
    reject_unknown(wake, fp + ".wake", {"delta_star", "zeta", "k"});
    f.wake = {read_key<double>(wake, fp + ".wake", "delta_star", 0.607), read_key<double>(wake, fp + ".wake", "zeta", 0.75),
              read_key<double>(wake, fp + ".wake", "k", 0.0125)};

    const auto &abl = object_at(farm, fp, "abl");
    reject_unknown(abl, fp + ".abl", {"z_ref", "alpha"});
    const double z_ref = read_key<double>(abl, fp + ".abl", "z_ref", kDefaultReferenceHeight);
    const double alpha = read_key<double>(abl, fp + ".abl", "alpha", kDefaultShearExponent);

    if (farm.contains("wind_rose")) {
        const auto &rose = farm.at("wind_rose");
        require(rose.is_array() && !rose.empty(), fp + ".wind_rose: expected a non-empty array");
        for (std::size_t k = 0; k < rose.size(); ++k) {
            const std::string rp = fp + ".wind_rose[" + std::to_string(k) + "]";
            require(rose[k].is_object(), rp + ": expected an object");
            reject_unknown(rose[k], rp, {"direction_deg", "u_ref", "probability"});
            f.rose.states.push_back({require_key<double>(rose[k], rp, "direction_deg"),
                                     {require_key<double>(rose[k], rp, "u_ref"), z_ref, alpha},
                                     require_key<double>(rose[k], rp, "probability")});
        }
    } else {
        f.rose = uniform_rose(8, 8.0, z_ref, alpha);
    }
    try {
        validate(f.rose);
    } catch (const ValidationError &e) {
        throw ValidationError(fp + ".wind_rose: " + e.what());
    }

    const auto &opt = object_at(j, "case", "optimizer");
    const std::string op = "case.optimizer";
    reject_unknown(opt, op,
                   {"algorithm", "particles", "iterations", "max_evaluations", "seed", "c1", "c2", "omega",
                    "omega_range", "subpop_sizes", "penalty_lambda_factor", "vmax_fraction", "yaw_max_deg"});
    auto &o = cfg.run.swarm;
    try {
        cfg.run.algorithm = algorithm_from_string(read_key<std::string>(opt, op, "algorithm", "agldpso"));
    } catch (const ValidationError &e) {
        throw ValidationError(op + ".algorithm: " + e.what());
    }
    o.particles = read_key<std::size_t>(opt, op, "particles", o.particles);
    o.max_iterations = read_key<std::size_t>(opt, op, "iterations", o.max_iterations);
    o.max_evaluations = read_key<std::size_t>(opt, op, "max_evaluations", o.max_evaluations);
    o.seed = read_key<std::uint64_t>(opt, op, "seed", o.seed);
    o.c1 = read_optional(opt, op, "c1");
    o.c2 = read_optional(opt, op, "c2");
    o.omega = read_key<double>(opt, op, "omega", o.omega);
    const auto range = read_key<std::vector<double>>(opt, op, "omega_range", {o.omega_lo, o.omega_hi});
    require(range.size() == 2, op + ".omega_range: expected [lo, hi]");
    o.omega_lo = range[0];
    o.omega_hi = range[1];
    o.subpop_sizes = read_key<std::vector<std::size_t>>(opt, op, "subpop_sizes", o.subpop_sizes);
    o.penalty_lambda_factor = read_key<double>(opt, op, "penalty_lambda_factor", o.penalty_lambda_factor);
    require(o.penalty_lambda_factor > 0.0, op + ".penalty_lambda_factor: must be positive");
    o.vmax_fraction = read_key<double>(opt, op, "vmax_fraction", o.vmax_fraction);
    const double yaw_max_deg = read_key<double>(opt, op, "yaw_max_deg", 30.0);
    require(yaw_max_deg > 0.0 && yaw_max_deg < 90.0, op + ".yaw_max_deg: must lie in (0, 90)");
    cfg.run.yaw_max = deg_to_rad(yaw_max_deg);
    try {
        validate(o);
    } catch (const ValidationError &e) {
        throw ValidationError(op + ": " + e.what());
    }

    validate(f);
    return cfg;
}

inline CaseConfig load_case(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open case file " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return case_from_json(j, path.parent_path());
}

inline void save_case(const CaseConfig &cfg, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write case file " + path.string());
    }
    out << to_json(cfg).dump(2) << '\n';
}

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
inline std::string case_hash(const CaseConfig &cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    static const char *digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k, h >>= 4) {
        out[static_cast<std::size_t>(k)] = digits[h & 0xF];
    }
    return out;
}

/// A builtin name or a path to a case file.
inline CaseConfig case_by_name_or_path(const std::string &ref) {
    for (auto n : builtin_names()) {
        if (ref == n) {
            return builtin(ref);
        }
    }
    return load_case(ref);
}

} // namespace wfopt
