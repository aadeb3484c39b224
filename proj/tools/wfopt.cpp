// wfopt command-line tool: evaluate layouts, run the optimization
// pipelines, export flow fields and inspect the builtin cases.

#include <wfopt/cases.hpp>
#include <wfopt/farm.hpp>
#include <wfopt/report.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef WFOPT_VERSION
#define WFOPT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wfopt;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string cell(std::optional<double> v) { return v ? fixed2(*v) : std::string("-"); }

std::string pad(const std::string &s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

void write_json(const fs::path &p, const json &j) {
    std::ofstream out(p);
    if (!out) {
        throw ValidationError("cannot write " + p.string());
    }
    out << j.dump(2) << '\n';
}

/// Written with status "running" before any work and rewritten at the end.
class Manifest {
public:
    Manifest(fs::path dir, std::string command, const CaseConfig &cfg)
        : path_(dir / "manifest.json"), start_(std::chrono::steady_clock::now()) {
        doc_ = {{"command", std::move(command)},
                {"case", cfg.name},
                {"case_hash", case_hash(cfg)},
                {"seed", cfg.run.swarm.seed},
                {"threads", cfg.run.swarm.threads == 0 ? default_thread_count() : cfg.run.swarm.threads},
                {"version", WFOPT_VERSION},
                {"started_at", utc_now()},
                {"finished_at", nullptr},
                {"wall_time_s", nullptr},
                {"status", "running"},
                {"outputs", json::array()}};
        write_json(path_, doc_);
    }

    void add_output(const fs::path &p) { doc_["outputs"].push_back(p.string()); }

    void finish(const std::string &status) {
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
        doc_["finished_at"] = utc_now();
        doc_["wall_time_s"] = wall.count();
        doc_["status"] = status;
        write_json(path_, doc_);
    }

private:
    fs::path path_;
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

Matrix read_numeric_csv(const fs::path &path, std::size_t expected_cols, const std::string &what) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + what + " file " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        // a non-numeric first line is a header
        if (rows.empty() && lineno == 1) {
            try {
                detail::parse_double(fields.front(), "");
            } catch (const ValidationError &) {
                continue;
            }
        }
        std::vector<double> row;
        for (const auto &f : fields) {
            row.push_back(detail::parse_double(f, path.string() + ":" + std::to_string(lineno)));
        }
        rows.push_back(std::move(row));
    }
    detail::require(!rows.empty(), what + " file " + path.string() + " has no rows");
    const std::size_t cols = expected_cols ? expected_cols : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        detail::require(rows[i].size() == cols, what + " file " + path.string() + ": row " + std::to_string(i + 1) +
                                                    " has " + std::to_string(rows[i].size()) + " columns, expected " +
                                                    std::to_string(cols));
        for (std::size_t k = 0; k < cols; ++k) {
            m(i, k) = rows[i][k];
        }
    }
    return m;
}

json load_json_file(const fs::path &p) {
    std::ifstream in(p);
    if (!in) {
        throw ParseError("cannot open " + p.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

/// Layout (and optionally yaw) for `evaluate` / `field`: a result JSON entry,
/// a layout CSV, or the checkerboard when nothing is given.
DecisionMatrix load_decision(const CaseConfig &cfg, const std::string &layout, const std::string &yaw,
                             const std::string &entry) {
    const auto &c = cfg.farm;
    const std::size_t m = c.rose.size();
    DecisionMatrix X;
    if (layout.empty()) {
        X = DecisionMatrix(c.turbines, m);
        X.set_positions(checkerboard_layout(c));
    } else if (fs::path(layout).extension() == ".json") {
        X = decision_from_report(load_json_file(layout), entry);
    } else {
        const auto pos = read_numeric_csv(layout, 2, "layout");
        X = DecisionMatrix(pos.rows(), m);
        X.set_positions(pos);
    }
    if (!yaw.empty()) {
        auto deg = read_numeric_csv(yaw, 0, "yaw");
        detail::require(deg.rows() == X.turbines() && deg.cols() == m,
                        "yaw file must hold " + std::to_string(X.turbines()) + " rows of " + std::to_string(m) +
                            " angles (degrees)");
        for (auto &v : deg.flat()) {
            v = deg_to_rad(v);
        }
        X.set_yaws(deg);
    }
    detail::require(X.states() == m, "decision has " + std::to_string(X.states()) + " yaw columns but the case has " +
                                         std::to_string(m) + " wind states");
    return X;
}

void check_feasible(const CaseConfig &cfg, const DecisionMatrix &X) {
    const auto &c = cfg.farm;
    const auto &b = c.bounds;
    for (std::size_t i = 0; i < X.turbines(); ++i) {
        detail::require(X.x(i) >= b.x_min && X.x(i) <= b.x_max && X.y(i) >= b.y_min && X.y(i) <= b.y_max,
                        "infeasible layout: turbine " + std::to_string(i) + " lies outside the domain");
    }
    const auto v = spacing_violations(X.positions(), c.spacing());
    if (!v.empty()) {
        throw ValidationError("infeasible layout: turbines " + std::to_string(v.front().a) + " and " +
                              std::to_string(v.front().b) + " are " + fixed2(v.front().distance) +
                              " m apart (minimum " + fixed2(c.spacing()) + " m)");
    }
}

void apply_overrides(CaseConfig &cfg, const std::string &mode, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> iters, std::optional<std::size_t> particles,
                     const std::string &algorithm, std::optional<std::size_t> max_evals, unsigned threads) {
    if (!mode.empty()) {
        cfg.mode = run_mode_from_string(mode);
    }
    if (seed) {
        cfg.run.swarm.seed = *seed;
    }
    if (iters) {
        cfg.run.swarm.max_iterations = *iters;
    }
    if (particles) {
        cfg.run.swarm.particles = *particles;
    }
    if (!algorithm.empty()) {
        cfg.run.algorithm = algorithm_from_string(algorithm);
    }
    if (max_evals) {
        cfg.run.swarm.max_evaluations = *max_evals;
    }
    cfg.run.swarm.threads = threads;
    validate(cfg.run.swarm);
}

void print_comparison(std::ostream &os, const RunReport &r) {
    const std::vector<std::pair<std::string, std::optional<double>>> cols{
        {"S_theta", r.s_theta()}, {"S_AYC", r.s_ayc()}, {"J_theta", r.j_theta()}, {"J_AYC", r.j_ayc()}};
    os << pad("", 16);
    for (const auto &[name, _] : cols) {
        os << pad(name, 10);
    }
    os << "\n" << std::string(16, ' ').replace(0, 9, "AEP (GWh)");
    for (const auto &[_, v] : cols) {
        os << pad(v ? fixed2(*v / kWhPerGWh) : "-", 10);
    }
    os << "\n" << std::string(16, ' ').replace(0, 15, "Improvement (%)");
    for (std::size_t k = 0; k < cols.size(); ++k) {
        os << pad(k == 0 ? std::string("-") : cell(r.improvement(cols[k].second)), 10);
    }
    os << "\n\n";

    os << pad("dir", 5) << pad("U_ref", 7) << pad("p", 6);
    for (const auto &[name, _] : cols) {
        os << pad(name, 10);
    }
    os << "\n";
    for (const auto &d : r.directions) {
        os << pad(compass_label(d.bearing_deg), 5) << pad(fixed2(d.u_ref), 7) << pad(fixed2(d.probability), 6);
        const double vals[] = {d.s_theta, d.s_ayc, d.j_theta, d.j_ayc};
        const bool have[] = {r.sequential.has_value(), r.sequential.has_value(), r.joint.has_value(),
                             r.joint.has_value()};
        for (int k = 0; k < 4; ++k) {
            os << pad(have[k] ? fixed2(vals[k] / kWhPerGWh) : "-", 10);
        }
        os << "\n";
    }
    if (r.joint) {
        const auto groups = group_directions(r.directions);
        if (groups.size() > 1) {
            os << "\nJ_AYC share of the sum of group mean AEPs:\n";
            for (const auto &g : groups) {
                std::string labels;
                for (auto j : g.states) {
                    labels += (labels.empty() ? "" : ",") + compass_label(r.directions[j].bearing_deg);
                }
                os << "  " << labels << " (U_ref " << fixed2(g.u_ref) << ", p " << fixed2(g.probability)
                   << "): " << fixed2(100.0 * g.j_ayc_share) << " %\n";
            }
        }
    }
    if (r.sequential && r.joint) {
        os << "\nlayout distance |X_pos_joint - X_pos_seq| = "
           << fixed2(frobenius_distance(r.joint->X.positions(), r.sequential->X.positions())) << " m\n";
    }
}

int cmd_evaluate(const std::string &case_ref, const std::string &layout, const std::string &yaw,
                 const std::string &entry, const std::string &out_dir, unsigned threads, const std::string &command) {
    auto cfg = case_by_name_or_path(case_ref);
    cfg.run.swarm.threads = threads;
    const auto X = load_decision(cfg, layout, yaw, entry);
    cfg.farm.turbines = X.turbines();
    validate(cfg.farm);
    check_feasible(cfg, X);

    std::optional<Manifest> manifest;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        manifest.emplace(out_dir, command, cfg);
    }

    const auto &c = cfg.farm;
    const auto grid = c.rotor_grid();
    double total = 0.0;
    json states = json::array();
    std::cout << pad("dir", 5) << pad("U_ref", 7) << pad("p", 6) << pad("P (MW)", 10) << pad("AEP (GWh)", 11) << "\n";
    std::vector<StateEvaluation> evs;
    for (std::size_t j = 0; j < c.rose.size(); ++j) {
        evs.push_back(evaluate_state(c, X, j, grid));
        const auto &s = c.rose[j];
        const double e = kHoursPerYear * s.probability * evs.back().farm_power;
        total += e;
        std::cout << pad(compass_label(s.bearing_deg), 5) << pad(fixed2(s.profile.u_ref), 7)
                  << pad(fixed2(s.probability), 6) << pad(fixed2(evs.back().farm_power / 1e6), 10)
                  << pad(fixed2(e / kWhPerGWh), 11) << "\n";
        states.push_back({{"direction_deg", s.bearing_deg},
                          {"u_ref", s.profile.u_ref},
                          {"probability", s.probability},
                          {"farm_power_w", evs.back().farm_power},
                          {"aep_wh", e},
                          {"inflow", evs.back().inflow},
                          {"power_w", evs.back().power}});
    }
    std::cout << "\nAEP = " << fixed2(total / kWhPerGWh) << " GWh\n\nper-turbine inflow (m/s)\n" << pad("turbine", 8);
    for (const auto &s : c.rose.states) {
        std::cout << pad(compass_label(s.bearing_deg), 7);
    }
    std::cout << "\n";
    for (std::size_t i = 0; i < X.turbines(); ++i) {
        std::cout << pad(std::to_string(i), 8);
        for (const auto &ev : evs) {
            std::cout << pad(fixed2(ev.inflow[i]), 7);
        }
        std::cout << "\n";
    }

    if (manifest) {
        const fs::path p = fs::path(out_dir) / "evaluate.json";
        write_json(p, {{"case", cfg.name},
                       {"case_hash", case_hash(cfg)},
                       {"aep_wh", total},
                       {"aep_gwh", total / kWhPerGWh},
                       {"decision", detail::decision_json(X)},
                       {"states", states}});
        manifest->add_output(p);
        manifest->finish("ok");
    }
    return 0;
}

int cmd_optimize(CaseConfig cfg, const std::string &out_dir, const std::string &command) {
    fs::create_directories(out_dir);
    Manifest manifest(out_dir, command, cfg);
    try {
        const auto r = run_case(cfg);
        print_comparison(std::cout, r);

        const fs::path result = fs::path(out_dir) / "result.json";
        write_json(result, report_json(cfg, r));
        manifest.add_output(result);
        const fs::path history = fs::path(out_dir) / "history.csv";
        std::ofstream h(history);
        write_history_csv(h, r);
        manifest.add_output(history);
        manifest.finish("ok");
    } catch (...) {
        manifest.finish("failed");
        throw;
    }
    return 0;
}

int cmd_field(const std::string &case_ref, const std::string &result, const std::string &layout,
              const std::string &yaw, const std::string &entry, bool greedy, std::size_t state, double resolution,
              double z, const std::string &out_dir, const std::string &command) {
    auto cfg = case_by_name_or_path(case_ref);
    detail::require(!result.empty() || !layout.empty(), "field needs --result or --layout");
    auto X = load_decision(cfg, result.empty() ? layout : result, yaw, entry);
    if (greedy) {
        X = X.greedy();
    }
    cfg.farm.turbines = X.turbines();
    detail::require(state < cfg.farm.rose.size(), "state index " + std::to_string(state) + " out of range (case has " +
                                                       std::to_string(cfg.farm.rose.size()) + " wind states)");
    detail::require(resolution > 0.0, "resolution must be positive");

    fs::create_directories(out_dir);
    Manifest manifest(out_dir, command, cfg);
    const auto &b = cfg.farm.bounds;
    const FieldSpec spec{b.x_min, b.x_max, b.y_min, b.y_max, resolution, z};
    const auto g = sample_field(cfg.farm, X, state, spec);

    const fs::path csv = fs::path(out_dir) / "field.csv";
    std::ofstream out(csv);
    out << "x,y,u\n";
    char buf[128];
    for (std::size_t r = 0; r < g.ys.size(); ++r) {
        for (std::size_t k = 0; k < g.xs.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.xs[k], g.ys[r], g.at(r, k));
            out << buf;
        }
    }
    out.close();
    const fs::path meta = fs::path(out_dir) / "field.json";
    write_json(meta, {{"case", cfg.name},
                      {"state_index", state},
                      {"wind_dir_deg", cfg.farm.rose[state].bearing_deg},
                      {"resolution", resolution},
                      {"z", g.z},
                      {"nx", g.xs.size()},
                      {"ny", g.ys.size()},
                      {"greedy", greedy}});
    manifest.add_output(csv);
    manifest.add_output(meta);
    manifest.finish("ok");
    std::cout << "wrote " << g.ys.size() << " x " << g.xs.size() << " grid to " << csv.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    std::string command;
    for (int k = 0; k < argc; ++k) {
        command += (k ? " " : "") + std::string(argv[k]);
    }

    CLI::App app{"Wind farm layout and yaw optimization"};
    app.set_version_flag("--version", WFOPT_VERSION);
    app.require_subcommand(1);

    std::string case_ref, layout, yaw, entry = "joint", out_dir, result, mode, algorithm;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iters, particles, max_evals;
    std::size_t state = 0;
    double resolution = 10.0, z = 0.0;
    bool greedy = false;

    auto *ev = app.add_subcommand("evaluate", "AEP of a layout (checkerboard if none given)");
    ev->add_option("case", case_ref, "builtin name or case file")->required();
    ev->add_option("--layout", layout, "layout CSV (x,y per row) or result JSON");
    ev->add_option("--yaw", yaw, "yaw CSV, n rows of m angles in degrees");
    ev->add_option("--entry", entry, "entry of a result JSON")->check(CLI::IsMember({"joint", "sequential"}));
    ev->add_option("--out", out_dir, "output directory");
    ev->add_option("--threads", threads, "evaluation threads (0: WFOPT_THREADS or all cores)");

    auto *opt = app.add_subcommand("optimize", "run the sequential and/or joint pipelines");
    opt->add_option("case", case_ref, "builtin name or case file")->required();
    opt->add_option("--mode", mode, "sequential, joint or both")->check(CLI::IsMember({"sequential", "joint", "both"}));
    opt->add_option("--seed", seed, "master seed");
    opt->add_option("--iters", iters, "iterations per search");
    opt->add_option("--particles", particles, "swarm size");
    opt->add_option("--max-evals", max_evals, "evaluation budget per search (0: none)");
    opt->add_option("--algorithm", algorithm, "pso or agldpso")->check(CLI::IsMember({"pso", "agldpso"}));
    opt->add_option("--threads", threads, "evaluation threads (0: WFOPT_THREADS or all cores)");
    opt->add_option("--out", out_dir, "output directory")->required();

    auto *fld = app.add_subcommand("field", "export a hub-height wind speed grid");
    fld->add_option("case", case_ref, "builtin name or case file")->required();
    fld->add_option("--result", result, "result JSON from optimize");
    fld->add_option("--layout", layout, "layout CSV instead of a result");
    fld->add_option("--yaw", yaw, "yaw CSV in degrees");
    fld->add_option("--entry", entry, "entry of the result JSON")->check(CLI::IsMember({"joint", "sequential"}));
    fld->add_flag("--greedy", greedy, "zero all yaw angles");
    fld->add_option("--state", state, "wind state index");
    fld->add_option("--resolution", resolution, "grid spacing, m");
    fld->add_option("--z", z, "sampling height, m (default hub height)");
    fld->add_option("--out", out_dir, "output directory")->required();

    auto *cases = app.add_subcommand("cases", "builtin cases");
    cases->require_subcommand(1);
    cases->add_subcommand("list", "list builtin names");
    auto *show = cases->add_subcommand("show", "print a case as JSON");
    show->add_option("case", case_ref, "builtin name or case file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ev->parsed()) {
            return cmd_evaluate(case_ref, layout, yaw, entry, out_dir, threads, command);
        }
        if (opt->parsed()) {
            auto cfg = case_by_name_or_path(case_ref);
            apply_overrides(cfg, mode, seed, iters, particles, algorithm, max_evals, threads);
            return cmd_optimize(cfg, out_dir, command);
        }
        if (fld->parsed()) {
            return cmd_field(case_ref, result, layout, yaw, entry, greedy, state, resolution, z, out_dir, command);
        }
        if (show->parsed()) {
            std::cout << to_json(case_by_name_or_path(case_ref)).dump(2) << "\n";
            return 0;
        }
        for (auto name : builtin_names()) {
            std::cout << name << "\n";
        }
        return 0;
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
