#pragma once

#include "error.hpp"
#include "matrix.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <type_traits>
#include <vector>

namespace wfopt {

/// Box-bounded search region over rows x cols matrices; bounds and
/// velocity limits are per column.
struct SearchSpace {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> vmax;

    /// Same bounds on every column, vmax = vmax_fraction * (upper - lower).
    static SearchSpace uniform(std::size_t rows, std::size_t cols, double lo, double hi, double vmax_fraction = 0.2) {
        SearchSpace s{rows, cols, std::vector<double>(cols, lo), std::vector<double>(cols, hi), {}};
        s.set_velocity_fraction(vmax_fraction);
        return s;
    }

    void set_velocity_fraction(double fraction) {
        vmax.resize(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            vmax[c] = fraction * (upper[c] - lower[c]);
        }
    }

    bool contains(const Matrix &X) const {
        if (X.rows() != rows || X.cols() != cols) {
            return false;
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (X(r, c) < lower[c] || X(r, c) > upper[c]) {
                    return false;
                }
            }
        }
        return true;
    }
};

inline void validate(const SearchSpace &s) {
    using detail::require;
    require(s.rows >= 1 && s.cols >= 1, "search space: empty shape");
    require(s.lower.size() == s.cols && s.upper.size() == s.cols && s.vmax.size() == s.cols,
            "search space: bound vectors must have one entry per column");
    for (std::size_t c = 0; c < s.cols; ++c) {
        require(s.lower[c] < s.upper[c], "search space: column " + std::to_string(c) + " has lower >= upper");
        require(s.vmax[c] > 0.0, "search space: column " + std::to_string(c) + " has vmax <= 0");
    }
}

/// Cost of one candidate. Infeasible candidates may still guide the swarm
/// (their cost should already include a penalty) but are never reported.
struct Evaluation {
    double cost = 0.0;
    bool feasible = true;
};

enum class Algorithm { Pso, Agldpso };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::Pso ? "pso" : "agldpso"; }

inline Algorithm algorithm_from_string(std::string_view name) {
    if (name == "pso") {
        return Algorithm::Pso;
    }
    if (name == "agldpso") {
        return Algorithm::Agldpso;
    }
    throw ValidationError("unknown algorithm '" + std::string(name) + "' (expected pso or agldpso)");
}

inline constexpr double kPsoAcceleration = 1.49445; // constriction-equivalent, paired with omega = 0.729
inline constexpr double kAgldpsoAcceleration = 1.0;  // random inertia in [0.4, 0.9] needs smaller pulls to contract

struct SwarmConfig {
    std::size_t particles = 128;
    std::optional<double> c1; // empty: per-algorithm default
    std::optional<double> c2;
    double omega = 0.729;    // PSO inertia
    double omega_lo = 0.4;   // AGLDPSO elementwise inertia range
    double omega_hi = 0.9;
    std::vector<std::size_t> subpop_sizes{4, 8, 16, 32};
    std::size_t max_iterations = 1000;
    std::size_t max_evaluations = 0; // 0: no evaluation cap
    std::uint64_t seed = 1;
    unsigned threads = 0;          // 0: WFOPT_THREADS or hardware concurrency
    double penalty_lambda_factor = 10.0;
    double vmax_fraction = 0.2;

    bool operator==(const SwarmConfig &) const = default;
};

inline void validate(const SwarmConfig &cfg) {
    using detail::require;
    require(!cfg.subpop_sizes.empty(), "optimizer.subpop_sizes: must not be empty");
    for (auto s : cfg.subpop_sizes) {
        require(s >= 2, "optimizer.subpop_sizes: every size must be at least 2");
    }
    const auto smallest = *std::min_element(cfg.subpop_sizes.begin(), cfg.subpop_sizes.end());
    require(cfg.particles >= 2 * smallest, "optimizer.particles: must be at least twice the smallest subpopulation");
    require(cfg.c1.value_or(1.0) > 0.0 && cfg.c2.value_or(1.0) > 0.0, "optimizer.c1/c2: must be positive");
    require(cfg.omega_lo <= cfg.omega_hi, "optimizer.omega_range: lower bound above upper bound");
    require(cfg.max_iterations >= 1 || cfg.max_evaluations >= 1, "optimizer: need an iteration or evaluation budget");
    require(cfg.vmax_fraction > 0.0, "optimizer: vmax fraction must be positive");
}

/// Acceleration coefficients actually used by `algorithm`.
inline std::pair<double, double> acceleration(const SwarmConfig &cfg, Algorithm algorithm) {
    const double fallback = algorithm == Algorithm::Pso ? kPsoAcceleration : kAgldpsoAcceleration;
    return {cfg.c1.value_or(fallback), cfg.c2.value_or(fallback)};
}

struct Particle {
    Matrix x;
    Matrix v;
    Matrix best_x;
    double cost = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::mt19937_64 rng;
};

struct OptimizeResult {
    Matrix best_x;
    double best_cost = std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::vector<double> history;       // best feasible cost after each iteration (index 0: initial swarm)
    std::vector<double> gbest_history; // penalized global-best cost after each iteration
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class Fn>
Evaluation evaluate_candidate(Fn &fn, const Matrix &X) {
    using R = std::invoke_result_t<Fn &, const Matrix &>;
    if constexpr (std::is_same_v<R, Evaluation>) {
        return fn(X);
    } else {
        return Evaluation{static_cast<double>(fn(X)), true};
    }
}

} // namespace detail

/// One swarm velocity/position update on flattened matrices:
///   v <- inertia * v + c1 r1 (local - x) + c2 r2 (global - x)
/// `draw(k)` returns {inertia, r1, r2} for element k. Velocities are clamped
/// to +-vmax and positions to the bounds; a clamped coordinate loses its
/// velocity.
template <class Draw>
void move_particle(Matrix &x, Matrix &v, const Matrix &local, const Matrix &global, const SearchSpace &space,
                   double c1, double c2, Draw &&draw) {
    const std::size_t cols = space.cols;
    auto xs = x.flat();
    auto vs = v.flat();
    auto ls = local.flat();
    auto gs = global.flat();
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const std::size_t c = k % cols;
        const auto [inertia, r1, r2] = draw(k);
        double vel = inertia * vs[k] + c1 * r1 * (ls[k] - xs[k]) + c2 * r2 * (gs[k] - xs[k]);
        vel = std::clamp(vel, -space.vmax[c], space.vmax[c]);
        double pos = xs[k] + vel;
        if (pos < space.lower[c]) {
            pos = space.lower[c];
            vel = 0.0;
        } else if (pos > space.upper[c]) {
            pos = space.upper[c];
            vel = 0.0;
        }
        xs[k] = pos;
        vs[k] = vel;
    }
}

/// Population state shared by both update rules.
class Swarm {
public:
    Swarm(SearchSpace space, SwarmConfig config) : space_(std::move(space)), config_(std::move(config)) {
        validate(space_);
        validate(config_);
        master_.seed(detail::splitmix64(config_.seed));
    }

    /// Random initial population; `seeds` are placed verbatim in the first
    /// slots with zero velocity. Every particle is evaluated once.
    template <class CostFn>
    void initialize(CostFn &cost_fn, const std::vector<Matrix> &seeds = {}) {
        detail::require(seeds.size() <= config_.particles, "more seed particles than swarm slots");
        particles_.assign(config_.particles, Particle{});
        for (std::size_t p = 0; p < particles_.size(); ++p) {
            auto &pt = particles_[p];
            pt.rng.seed(detail::splitmix64(config_.seed ^ detail::splitmix64(0xA5A5A5A5ULL + p)));
            pt.x = Matrix(space_.rows, space_.cols);
            pt.v = Matrix(space_.rows, space_.cols);
            if (p < seeds.size()) {
                detail::require(space_.contains(seeds[p]), "seed particle " + std::to_string(p) +
                                                               " has the wrong shape or lies outside the bounds");
                pt.x = seeds[p];
                pt.best_x = pt.x;
                continue;
            }
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t r = 0; r < space_.rows; ++r) {
                for (std::size_t c = 0; c < space_.cols; ++c) {
                    pt.x(r, c) = space_.lower[c] + unit(pt.rng) * (space_.upper[c] - space_.lower[c]);
                    pt.v(r, c) = (2.0 * unit(pt.rng) - 1.0) * space_.vmax[c];
                }
            }
            pt.best_x = pt.x;
        }
        std::vector<std::size_t> all(particles_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        evaluate(cost_fn, all);
        iteration_ = 0;
    }

    const SearchSpace &space() const { return space_; }
    const SwarmConfig &config() const { return config_; }
    std::vector<Particle> &particles() { return particles_; }
    const std::vector<Particle> &particles() const { return particles_; }
    std::mt19937_64 &master_rng() { return master_; }

    std::size_t gbest_index() const { return gbest_; }
    const Particle &gbest() const { return particles_[gbest_]; }
    std::size_t evaluations() const { return evaluations_; }
    std::size_t iteration() const { return iteration_; }
    void advance_iteration() { ++iteration_; }

    bool has_feasible() const { return has_feasible_; }
    const Matrix &best_feasible_x() const { return best_feasible_x_; }
    double best_feasible_cost() const { return best_feasible_cost_; }

    /// Evaluates the listed particles (concurrently) and folds the results
    /// into personal, global and best-feasible records in index order.
    template <class CostFn>
    void evaluate(CostFn &cost_fn, std::span<const std::size_t> which) {
        std::vector<Evaluation> results(which.size());
        parallel_for(which.size(), config_.threads,
                     [&](std::size_t k) { results[k] = detail::evaluate_candidate(cost_fn, particles_[which[k]].x); });
        evaluations_ += which.size();
        for (std::size_t k = 0; k < which.size(); ++k) {
            auto &pt = particles_[which[k]];
            pt.cost = results[k].cost;
            pt.feasible = results[k].feasible;
            if (pt.cost < pt.best_cost) {
                pt.best_cost = pt.cost;
                pt.best_x = pt.x;
            }
            if (pt.feasible && pt.cost < best_feasible_cost_) {
                best_feasible_cost_ = pt.cost;
                best_feasible_x_ = pt.x;
                has_feasible_ = true;
            }
        }
        refresh_gbest();
    }

private:
    void refresh_gbest() {
        std::size_t best = 0;
        for (std::size_t p = 1; p < particles_.size(); ++p) {
            if (particles_[p].best_cost < particles_[best].best_cost) {
                best = p;
            }
        }
        gbest_ = best;
    }

    SearchSpace space_;
    SwarmConfig config_;
    std::vector<Particle> particles_;
    std::mt19937_64 master_;
    std::size_t gbest_ = 0;
    std::size_t evaluations_ = 0;
    std::size_t iteration_ = 0;
    bool has_feasible_ = false;
    Matrix best_feasible_x_;
    double best_feasible_cost_ = std::numeric_limits<double>::infinity();
};

/// Classic global-best PSO: every particle moves and is re-evaluated.
template <class CostFn>
void pso_step(Swarm &swarm, CostFn &cost_fn) {
    const auto &cfg = swarm.config();
    const Matrix global = swarm.gbest().best_x;
    const auto [c1, c2] = acceleration(cfg, Algorithm::Pso);
    auto &ps = swarm.particles();
    for (auto &pt : ps) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        move_particle(pt.x, pt.v, pt.best_x, global, swarm.space(), c1, c2, [&](std::size_t) {
            const double r1 = unit(pt.rng);
            const double r2 = unit(pt.rng);
            return std::tuple{cfg.omega, r1, r2};
        });
    }
    std::vector<std::size_t> all(ps.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    swarm.evaluate(cost_fn, all);
    swarm.advance_iteration();
}

/// Maps a crowding ratio in [0, 1] onto the candidate sizes: the ratio range
/// is split into equal bins, the most crowded bin getting the smallest size.
inline std::size_t subpop_size_for_crowding(double crowding, std::vector<std::size_t> sizes) {
    std::sort(sizes.begin(), sizes.end());
    const auto k = sizes.size();
    const double clamped = std::clamp(crowding, 0.0, 1.0);
    const auto bin = std::min(k - 1, static_cast<std::size_t>(std::floor(clamped * static_cast<double>(k))));
    return sizes[k - 1 - bin];
}

struct Granularity {
    double crowding = 0.0; // fraction of particles within `radius` of the worst one
    double radius = 0.0;
    std::size_t subpop_size = 0;
};

/// Adaptive subpopulation size. Distances are measured on coordinates
/// scaled by each column's range. The radius is the median pairwise distance
/// within a random sample of at most 32 particles.
inline Granularity granularity(Swarm &swarm) {
    const auto &ps = swarm.particles();
    const auto &space = swarm.space();
    const std::size_t n = ps.size();

    auto dist = [&](const Matrix &a, const Matrix &b) {
        double s = 0.0;
        auto fa = a.flat();
        auto fb = b.flat();
        for (std::size_t k = 0; k < fa.size(); ++k) {
            const std::size_t c = k % space.cols;
            const double d = (fa[k] - fb[k]) / (space.upper[c] - space.lower[c]);
            s += d * d;
        }
        return std::sqrt(s);
    };

    std::size_t worst = 0;
    for (std::size_t p = 1; p < n; ++p) {
        if (ps[p].cost > ps[worst].cost) {
            worst = p;
        }
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t m = std::min<std::size_t>(n, 32);
    std::shuffle(idx.begin(), idx.end(), swarm.master_rng());
    std::vector<double> pair;
    pair.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            pair.push_back(dist(ps[idx[a]].x, ps[idx[b]].x));
        }
    }
    Granularity g;
    if (!pair.empty()) {
        const auto mid = pair.begin() + static_cast<std::ptrdiff_t>(pair.size() / 2);
        std::nth_element(pair.begin(), mid, pair.end());
        g.radius = *mid;
    }
    std::size_t close = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (p != worst && dist(ps[p].x, ps[worst].x) <= g.radius) {
            ++close;
        }
    }
    g.crowding = n > 1 ? static_cast<double>(close) / static_cast<double>(n - 1) : 1.0;
    g.subpop_size = std::min(n, subpop_size_for_crowding(g.crowding, swarm.config().subpop_sizes));
    return g;
}

/// Random partition of all particle indices into max(1, n / size) groups.
inline std::vector<std::vector<std::size_t>> partition_swarm(std::size_t n, std::size_t size, std::mt19937_64 &rng) {
    const std::size_t groups = std::max<std::size_t>(1, n / std::max<std::size_t>(1, size));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> out(groups);
    for (std::size_t k = 0; k < n; ++k) {
        out[k % groups].push_back(idx[k]);
    }
    return out;
}

/// Adaptive-granularity distributed step: only the worst particle of each
/// subpopulation moves, learning from the subpopulation best and the global
/// best with an elementwise random inertia. Returns the subpopulation size
/// used.
template <class CostFn>
std::size_t agldpso_step(Swarm &swarm, CostFn &cost_fn) {
    const auto &cfg = swarm.config();
    const std::size_t size = granularity(swarm).subpop_size;
    auto &ps = swarm.particles();
    const auto groups = partition_swarm(ps.size(), size, swarm.master_rng());
    const Matrix global = swarm.gbest().best_x;
    const auto [c1, c2] = acceleration(cfg, Algorithm::Agldpso);

    std::vector<std::size_t> moved;
    moved.reserve(groups.size());
    for (const auto &group : groups) {
        std::size_t worst = group.front();
        std::size_t best = group.front();
        for (auto p : group) {
            if (ps[p].cost > ps[worst].cost) {
                worst = p;
            }
            if (ps[p].best_cost < ps[best].best_cost) {
                best = p;
            }
        }
        auto &pt = ps[worst];
        const Matrix local = ps[best].best_x;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> inertia(cfg.omega_lo, cfg.omega_hi);
        move_particle(pt.x, pt.v, local, global, swarm.space(), c1, c2, [&](std::size_t) {
            const double w = inertia(pt.rng);
            const double r1 = unit(pt.rng);
            const double r2 = unit(pt.rng);
            return std::tuple{w, r1, r2};
        });
        moved.push_back(worst);
    }
    swarm.evaluate(cost_fn, moved);
    swarm.advance_iteration();
    return size;
}

/// Runs a swarm until the iteration or evaluation budget is exhausted and
/// returns the best strictly feasible point seen.
template <class CostFn>
OptimizeResult optimize(const SearchSpace &space, CostFn &&cost_fn, const SwarmConfig &config, Algorithm algorithm,
                        const std::vector<Matrix> &seeds = {},
                        const std::function<void(const Swarm &)> &on_iteration = {}) {
    Swarm swarm(space, config);
    swarm.initialize(cost_fn, seeds);

    OptimizeResult res;
    auto record = [&] {
        res.history.push_back(swarm.best_feasible_cost());
        res.gbest_history.push_back(swarm.gbest().best_cost);
        if (on_iteration) {
            on_iteration(swarm);
        }
    };
    record();

    auto budget_left = [&] {
        if (config.max_evaluations > 0 && swarm.evaluations() >= config.max_evaluations) {
            return false;
        }
        return config.max_iterations == 0 || swarm.iteration() < config.max_iterations;
    };
    while (budget_left()) {
        if (algorithm == Algorithm::Pso) {
            pso_step(swarm, cost_fn);
        } else {
            agldpso_step(swarm, cost_fn);
        }
        record();
    }

    res.evaluations = swarm.evaluations();
    res.iterations = swarm.iteration();
    if (!swarm.has_feasible()) {
        throw NoFeasibleSolution("optimizer finished without visiting a feasible point");
    }
    res.feasible = true;
    res.best_x = swarm.best_feasible_x();
    res.best_cost = swarm.best_feasible_cost();
    return res;
}

} // namespace wfopt
