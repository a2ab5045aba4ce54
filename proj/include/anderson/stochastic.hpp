#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/operator.hpp"
#include "anderson/parallel.hpp"
#include "anderson/potential.hpp"
#include "anderson/random.hpp"

namespace anderson {

using Point = std::array<double, 2>;

struct PathConfig {
    double dt = 1e-4;
    double t_max = 50.0;           ///< hard horizon if the weight never decays
    double weight_floor = 1e-10;   ///< stop once the path weight drops below this
    int n_paths = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;          ///< 0 = all cores

    void validate() const {
        if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
        if (!(t_max > 0.0)) throw ParameterError("t_max must be > 0");
        if (n_paths < 2) throw ParameterError("n_paths must be >= 2");
        if (!(weight_floor > 0.0 && weight_floor < 1.0)) throw ParameterError("weight_floor must be in (0, 1)");
    }
};

/// Discretized reflecting path: positions X_0..X_n and local-time
/// increments dF_1..dF_n (dF_k belongs to the step X_{k-1} -> X_k).
struct Path {
    int dim = 1;
    std::vector<Point> x;
    std::vector<double> local_time;
};

struct FeynmanKacEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
    int killed = 0;  ///< paths stopped by absorption (Dirichlet)
};

namespace detail {

/// Folds a coordinate back into [0, 1] by mirroring.
inline double mirror_into_unit(double v) {
    for (;;) {
        if (v < 0.0) v = -v;
        else if (v > 1.0) v = 2.0 - v;
        else return v;
    }
}

inline bool inside_unit(const Point& x, int dim) {
    for (int a = 0; a < dim; ++a)
        if (!(x[a] >= 0.0 && x[a] <= 1.0)) return false;
    return true;
}

/// One Euler step with per-axis increment sqrt(2 dt) xi (generator = Laplacian).
template <class Rng>
inline void raw_step(Point& x, int dim, double dt, Rng& rng, std::normal_distribution<double>& gauss) {
    const double s = std::sqrt(2.0 * dt);
    for (int a = 0; a < dim; ++a) x[a] += s * gauss(rng);
}

inline double potential_at(const PotentialField& f, const Point& x) {
    const int n = f.grid.cells_per_side;
    auto cell = [n](double v) { return std::clamp(static_cast<int>(v * n), 0, n - 1); };
    return f.grid.dim == 1 ? f.cell(cell(x[0])) : f.cell(cell(x[0]), cell(x[1]));
}

}  // namespace detail

/// Simulates `steps` steps of reflecting Brownian motion started at x0.
/// Coordinates leaving [0,1] are mirrored back; the mirrored distance is the
/// boundary local-time increment of that step.
template <class Rng>
Path simulate_reflecting_path(int dim, const Point& x0, double dt, int steps, Rng& rng) {
    if (dim != 1 && dim != 2) throw UnsupportedError("paths are simulated in 1D or 2D");
    if (!detail::inside_unit(x0, dim)) throw DomainError("start point outside the unit domain");
    if (!(dt > 0.0) || steps < 0) throw ParameterError("need dt > 0 and steps >= 0");
    std::normal_distribution<double> gauss;
    Path p;
    p.dim = dim;
    p.x.reserve(static_cast<std::size_t>(steps) + 1);
    p.local_time.reserve(static_cast<std::size_t>(steps));
    p.x.push_back(x0);
    Point x = x0;
    for (int k = 0; k < steps; ++k) {
        Point raw = x;
        detail::raw_step(raw, dim, dt, rng, gauss);
        double df = 0.0;
        for (int a = 0; a < dim; ++a) {
            x[a] = detail::mirror_into_unit(raw[a]);
            df += std::abs(x[a] - raw[a]);
        }
        p.x.push_back(x);
        p.local_time.push_back(df);
    }
    return p;
}

namespace detail {

/// Integral of Y_t over [0, T] along one path.
///
/// Within a step the potential is taken as the trapezoid mean of its end
/// values and the exponential is integrated exactly. Robin sides multiply by
/// exp(-h dF); Dirichlet sides stop the path when the raw step leaves the
/// domain or the Brownian bridge between the endpoints crosses the face.
template <class Rng>
double path_integral(const Point& x0, const PotentialField& field, double K, const Boundary& bc,
                     const PathConfig& cfg, Rng& rng, bool& killed) {
    const int dim = field.grid.dim;
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Point x = x0;
    double v0 = potential_at(field, x);
    double y = 1.0, total = 0.0, t = 0.0;
    killed = false;
    const double dt = cfg.dt;
    while (t < cfg.t_max && y >= cfg.weight_floor) {
        Point raw = x;
        raw_step(raw, dim, dt, rng, gauss);
        Point next;
        double robin = 0.0;
        bool absorbed = false;
        for (int a = 0; a < dim; ++a) {
            next[a] = mirror_into_unit(raw[a]);
            const double df = std::abs(next[a] - raw[a]);
            const Side lo = a == 0 ? Side::x_low : Side::y_low;
            const Side hi = a == 0 ? Side::x_high : Side::y_high;
            const BoundaryCondition& cl = bc.at(lo);
            const BoundaryCondition& ch = bc.at(hi);
            if (raw[a] < 0.0) {
                if (cl.kind == BoundaryKind::dirichlet) absorbed = true;
                else robin += cl.h_coefficient() * df;
            } else if (raw[a] > 1.0) {
                if (ch.kind == BoundaryKind::dirichlet) absorbed = true;
                else robin += ch.h_coefficient() * df;
            }
            if (!absorbed) {
                // Bridge crossing probability exp(-d0 d1 / dt) per Dirichlet face.
                if (cl.kind == BoundaryKind::dirichlet && unif(rng) < std::exp(-x[a] * next[a] / dt)) absorbed = true;
                if (ch.kind == BoundaryKind::dirichlet &&
                    unif(rng) < std::exp(-(1.0 - x[a]) * (1.0 - next[a]) / dt))
                    absorbed = true;
            }
        }
        const double v1 = absorbed ? v0 : potential_at(field, next);
        const double c = 0.5 * K * (v0 + v1);
        const double decay = std::exp(-c * dt);
        total += c > 0.0 ? y * (1.0 - decay) / c : y * dt;
        if (absorbed) {
            killed = true;
            break;
        }
        y *= decay * std::exp(-robin);
        x = next;
        v0 = v1;
        t += dt;
    }
    return total;
}

}  // namespace detail

/// Monte Carlo estimate of the landscape w(x) from reflecting (or, on
/// Dirichlet sides, absorbed) Brownian paths. Path i draws from stream
/// (seed, i) and results are reduced in path order, so the estimate does
/// not depend on the thread count.
inline FeynmanKacEstimate estimate_landscape_mc(const Point& x, const PotentialField& field, double K,
                                                const Boundary& bc, const PathConfig& cfg) {
    cfg.validate();
    bc.validate(field.grid.dim);
    if (bc.periodic()) throw UnsupportedError("Feynman-Kac estimator does not support periodic boundaries");
    if (!(K >= 0.0)) throw ParameterError("K must be >= 0");
    if (!detail::inside_unit(x, field.grid.dim)) throw DomainError("probe point outside the unit domain");
    const auto n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<double> values(n);
    std::vector<char> killed(n, 0);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        Engine rng = make_stream(cfg.seed, i);
        bool k = false;
        values[i] = detail::path_integral(x, field, K, bc, cfg, rng, k);
        killed[i] = k ? 1 : 0;
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    FeynmanKacEstimate e;
    e.mean = mean;
    e.std_error = std::sqrt(var / static_cast<double>(n));
    e.n_paths = cfg.n_paths;
    for (char k : killed) e.killed += k;
    return e;
}

}  // namespace anderson
