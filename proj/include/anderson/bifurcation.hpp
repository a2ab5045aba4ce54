#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anderson/errors.hpp"
#include "anderson/operator.hpp"
#include "anderson/parallel.hpp"
#include "anderson/random.hpp"
#include "anderson/solver.hpp"

namespace anderson {

/// Two-well periodic toy potential on (0, 1).
///
/// Reading left to right: barrier L2/2, left well L1, barrier L2, right well
/// L3, inner barrier L4, right well L3, barrier L2/2.
struct ToyModelParams {
    double L1 = 1.0 / 12, L2 = 2.0 / 5, L3 = 1.0 / 20, L4 = 1.0 / 60;

    double t0() const { return L1 / 2; }
    double t1() const { return L4 / 2; }
    double t2() const { return L4 / 2 + L3; }
    static constexpr double t3() { return 0.5; }

    /// Breakpoints x1..x6 (index 0..5).
    std::array<double, 6> breakpoints() const {
        const double x1 = L2 / 2;
        const double x2 = x1 + L1;
        const double x3 = x2 + L2;
        const double x4 = x3 + L3;
        const double x5 = x4 + L4;
        const double x6 = x5 + L3;
        return {x1, x2, x3, x4, x5, x6};
    }

    /// Throws ConstraintError naming the first violated constraint.
    void validate() const {
        if (!(L1 > 0 && L2 > 0 && L3 > 0 && L4 > 0)) throw ParameterError("well lengths must be positive");
        if (!(L1 > L3)) throw ConstraintError(1, "L1 > L3 (left well is the longest single interval)");
        if (!(L1 < 2 * L3)) throw ConstraintError(2, "L1 < 2 L3 (right well is longer in total)");
        if (!(L4 < L3 / 2)) throw ConstraintError(3, "L4 < L3 / 2 (inner barrier is short)");
        if (!(L2 > L1 + 2 * L3 + L4)) throw ConstraintError(4, "L2 > L1 + 2 L3 + L4 (wells are far apart)");
        validate_length();
    }

    void validate_length() const {
        if (!(L1 > 0 && L2 > 0 && L3 > 0 && L4 > 0)) throw ParameterError("well lengths must be positive");
        if (std::abs(L1 + 2 * L2 + 2 * L3 + L4 - 1.0) > 1e-12)
            throw ConstraintError(5, "L1 + 2 L2 + 2 L3 + L4 = 1");
    }
};

/// (P1, P2, P3): well share of the interval, left-well share of the wells,
/// barrier share of the right well.
struct ShapeRatios {
    double P1 = 0.25, P2 = 0.4, P3 = 0.1;
};

inline ShapeRatios shape_ratios(const ToyModelParams& m) {
    const double wells = m.L1 + 2 * m.L3 + m.L4;
    return {wells / (m.L1 + 2 * m.L2 + 2 * m.L3 + m.L4), m.L1 / wells, m.L4 / (2 * m.L3 + m.L4)};
}

/// Unique parameters with the given ratios and total length 1.
inline ToyModelParams params_from_ratios(const ShapeRatios& r) {
    if (!(r.P1 > 0 && r.P1 < 1 && r.P2 > 0 && r.P2 < 1 && r.P3 > 0 && r.P3 < 1))
        throw ParameterError("shape ratios must lie in (0, 1)");
    const double W = r.P1;
    ToyModelParams m;
    m.L1 = r.P2 * W;
    const double right = W - m.L1;
    m.L4 = r.P3 * right;
    m.L3 = (right - m.L4) / 2;
    m.L2 = (1 - W) / 2;
    return m;
}

inline PiecewiseLine toy_potential_line(const ToyModelParams& m) {
    const auto x = m.breakpoints();
    return {{0.0, x[0], x[1], x[2], x[3], x[4], x[5], 1.0}, {1, 0, 1, 0, 1, 0, 1}};
}

/// Left subsystem: only the left well, moved to the center.
inline PiecewiseLine toy_left_line(const ToyModelParams& m) {
    return {{0.0, (1 - m.L1) / 2, (1 + m.L1) / 2, 1.0}, {1, 0, 1}};
}

/// Right subsystem: only the right well (with its inner barrier), centered.
inline PiecewiseLine toy_right_line(const ToyModelParams& m) {
    return {{0.0, (1 - m.L4 - 2 * m.L3) / 2, (1 - m.L4) / 2, (1 + m.L4) / 2, (1 + m.L4 + 2 * m.L3) / 2, 1.0},
            {1, 0, 1, 0, 1}};
}

/// Left half (0, 1/2) of a centered, reflection-symmetric subsystem line.
inline PiecewiseLine half_line(const PiecewiseLine& full) {
    PiecewiseLine h;
    for (std::size_t i = 0; i < full.edges.size(); ++i) {
        if (full.edges[i] < 0.5) h.edges.push_back(full.edges[i]);
        if (i < full.values.size() && full.edges[i] < 0.5) h.values.push_back(full.values[i]);
    }
    h.edges.push_back(0.5);
    return h;
}

inline constexpr double toy_default_spacing = 1.0 / 4000;

/// Toy potential on a mesh snapped to the breakpoints.
struct ToyModel {
    ToyModelParams params;
    PiecewiseLine line;
    std::vector<double> x;
    std::vector<double> interval_values;
};

inline ToyModel build_toy_potential(const ToyModelParams& m, double spacing = toy_default_spacing) {
    m.validate();
    if (!(spacing > 0.0 && spacing < 0.1)) throw ParameterError("spacing must lie in (0, 0.1)");
    ToyModel t;
    t.params = m;
    t.line = toy_potential_line(m);
    t.x = t.line.mesh(spacing);
    t.interval_values = t.line.interval_values(t.x);
    return t;
}

inline DiscreteOperator toy_operator(const ToyModel& t, double K) {
    return assemble_line(t.x, t.interval_values, K, BoundaryCondition::periodic());
}

/// FD operator of subsystem `which` (1 = left, 2 = right): periodic on (0,1)
/// or, with `half`, reflecting on (0, 1/2).
inline DiscreteOperator subsystem_operator(const ToyModelParams& m, int which, double K, bool half,
                                           double spacing = toy_default_spacing) {
    if (which != 1 && which != 2) throw ParameterError("subsystem must be 1 or 2");
    const PiecewiseLine full = which == 1 ? toy_left_line(m) : toy_right_line(m);
    if (!half) return assemble_line(full, spacing, K, BoundaryCondition::periodic());
    return assemble_line(half_line(full), spacing, K, BoundaryCondition::neumann());
}

/// Evaluation with a flag raised near a tan/cot pole.
struct DValue {
    double value = 0.0;
    bool near_pole = false;
};

namespace detail {

inline void check_lambda(double K, double lambda) {
    if (!(lambda > 0.0 && lambda < K)) throw DomainError("need 0 < lambda < K");
}

inline constexpr double pole_width = 1e-8;

/// True when `phase` is within pole_width (relative) of offset + k pi.
inline bool near_multiple(double phase, double offset) {
    const double k = std::round((phase - offset) / std::numbers::pi);
    const double pole = offset + k * std::numbers::pi;
    return std::abs(phase - pole) <= pole_width * std::max(1.0, std::abs(pole));
}

}  // namespace detail

/// alpha tan(alpha t0) - beta tanh(beta (1/2 - t0)), alpha = sqrt(lambda), beta = sqrt(K - lambda).
inline DValue eval_D1(double K, double lambda, const ToyModelParams& m) {
    detail::check_lambda(K, lambda);
    const double a = std::sqrt(lambda), b = std::sqrt(K - lambda);
    const double t0 = m.t0();
    return {a * std::tan(a * t0) - b * std::tanh(b * (0.5 - t0)),
            detail::near_multiple(a * t0, std::numbers::pi / 2)};
}

/// Right-subsystem matching function, evaluated with every exponential
/// divided by exp(2 beta (t1 + t3)) so that no exponent is positive.
inline DValue eval_D2(double K, double lambda, const ToyModelParams& m) {
    detail::check_lambda(K, lambda);
    const double a = std::sqrt(lambda), b = std::sqrt(K - lambda);
    const double t1 = m.t1(), t2 = m.t2(), t3 = ToyModelParams::t3();
    const double e = std::exp(2 * b * (t2 - t1 - t3));
    const double den = -std::expm1(2 * b * (t2 - t1 - t3));
    const double term1 = (a * a - b * b) * (e + 1.0) / den;
    const double term2 = (a * a + b * b) * (std::exp(-2 * b * t1) + std::exp(2 * b * (t2 - t3))) / den;
    const double phase = a * (t1 - t2);
    const double term3 = 2 * a * b / std::tan(phase);
    return {term1 + term2 + term3, detail::near_multiple(phase, 0.0)};
}

/// The same function in its original form with positive exponents; overflows for large K.
inline DValue eval_D2_raw(double K, double lambda, const ToyModelParams& m) {
    detail::check_lambda(K, lambda);
    const double a = std::sqrt(lambda), b = std::sqrt(K - lambda);
    const double t1 = m.t1(), t2 = m.t2(), t3 = ToyModelParams::t3();
    const double den = std::exp(2 * b * (t1 + t3)) - std::exp(2 * b * t2);
    const double term1 = (a * a - b * b) * (std::exp(2 * b * t2) + std::exp(2 * b * (t1 + t3))) / den;
    const double term2 = (a * a + b * b) * (std::exp(2 * b * t3) + std::exp(2 * b * (t1 + t2))) / den;
    const double phase = a * (t1 - t2);
    return {term1 + term2 + 2 * a * b / std::tan(phase), detail::near_multiple(phase, 0.0)};
}

inline DValue eval_D(int which, double K, double lambda, const ToyModelParams& m) {
    return which == 1 ? eval_D1(K, lambda, m) : eval_D2(K, lambda, m);
}

namespace detail {

/// Known pole locations in lambda below `upper`.
inline std::vector<double> D_poles(int which, double upper, const ToyModelParams& m) {
    std::vector<double> poles;
    for (int k = which == 1 ? 0 : 1;; ++k) {
        const double phase = which == 1 ? std::numbers::pi / 2 + k * std::numbers::pi : k * std::numbers::pi;
        const double len = which == 1 ? m.t0() : m.L3;
        const double lam = (phase / len) * (phase / len);
        if (lam >= upper) break;
        poles.push_back(lam);
    }
    return poles;
}

/// Bisection on a bracket with a sign change, to relative width `rtol`.
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double rtol) {
    for (int it = 0; it < 400 && hi - lo > rtol * std::abs(hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Smallest root in (0, K) of the subsystem matching function `which`.
///
/// The search range (0, min(K, 4 (pi/l)^2)), with l = t0 for the left and
/// l = L3 for the right subsystem, is cut into 200 subintervals
/// and split at the known tan/cot poles; the first sign change that is not
/// a pole is bisected to 1e-12 relative.
inline double first_subsystem_eigenvalue(double K, const ToyModelParams& m, int which) {
    if (which != 1 && which != 2) throw ParameterError("subsystem must be 1 or 2");
    if (!(K > 0.0)) throw ParameterError("K must be > 0");
    const double well = which == 1 ? m.t0() : m.L3;
    const double upper = std::min(K, 4.0 * std::pow(std::numbers::pi / well, 2));
    const double lo_end = upper * 1e-12, hi_end = upper * (1 - 1e-12);
    std::vector<double> cuts;
    for (int i = 0; i <= 200; ++i) cuts.push_back(lo_end + (hi_end - lo_end) * i / 200.0);
    const std::vector<double> poles = detail::D_poles(which, upper, m);
    for (double p : poles) {
        cuts.push_back(p * (1 - detail::pole_width));
        cuts.push_back(p * (1 + detail::pole_width));
    }
    std::sort(cuts.begin(), cuts.end());
    auto f = [&](double l) { return eval_D(which, K, l, m).value; };
    auto across_pole = [&](double a, double b) {
        return std::any_of(poles.begin(), poles.end(), [&](double p) { return a <= p && p <= b; });
    };
    double prev = cuts.front();
    double fprev = f(prev);
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double cur = cuts[i];
        if (cur <= prev || cur >= upper) continue;
        const double fcur = f(cur);
        if (std::isfinite(fprev) && std::isfinite(fcur) && (fprev < 0) != (fcur < 0) && !across_pole(prev, cur))
            return detail::bisect(f, prev, cur, fprev, 1e-12);
        prev = cur;
        fprev = fcur;
    }
    throw NoRootError("no subsystem eigenvalue below K = " + std::to_string(K));
}

struct CriticalPoint {
    double K_c = 0.0;
    double lambda_c = 0.0;
    double residual_D1 = 0.0;  ///< |D| / (lambda |dD/dlambda|)
    double residual_D2 = 0.0;
};

/// |D| / (lambda |D'(lambda)|): the relative distance to the root to first order.
inline double scaled_residual(int which, double K, double lambda, const ToyModelParams& m) {
    const double d = eval_D(which, K, lambda, m).value;
    const double h = 1e-6 * lambda;
    const double slope = (eval_D(which, K, lambda + h, m).value - eval_D(which, K, lambda - h, m).value) / (2 * h);
    return std::abs(d) / (lambda * std::abs(slope));
}

/// K where the first eigenvalues of the two subsystems coincide.
inline CriticalPoint solve_critical(const ToyModelParams& m) {
    m.validate_length();
    auto g = [&](double K) {
        return first_subsystem_eigenvalue(K, m, 1) - first_subsystem_eigenvalue(K, m, 2);
    };
    constexpr int scan = 141;
    double k_prev = 10.0, g_prev = g(k_prev);
    for (int i = 1; i < scan; ++i) {
        const double k = 10.0 * std::pow(1e7, static_cast<double>(i) / (scan - 1));
        const double gk = g(k);
        if ((g_prev < 0) != (gk < 0)) {
            CriticalPoint c;
            c.K_c = detail::bisect(g, k_prev, k, g_prev, 1e-10);
            c.lambda_c = 0.5 * (first_subsystem_eigenvalue(c.K_c, m, 1) + first_subsystem_eigenvalue(c.K_c, m, 2));
            c.residual_D1 = scaled_residual(1, c.K_c, c.lambda_c, m);
            c.residual_D2 = scaled_residual(2, c.K_c, c.lambda_c, m);
            return c;
        }
        k_prev = k;
        g_prev = gk;
    }
    throw NoBifurcationError("subsystem eigenvalues do not cross for K in [10, 1e8]");
}

/// Relative height of the left peak: max_W1 |u| / (max_W1 |u| + max_W2 |u|)
/// with W1 = [x1, x2] and W2 = [x3, x5].
inline double relative_height(const Eigen::VectorXd& u, const std::vector<double>& x, const ToyModelParams& m) {
    if (static_cast<std::size_t>(u.size()) != x.size()) throw UsageError("eigenmode and mesh have different sizes");
    const auto b = m.breakpoints();
    const double eps = 1e-12;
    double left = 0.0, right = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::abs(u[static_cast<Eigen::Index>(i)]);
        if (x[i] >= b[0] - eps && x[i] <= b[1] + eps) left = std::max(left, a);
        if (x[i] >= b[2] - eps && x[i] <= b[4] + eps) right = std::max(right, a);
    }
    if (left + right == 0.0) throw DegenerateError("eigenmode vanishes on both wells");
    return left / (left + right);
}

struct SweepSample {
    double K = 0, lambda1 = 0, lambda2 = 0, F = 0;
};

struct SweepResult {
    double K_c = 0.0;
    std::vector<SweepSample> samples;  ///< grid points, then refinement points
};

inline SweepSample toy_sample(const ToyModel& t, double K) {
    const auto pairs = smallest_eigenpairs(toy_operator(t, K), 2);
    return {K, pairs[0].lambda, pairs[1].lambda, relative_height(pairs[0].u, t.x, t.params)};
}

inline std::vector<double> default_K_grid() {
    std::vector<double> g;
    for (int i = 0; i < 60; ++i) g.push_back(100.0 * std::pow(1e4, i / 59.0));
    return g;
}

/// K where F of the first eigenmode crosses 1/2, from full eigensolves:
/// a scan over K_grid, bisection of the crossing pair, then linear
/// interpolation of F across the final bracket.
inline SweepResult sweep_Kc(const ToyModelParams& m, const std::vector<double>& K_grid = default_K_grid(),
                            double spacing = toy_default_spacing, unsigned threads = 1) {
    const ToyModel t = build_toy_potential(m, spacing);
    if (K_grid.size() < 2) throw ParameterError("K grid needs at least two points");
    SweepResult res;
    res.samples.resize(K_grid.size());
    parallel_for(K_grid.size(), threads, [&](std::size_t i) { res.samples[i] = toy_sample(t, K_grid[i]); });
    std::size_t at = K_grid.size();
    for (std::size_t i = 0; i + 1 < K_grid.size(); ++i)
        if (res.samples[i].F < 0.5 && res.samples[i + 1].F >= 0.5) {
            at = i;
            break;
        }
    if (at == K_grid.size()) throw NoCrossingError("F does not cross 1/2 on the K grid");
    SweepSample lo = res.samples[at], hi = res.samples[at + 1];
    while (hi.K - lo.K > 1e-9 * hi.K) {
        const SweepSample mid = toy_sample(t, std::sqrt(lo.K * hi.K));
        res.samples.push_back(mid);
        if (mid.F < 0.5) lo = mid;
        else hi = mid;
    }
    res.K_c = lo.K + (0.5 - lo.F) * (hi.K - lo.K) / (hi.F - lo.F);
    return res;
}

enum class RatioAxis { P1, P2, P3 };

inline const char* to_string(RatioAxis a) {
    switch (a) {
        case RatioAxis::P1: return "P1";
        case RatioAxis::P2: return "P2";
        case RatioAxis::P3: return "P3";
    }
    return "?";
}

inline RatioAxis ratio_axis_from_string(const std::string& s) {
    if (s == "P1") return RatioAxis::P1;
    if (s == "P2") return RatioAxis::P2;
    if (s == "P3") return RatioAxis::P3;
    throw ParameterError("unknown ratio axis '" + s + "'");
}

struct ScalingPoint {
    double P = 0.0;
    ToyModelParams params;
    double K_c = 0.0;
    bool skipped = false;
    std::string note;
};

/// Least-squares fit of log K_c against log P (P1, P3) or P (P2).
struct ScalingFit {
    RatioAxis axis = RatioAxis::P1;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int used = 0;
    std::vector<ScalingPoint> points;
};

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw ParameterError("fit needs at least three points");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = x[static_cast<std::size_t>(i)];
        A(i, 1) = 1.0;
        b[i] = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    const double mean = b.mean();
    const double ss_res = (A * c - b).squaredNorm();
    const double ss_tot = (b.array() - mean).square().sum();
    return {c[0], c[1], ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

struct ScalingWindow {
    double lo = 0, hi = 0;
    bool log10_uniform = false;
};

/// Sampling windows: log10 P1 in [-0.7, -0.5], P2 in [0.38, 0.42], log10 P3 in [-1.1, -0.9].
inline ScalingWindow default_window(RatioAxis axis) {
    switch (axis) {
        case RatioAxis::P1: return {-0.7, -0.5, true};
        case RatioAxis::P2: return {0.38, 0.42, false};
        case RatioAxis::P3: return {-1.1, -0.9, true};
    }
    return {};
}

/// Samples `n_points` values of one ratio (others held at `base`), solves for
/// K_c at each and fits the scaling law. Points whose parameters violate the
/// toy-model constraints are skipped and reported.
inline ScalingFit scaling_study(const ShapeRatios& base, RatioAxis axis, int n_points, std::uint64_t seed,
                                unsigned threads = 0, ScalingWindow window = {}) {
    if (n_points < 3) throw ParameterError("scaling study needs at least three points");
    if (window.lo == window.hi) window = default_window(axis);
    ScalingFit fit;
    fit.axis = axis;
    fit.points.resize(static_cast<std::size_t>(n_points));
    Engine rng = make_stream(seed, 0);
    std::uniform_real_distribution<double> u(window.lo, window.hi);
    for (auto& pt : fit.points) {
        const double s = u(rng);
        pt.P = window.log10_uniform ? std::pow(10.0, s) : s;
    }
    parallel_for(fit.points.size(), threads, [&](std::size_t i) {
        ScalingPoint& pt = fit.points[i];
        ShapeRatios r = base;
        (axis == RatioAxis::P1 ? r.P1 : axis == RatioAxis::P2 ? r.P2 : r.P3) = pt.P;
        try {
            pt.params = params_from_ratios(r);
            pt.params.validate();
            pt.K_c = solve_critical(pt.params).K_c;
        } catch (const Error& e) {
            pt.skipped = true;
            pt.note = e.what();
        }
    });
    std::vector<double> xs, ys;
    for (const auto& pt : fit.points) {
        if (pt.skipped) continue;
        xs.push_back(axis == RatioAxis::P2 ? pt.P : std::log(pt.P));
        ys.push_back(std::log(pt.K_c));
    }
    fit.used = static_cast<int>(xs.size());
    const LinearFit lf = fit_line(xs, ys);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r2 = lf.r2;
    return fit;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& s) {
    const auto old = os.precision(12);
    os << "K,lambda1,lambda2,F\n";
    std::vector<SweepSample> rows = s.samples;
    std::sort(rows.begin(), rows.end(), [](const SweepSample& a, const SweepSample& b) { return a.K < b.K; });
    for (const auto& r : rows) os << r.K << ',' << r.lambda1 << ',' << r.lambda2 << ',' << r.F << '\n';
    os.precision(old);
}

inline void write_scaling_csv(std::ostream& os, const ScalingFit& f) {
    const auto old = os.precision(12);
    os << "axis,P,L1,L2,L3,L4,K_c,skipped,note\n";
    for (const auto& p : f.points)
        os << to_string(f.axis) << ',' << p.P << ',' << p.params.L1 << ',' << p.params.L2 << ',' << p.params.L3
           << ',' << p.params.L4 << ',' << p.K_c << ',' << (p.skipped ? 1 : 0) << ",\"" << p.note << "\"\n";
    os.precision(old);
}

}  // namespace anderson
