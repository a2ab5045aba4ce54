#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/parallel.hpp"
#include "anderson/random.hpp"

namespace anderson {

/// Independent-run model of a 1D Bernoulli lattice.
///
/// p = P(V = 1), q = P(V = 0) per cell. Zero runs X_1..X_M are i.i.d. with
/// P(X = n) = q^(n-1) p, and M is the expected number of zero/one periods.
struct RunModel {
    double p = 0.5;
    double q = 0.5;
    int N = 0;  ///< lattice size the model was derived from (0 if M was given directly)
    int M = 1;

    /// M = round(N p q), ties to even.
    static RunModel from_lattice(double p, int N) {
        if (N < 1) throw ParameterError("N must be >= 1");
        RunModel m = with_periods(p, 1);
        m.N = N;
        // Snap near-ties so that M is symmetric under p <-> q despite rounding in N p q.
        double x = N * m.p * m.q;
        const double half = std::round(2.0 * x) / 2.0;
        if (std::abs(x - half) <= 1e-9 * std::max(1.0, x)) x = half;
        m.M = static_cast<int>(std::nearbyint(x));
        if (m.M < 1) throw ParameterError("N p q rounds to zero periods");
        return m;
    }

    static RunModel with_periods(double p, int M) {
        if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
        if (p == 0.0 || p == 1.0) throw DegenerateError("p in {0, 1} leaves no alternating runs");
        if (M < 1) throw ParameterError("M must be >= 1");
        RunModel m;
        m.p = p;
        m.q = 1.0 - p;
        m.M = M;
        return m;
    }

    double periods_exact() const { return N * p * q; }
    int periods_floor() const { return static_cast<int>(std::floor(periods_exact())); }
    int periods_ceil() const { return static_cast<int>(std::ceil(periods_exact())); }

    /// Truncation index: smallest n with n q^n < 1e-14.
    int n_max() const {
        int n = 1;
        double qn = q;
        while (n * qn >= 1e-14) {
            ++n;
            qn *= q;
        }
        return n;
    }
};

/// Bound on the dropped tail q^n_max / (1 - q) of every single series.
inline double series_tail_bound(const RunModel& m) {
    return std::pow(m.q, m.n_max()) / (1.0 - m.q);
}

namespace detail {

/// (1 - q^e)^k with e >= 0; 0^0 counts as 1.
inline double one_minus_pow(double q, int e, int k) {
    if (k == 0) return 1.0;
    return std::pow(1.0 - std::pow(q, e), k);
}

}  // namespace detail

/// Probability that the longest extended zero run touches the boundary
/// (reflecting ends; an end run is mirrored to twice its length).
inline double analytic_boundary_prob(const RunModel& m) {
    const double p = m.p, q = m.q;
    const int nmax = m.n_max();
    // Both ends zero: sum over m, n of (1 - q^(2 max(m,n) - 1))^(M-2) q^(m-1) p q^(n-1) p, by k = m + n.
    double both = 0.0;
    if (m.M >= 2) {
        for (int k = 2; k <= 2 * nmax; ++k) {
            double inner = 0.0;
            for (int n = 1; n < k; ++n) inner += detail::one_minus_pow(q, 2 * std::max(k - n, n) - 1, m.M - 2);
            both += std::pow(q, k - 2) * inner;
        }
        both *= p * p;
    }
    double one = 0.0;
    for (int n = 1; n <= nmax; ++n) one += detail::one_minus_pow(q, 2 * n - 1, m.M - 1) * std::pow(q, n - 1);
    one *= p;
    return std::clamp(q * q * both + 2.0 * p * q * one, 0.0, 1.0);
}

/// Probability that the longest zero run is not unique (absorbing ends).
inline double analytic_multimodal_dirichlet(const RunModel& m) {
    const double p = m.p, q = m.q;
    double s = 0.0;
    for (int n = 1; n <= m.n_max(); ++n) s += detail::one_minus_pow(q, n - 1, m.M - 1) * std::pow(q, n - 1);
    return std::clamp(1.0 - m.M * p * s, 0.0, 1.0);
}

/// Conditional probabilities of a unique longest extended run for the four
/// boundary configurations (V(0), V(1)) = (0,0), (0,1), (1,0), (1,1).
struct NeumannParts {
    double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
};

inline NeumannParts neumann_parts(const RunModel& m) {
    if (m.M < 3) throw UnsupportedError("the reflecting multimodal formula needs M >= 3");
    const double p = m.p, q = m.q;
    const int M = m.M;
    double a = 0, b = 0, c = 0, d = 0;
    for (int n = 1; n <= m.n_max(); ++n) {
        const double geo = std::pow(q, n - 1) * p;
        const int half = (n - 1) / 2;
        a += detail::one_minus_pow(q, half, 2) * detail::one_minus_pow(q, n - 1, M - 3) * geo;
        b += detail::one_minus_pow(q, 2 * n - 1, M - 2) * (1.0 - std::pow(q, n - 1)) * geo;
        c += (1.0 - std::pow(q, half)) * detail::one_minus_pow(q, n - 1, M - 2) * geo;
        d += detail::one_minus_pow(q, 2 * n - 1, M - 1) * geo;
    }
    NeumannParts parts;
    parts.p1 = (M - 2) * a + 2.0 * b;
    parts.p2 = (M - 1) * c + d;
    parts.p3 = parts.p2;
    parts.p4 = 1.0 - analytic_multimodal_dirichlet(m);
    return parts;
}

/// Probability that the longest extended zero run is not unique (reflecting ends).
inline double analytic_multimodal_neumann(const RunModel& m) {
    const NeumannParts s = neumann_parts(m);
    const double p = m.p, q = m.q;
    const double unimodal = q * q * s.p1 + p * q * s.p2 + p * q * s.p3 + p * p * s.p4;
    return std::clamp(1.0 - unimodal, 0.0, 1.0);
}

/// One draw of the run model.
struct RunConfig {
    int v0 = 1, v1 = 1;        ///< potential value at x = 0 and x = 1
    std::vector<int> lengths;  ///< zero-run lengths X_1..X_M, left to right

    /// Lengths after mirroring the end runs that touch a zero boundary.
    std::vector<int> extended() const {
        std::vector<int> e = lengths;
        if (!e.empty() && v0 == 0) e.front() *= 2;
        if (e.size() > 1 && v1 == 0) e.back() *= 2;
        return e;
    }
};

struct RunFlags {
    bool longest_extended_on_boundary = false;
    bool unique_longest_plain = false;
    bool unique_longest_extended = false;
};

namespace detail {

/// Index of the unique maximum, or -1 on a tie (or empty input).
inline int unique_argmax(const std::vector<int>& v) {
    if (v.empty()) return -1;
    const auto top = std::max_element(v.begin(), v.end());
    return std::count(v.begin(), v.end(), *top) == 1 ? static_cast<int>(top - v.begin()) : -1;
}

}  // namespace detail

/// Event flags compared exactly on integer run lengths.
///
/// The boundary event holds when some mirrored end run is strictly longer
/// than every interior run (the two end runs may tie with each other).
inline RunFlags evaluate_flags(const RunConfig& rc) {
    RunFlags f;
    const std::vector<int> ext = rc.extended();
    const int m = static_cast<int>(ext.size());
    f.unique_longest_plain = detail::unique_argmax(rc.lengths) >= 0;
    f.unique_longest_extended = detail::unique_argmax(ext) >= 0;
    int end_best = 0, interior_best = 0;
    for (int k = 0; k < m; ++k) {
        const bool end = (k == 0 && rc.v0 == 0) || (k == m - 1 && rc.v1 == 0);
        int& best = end ? end_best : interior_best;
        best = std::max(best, ext[static_cast<std::size_t>(k)]);
    }
    f.longest_extended_on_boundary = end_best > interior_best;
    return f;
}

template <class Rng>
RunConfig sample_run_config(const RunModel& m, Rng& rng) {
    std::bernoulli_distribution zero_end(m.q);
    std::geometric_distribution<int> failures(m.p);  // failures before the first success
    RunConfig rc;
    rc.v0 = zero_end(rng) ? 0 : 1;
    rc.v1 = zero_end(rng) ? 0 : 1;
    rc.lengths.resize(static_cast<std::size_t>(m.M));
    for (int& x : rc.lengths) x = 1 + failures(rng);
    return rc;
}

struct Frequency {
    double p_hat = 0.0;
    double std_error = 0.0;
    long long hits = 0;
    long long n = 0;
};

inline Frequency make_frequency(long long hits, long long n) {
    Frequency f;
    f.hits = hits;
    f.n = n;
    f.p_hat = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    f.std_error = n > 0 ? std::sqrt(f.p_hat * (1.0 - f.p_hat) / static_cast<double>(n)) : 0.0;
    return f;
}

struct RunOracle {
    Frequency boundary;           ///< longest extended run on the boundary
    Frequency multimodal_plain;   ///< longest plain run not unique
    Frequency multimodal_extended;  ///< longest extended run not unique
};

/// Monte Carlo over the run model itself. Samples are drawn in blocks of
/// 4096 with block b using stream (seed, b), so results are thread-count
/// independent.
inline RunOracle run_oracle(const RunModel& m, long long n_samples, std::uint64_t seed, unsigned threads = 0) {
    if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
    constexpr long long block = 4096;
    const auto blocks = static_cast<std::size_t>((n_samples + block - 1) / block);
    std::vector<std::array<long long, 3>> counts(blocks, {0, 0, 0});
    parallel_for(blocks, threads, [&](std::size_t b) {
        Engine rng = make_stream(seed, b);
        const long long lo = static_cast<long long>(b) * block;
        const long long hi = std::min(n_samples, lo + block);
        for (long long s = lo; s < hi; ++s) {
            const RunFlags f = evaluate_flags(sample_run_config(m, rng));
            counts[b][0] += f.longest_extended_on_boundary;
            counts[b][1] += !f.unique_longest_plain;
            counts[b][2] += !f.unique_longest_extended;
        }
    });
    std::array<long long, 3> total{0, 0, 0};
    for (const auto& c : counts)
        for (int k = 0; k < 3; ++k) total[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(k)];
    RunOracle o;
    o.boundary = make_frequency(total[0], n_samples);
    o.multimodal_plain = make_frequency(total[1], n_samples);
    o.multimodal_extended = make_frequency(total[2], n_samples);
    return o;
}

struct RunStatsRow {
    RunModel model;
    double P_b = 0, P_D = 0, P_N = std::numeric_limits<double>::quiet_NaN();
    RunOracle oracle;
};

inline RunStatsRow evaluate_run_stats(const RunModel& m, long long n_samples, std::uint64_t seed,
                                      unsigned threads = 0) {
    RunStatsRow r;
    r.model = m;
    r.P_b = analytic_boundary_prob(m);
    r.P_D = analytic_multimodal_dirichlet(m);
    if (m.M >= 3) r.P_N = analytic_multimodal_neumann(m);
    if (n_samples > 0) r.oracle = run_oracle(m, n_samples, seed, threads);
    return r;
}

inline void write_run_stats_csv(std::ostream& os, const std::vector<RunStatsRow>& rows) {
    os << "p,N,M,M_floor,M_ceil,P_b,P_D,P_N,oracle_P_b,se_P_b,oracle_P_D,se_P_D,oracle_P_N,se_P_N\n";
    const auto old = os.precision(10);
    for (const auto& r : rows) {
        os << r.model.p << ',' << r.model.N << ',' << r.model.M << ',' << r.model.periods_floor() << ','
           << r.model.periods_ceil() << ',' << r.P_b << ',' << r.P_D << ',' << r.P_N << ','
           << r.oracle.boundary.p_hat << ',' << r.oracle.boundary.std_error << ','
           << r.oracle.multimodal_plain.p_hat << ',' << r.oracle.multimodal_plain.std_error << ','
           << r.oracle.multimodal_extended.p_hat << ',' << r.oracle.multimodal_extended.std_error << '\n';
    }
    os.precision(old);
}

}  // namespace anderson
