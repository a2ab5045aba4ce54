#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "anderson/landscape.hpp"
#include "anderson/stochastic.hpp"

using namespace anderson;

namespace {

PotentialField flat(const GridSpec& g, double v) {
    return PotentialField::from_values(g, std::vector<double>(static_cast<std::size_t>(g.cell_count()), v));
}

PathConfig paths(int n, std::uint64_t seed, double dt = 1e-4) {
    PathConfig c;
    c.n_paths = n;
    c.seed = seed;
    c.dt = dt;
    return c;
}

/// FD landscape value at x by linear interpolation between nodes.
double fd_at(const Landscape& ls, double x) {
    const auto& xs = ls.nodes.x;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<Eigen::Index>(std::clamp<std::ptrdiff_t>(it - xs.begin(), 1, static_cast<std::ptrdiff_t>(xs.size()) - 1));
    const double t = (x - xs[static_cast<std::size_t>(i - 1)]) / (xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(i - 1)]);
    return (1 - t) * ls.w[i - 1] + t * ls.w[i];
}

}  // namespace

TEST(Stochastic, PathsStayInsideTheDomain) {
    Engine rng = make_stream(1, 0);
    for (int dim : {1, 2}) {
        const Path p = simulate_reflecting_path(dim, {0.02, 0.97}, 1e-3, 2000, rng);
        ASSERT_EQ(p.x.size(), 2001u);
        for (std::size_t k = 0; k < p.x.size(); ++k)
            for (int a = 0; a < dim; ++a) {
                EXPECT_GE(p.x[k][static_cast<std::size_t>(a)], 0.0);
                EXPECT_LE(p.x[k][static_cast<std::size_t>(a)], 1.0);
            }
    }
}

TEST(Stochastic, LocalTimeOnlyOnContact) {
    Engine rng = make_stream(2, 0);
    const Path p = simulate_reflecting_path(1, {0.01, 0.0}, 1e-4, 5000, rng);
    int contacts = 0;
    for (double df : p.local_time) {
        EXPECT_GE(df, 0.0);
        contacts += df > 0.0;
    }
    EXPECT_GT(contacts, 0);

    // Far from the faces no step can cross, so every increment is zero.
    Engine r2 = make_stream(3, 0);
    const Path q = simulate_reflecting_path(1, {0.5, 0.0}, 1e-8, 100, r2);
    for (double df : q.local_time) EXPECT_EQ(df, 0.0);
}

TEST(Stochastic, MeanDisplacementIsZero) {
    const int n = 10000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        Engine rng = make_stream(11, static_cast<std::uint64_t>(i));
        const Path p = simulate_reflecting_path(1, {0.5, 0.0}, 1e-4, 100, rng);
        const double d = p.x.back()[0] - 0.5;
        sum += d;
        sum2 += d * d;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean), 3 * se);
    // Variance of the increment is 2 t for the Laplacian generator.
    EXPECT_NEAR(sum2 / n, 2 * 0.01, 0.05 * 0.02);
}

TEST(Stochastic, StartOutsideDomainRejected) {
    Engine rng = make_stream(0, 0);
    EXPECT_THROW(simulate_reflecting_path(1, {1.5, 0.0}, 1e-4, 10, rng), DomainError);
    const GridSpec g{1, 4, 8};
    EXPECT_THROW(estimate_landscape_mc({-0.1, 0.0}, flat(g, 1.0), 1.0, BoundaryCondition::neumann(), paths(10, 0)),
                 DomainError);
}

TEST(Stochastic, ConstantPotentialNeumann) {
    const GridSpec g{1, 4, 8};
    const double K = 100.0;
    const auto e = estimate_landscape_mc({0.5, 0.0}, flat(g, 1.0), K, BoundaryCondition::neumann(), paths(10000, 4));
    // Every path carries the same weight; only the 1e-10 weight floor truncates.
    EXPECT_LE(std::abs(e.mean - 1.0 / K), 3 * e.std_error + 1e-10 / K);
}

TEST(Stochastic, FreeDirichletExitTime) {
    const GridSpec g{1, 4, 8};
    const auto e = estimate_landscape_mc({0.5, 0.0}, flat(g, 0.0), 0.0, BoundaryCondition::dirichlet(), paths(10000, 5));
    EXPECT_NEAR(e.mean, 0.125, 3 * e.std_error);
    EXPECT_EQ(e.killed, e.n_paths);
}

TEST(Stochastic, TimeStepBiasOnConstantPotential) {
    const GridSpec g{1, 4, 8};
    const double K = 100.0;
    const auto a = estimate_landscape_mc({0.5, 0.0}, flat(g, 1.0), K, BoundaryCondition::neumann(), paths(10000, 6, 1e-4));
    const auto b = estimate_landscape_mc({0.5, 0.0}, flat(g, 1.0), K, BoundaryCondition::neumann(), paths(10000, 6, 5e-5));
    EXPECT_LE(std::abs(a.mean - b.mean), a.std_error + 1e-10 / K);

    // Halving dt on the absorbed case keeps both estimates within 3 standard errors of the exact value.
    for (double dt : {1e-4, 5e-5}) {
        const auto d = estimate_landscape_mc({0.3, 0.0}, flat(g, 0.0), 0.0, BoundaryCondition::dirichlet(), paths(10000, 7, dt));
        EXPECT_NEAR(d.mean, 0.3 * 0.7 / 2, 3 * d.std_error) << dt;
    }
}

TEST(Stochastic, MatchesFiniteDifferenceLandscape) {
    const GridSpec g = GridSpec::with_default_resolution(1, 30);
    const auto f = sample_potential(g, DistributionSpec::bernoulli(0.5), 12);
    const double K = 8000.0;
    const GridSpec fine{1, 30, 64};
    const auto ff = PotentialField::from_values(fine, f.cell_values);
    const auto ls = compute_landscape(fine, ff, K, BoundaryCondition::neumann());
    for (double x : {0.05, 0.27, 0.5, 0.71, 0.93}) {
        const auto e = estimate_landscape_mc({x, 0.0}, f, K, BoundaryCondition::neumann(), paths(10000, 13, 1e-5));
        EXPECT_NEAR(e.mean, fd_at(ls, x), 3 * e.std_error) << x;
    }
}

TEST(Stochastic, StiffRobinApproachesDirichlet) {
    const GridSpec g = GridSpec::with_default_resolution(1, 10);
    const auto f = sample_potential(g, DistributionSpec::bernoulli(0.5), 2);
    for (double x : {0.2, 0.5}) {
        const auto r = estimate_landscape_mc({x, 0.0}, f, 50.0, BoundaryCondition::robin(1e4), paths(10000, 21, 1e-5));
        const auto d = estimate_landscape_mc({x, 0.0}, f, 50.0, BoundaryCondition::dirichlet(), paths(10000, 22, 1e-5));
        EXPECT_NEAR(r.mean, d.mean, 3 * std::hypot(r.std_error, d.std_error)) << x;
    }
}

TEST(Stochastic, SampledFmInequality) {
    const GridSpec g = GridSpec::with_default_resolution(1, 20);
    const auto f = sample_potential(g, DistributionSpec::bernoulli(0.5), 5);
    const double K = 2000.0;
    const auto op = assemble(g, f, K, BoundaryCondition::neumann());
    const auto pair = smallest_eigenpairs(op, 1)[0];
    for (int node : {8, 40, 81, 120, 150}) {
        const double x = op.nodes.x[static_cast<std::size_t>(node)];
        const auto e = estimate_landscape_mc({x, 0.0}, f, K, BoundaryCondition::neumann(), paths(4000, 31, 1e-5));
        EXPECT_GE(pair.lambda * (e.mean + 3 * e.std_error), std::abs(pair.u[node])) << x;
    }
}

TEST(Stochastic, TwoDimensionalConstantPotential) {
    const GridSpec g{2, 4, 4};
    const double K = 50.0;
    const auto e = estimate_landscape_mc({0.3, 0.6}, flat(g, 1.0), K, BoundaryCondition::robin(0.0), paths(2000, 3));
    EXPECT_LE(std::abs(e.mean - 1.0 / K), 3 * e.std_error + 1e-10 / K);
}

TEST(Stochastic, ThreadCountDoesNotChangeTheEstimate) {
    const GridSpec g = GridSpec::with_default_resolution(1, 10);
    const auto f = sample_potential(g, DistributionSpec::bernoulli(0.5), 8);
    PathConfig a = paths(500, 77);
    a.threads = 1;
    PathConfig b = a;
    b.threads = 3;
    const auto ea = estimate_landscape_mc({0.4, 0.0}, f, 300.0, BoundaryCondition::robin(0.5), a);
    const auto eb = estimate_landscape_mc({0.4, 0.0}, f, 300.0, BoundaryCondition::robin(0.5), b);
    EXPECT_EQ(ea.mean, eb.mean);
    EXPECT_EQ(ea.std_error, eb.std_error);
}

TEST(Stochastic, PeriodicIsUnsupported) {
    const GridSpec g{1, 4, 8};
    EXPECT_THROW(estimate_landscape_mc({0.5, 0.0}, flat(g, 1.0), 1.0, BoundaryCondition::periodic(), paths(10, 0)),
                 UnsupportedError);
}
