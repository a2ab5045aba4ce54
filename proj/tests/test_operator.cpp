#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "anderson/operator.hpp"
#include "anderson/potential.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

constexpr double pi2 = std::numbers::pi * std::numbers::pi;

PotentialField flat(const GridSpec& g, double v) {
    return PotentialField::from_values(g, std::vector<double>(static_cast<std::size_t>(g.cell_count()), v));
}

double asymmetry(const DiscreteOperator& op) {
    const Eigen::MatrixXd S(op.stiffness);
    return (S - S.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Operator, AssembledMatricesAreSymmetric) {
    const GridSpec g1 = GridSpec::with_default_resolution(1, 30);
    const GridSpec g2 = GridSpec::with_default_resolution(2, 8);
    for (const Boundary& bc : {Boundary(BoundaryCondition::dirichlet()), Boundary(BoundaryCondition::neumann()),
                               Boundary(BoundaryCondition::robin(3.0)), Boundary(BoundaryCondition::periodic())}) {
        const auto f = sample_potential(g1, DistributionSpec::uniform(0, 1), 4);
        EXPECT_EQ(asymmetry(assemble(g1, f, 500.0, bc)), 0.0);
    }
    for (const Boundary& bc : {Boundary(BoundaryCondition::dirichlet()), Boundary(BoundaryCondition::neumann()),
                               Boundary(BoundaryCondition::robin(0.5))}) {
        const auto f = sample_potential(g2, DistributionSpec::bernoulli(0.5), 4);
        EXPECT_EQ(asymmetry(assemble(g2, f, 500.0, bc)), 0.0);
    }
}

TEST(Operator, NeumannConstantKernel) {
    for (int dim : {1, 2}) {
        const GridSpec g = GridSpec::with_default_resolution(dim, 10);
        const auto op = assemble(g, flat(g, 0.0), 0.0, BoundaryCondition::neumann());
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.node_count());
        EXPECT_LT(op.apply(ones).cwiseAbs().maxCoeff(), 1e-9) << dim;
    }
}

TEST(Operator, DirichletRowsDiagonallyDominant) {
    const GridSpec g = GridSpec::with_default_resolution(2, 6);
    const auto op = assemble(g, sample_potential(g, DistributionSpec::bernoulli(0.5), 1), 10.0,
                             BoundaryCondition::dirichlet());
    const Eigen::MatrixXd S(op.stiffness);
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        const double off = S.row(i).cwiseAbs().sum() - std::abs(S(i, i));
        EXPECT_GE(S(i, i), off - 1e-9);
    }
}

TEST(Operator, DirichletIntervalSpectrum) {
    const GridSpec g{1, 50, 8};
    const auto op = assemble(g, flat(g, 0.0), 0.0, BoundaryCondition::dirichlet());
    const Eigen::VectorXd ev = oracle::dense_eigenvalues(op);
    for (int j = 1; j <= 4; ++j) EXPECT_NEAR(ev[j - 1], j * j * pi2, 0.01 * j * j * pi2);
}

TEST(Operator, SecondOrderConvergence) {
    auto err = [](int cells) {
        const GridSpec g{1, cells, 4};
        const auto op = assemble(g, flat(g, 0.0), 0.0, BoundaryCondition::dirichlet());
        return std::abs(oracle::dense_eigenvalues(op)[0] - pi2);
    };
    const double ratio = err(10) / err(20);
    EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(Operator, MixedNeumannDirichletQuarterWave) {
    const GridSpec g{1, 50, 8};
    const auto op = assemble(g, flat(g, 0.0), 0.0,
                             Boundary::mixed(BoundaryCondition::neumann(), BoundaryCondition::dirichlet()));
    EXPECT_NEAR(oracle::dense_eigenvalues(op)[0], pi2 / 4, 0.01 * pi2 / 4);
}

TEST(Operator, RobinApproachesDirichletFromBelow) {
    const GridSpec g{1, 40, 8};
    const auto f = sample_potential(g, DistributionSpec::bernoulli(0.5), 8);
    const double dir = oracle::dense_eigenvalues(assemble(g, f, 100.0, BoundaryCondition::dirichlet()))[0];
    const double r2 = oracle::dense_eigenvalues(assemble(g, f, 100.0, BoundaryCondition::robin(1e2)))[0];
    const double r4 = oracle::dense_eigenvalues(assemble(g, f, 100.0, BoundaryCondition::robin(1e4)))[0];
    EXPECT_LT(r2, r4);
    EXPECT_LT(r4, dir);
    EXPECT_LT(dir - r4, dir - r2);
}

TEST(Operator, PeriodicIn2DIsUnsupported) {
    const GridSpec g = GridSpec::with_default_resolution(2, 4);
    EXPECT_THROW(assemble(g, flat(g, 0.0), 1.0, BoundaryCondition::periodic()), UnsupportedError);
    EXPECT_THROW(assemble(GridSpec{1, 4, 8}, flat(GridSpec{1, 4, 8}, 0.0), 1.0,
                          Boundary::mixed(BoundaryCondition::periodic(), BoundaryCondition::neumann())),
                 UnsupportedError);
}

TEST(Operator, NegativeKRejected) {
    const GridSpec g{1, 4, 8};
    EXPECT_THROW(assemble(g, flat(g, 0.0), -1.0, BoundaryCondition::neumann()), ParameterError);
}

TEST(Operator, PeriodicShiftInvariance) {
    const int m = 240;
    std::vector<double> x(m + 1), v(m);
    for (int i = 0; i <= m; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / m;
    Engine rng = make_stream(5, 0);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = coin(rng) ? 1.0 : 0.0;
    const Eigen::VectorXd base =
        oracle::dense_eigenvalues(assemble_line(x, v, 400.0, BoundaryCondition::periodic())).head(6);
    for (int shift : {1, 7, 100, 239}) {
        std::vector<double> s(m);
        for (int i = 0; i < m; ++i) s[static_cast<std::size_t>((i + shift) % m)] = v[static_cast<std::size_t>(i)];
        const Eigen::VectorXd ev =
            oracle::dense_eigenvalues(assemble_line(x, s, 400.0, BoundaryCondition::periodic())).head(6);
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(ev[j], base[j], 1e-8 * base[j]) << shift;
    }
}

TEST(Operator, PiecewiseLineMeshContainsBreakpoints) {
    const PiecewiseLine line{{0.0, 0.2, 1.0 / 3.0, 1.0}, {1, 0, 1}};
    const auto x = line.mesh(0.01);
    for (double e : line.edges) EXPECT_NE(std::find(x.begin(), x.end(), e), x.end());
    const auto vals = line.interval_values(x);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double mid = 0.5 * (x[i] + x[i + 1]);
        EXPECT_EQ(vals[i], mid > 0.2 && mid < 1.0 / 3.0 ? 0.0 : 1.0);
    }
}

TEST(Operator, TripletExportListsEveryEntry) {
    const GridSpec g{1, 3, 2};
    const auto op = assemble(g, flat(g, 1.0), 1.0, BoundaryCondition::neumann());
    std::stringstream ss;
    write_triplets(ss, op);
    int lines = 0;
    std::string line;
    while (std::getline(ss, line)) ++lines;
    EXPECT_EQ(lines, op.stiffness.nonZeros());
}
