#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "anderson/errors.hpp"
#include "anderson/partition.hpp"
#include "anderson/potential.hpp"

namespace anderson {

enum class BoundaryKind { dirichlet, neumann, robin, periodic };

/// g du/dn + h u = 0 with (g, h) = (0, 1) Dirichlet, (1, 0) Neumann, (1, h) Robin.
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::neumann;
    double h = 0.0;  ///< Robin coefficient (constant)

    static BoundaryCondition dirichlet() { return {BoundaryKind::dirichlet, 0.0}; }
    static BoundaryCondition neumann() { return {BoundaryKind::neumann, 0.0}; }
    static BoundaryCondition robin(double h) { return {BoundaryKind::robin, h}; }
    static BoundaryCondition periodic() { return {BoundaryKind::periodic, 0.0}; }

    double g() const { return kind == BoundaryKind::dirichlet ? 0.0 : 1.0; }
    double h_coefficient() const {
        switch (kind) {
            case BoundaryKind::dirichlet: return 1.0;
            case BoundaryKind::robin: return h;
            default: return 0.0;
        }
    }
    /// Neumann or Robin: the wave is reflected rather than pinned to zero.
    bool reflecting() const { return kind == BoundaryKind::neumann || kind == BoundaryKind::robin; }

    void validate() const {
        if (kind == BoundaryKind::robin && !(h >= 0.0)) throw ParameterError("robin h must be >= 0");
    }

    bool operator==(const BoundaryCondition&) const = default;
};

inline const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::dirichlet: return "dirichlet";
        case BoundaryKind::neumann: return "neumann";
        case BoundaryKind::robin: return "robin";
        case BoundaryKind::periodic: return "periodic";
    }
    return "?";
}

/// Condition on each side of the domain, indexed by Side. A single
/// BoundaryCondition converts to "same on every side".
struct Boundary {
    std::array<BoundaryCondition, 4> sides{};

    Boundary() = default;
    Boundary(BoundaryCondition bc) { sides.fill(bc); }  // NOLINT: implicit by intent

    /// 1D with different conditions at x = 0 and x = 1.
    static Boundary mixed(BoundaryCondition left, BoundaryCondition right) {
        Boundary b(left);
        b.sides[1] = right;
        return b;
    }

    const BoundaryCondition& at(Side s) const { return sides[static_cast<int>(s)]; }
    bool periodic() const { return sides[0].kind == BoundaryKind::periodic; }
    bool any_dirichlet(int dim) const {
        for (int s = 0; s < 2 * dim; ++s)
            if (sides[static_cast<std::size_t>(s)].kind == BoundaryKind::dirichlet) return true;
        return false;
    }

    void validate(int dim) const {
        int periodic_sides = 0;
        for (int s = 0; s < 2 * dim; ++s) {
            sides[static_cast<std::size_t>(s)].validate();
            periodic_sides += sides[static_cast<std::size_t>(s)].kind == BoundaryKind::periodic;
        }
        if (periodic_sides != 0 && dim != 1)
            throw UnsupportedError("periodic boundary conditions are supported in 1D only");
        if (periodic_sides != 0 && periodic_sides != 2)
            throw UnsupportedError("periodic must be set on both ends");
    }

    bool operator==(const Boundary&) const = default;
};

/// Tensor-product node coordinates; y == {0} in 1D.
struct NodeGrid {
    int dim = 1;
    std::vector<double> x;
    std::vector<double> y{0.0};

    int nx() const { return static_cast<int>(x.size()); }
    int ny() const { return static_cast<int>(y.size()); }
    int node_count() const { return nx() * ny(); }
    int index(int i, int j = 0) const { return i + nx() * j; }

    static NodeGrid uniform(int dim, int intervals, double length = 1.0) {
        NodeGrid g;
        g.dim = dim;
        g.x.resize(static_cast<std::size_t>(intervals) + 1);
        for (int i = 0; i <= intervals; ++i) g.x[static_cast<std::size_t>(i)] = length * i / intervals;
        if (dim == 2) g.y = g.x;
        return g;
    }

    static NodeGrid for_lattice(const GridSpec& grid) {
        return uniform(grid.dim, grid.cells_per_side * grid.nodes_per_cell);
    }
};

/// A 1D piecewise-constant potential with arbitrary breakpoints.
/// values[i] holds on [edges[i], edges[i+1]).
struct PiecewiseLine {
    std::vector<double> edges;
    std::vector<double> values;

    double length() const { return edges.back() - edges.front(); }

    /// Node mesh whose nodes include every breakpoint, with uniform spacing
    /// close to `spacing` inside each piece.
    std::vector<double> mesh(double spacing) const {
        std::vector<double> x{edges.front()};
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            const double a = edges[p], b = edges[p + 1];
            const int n = std::max(1, static_cast<int>(std::lround((b - a) / spacing)));
            for (int k = 1; k < n; ++k) x.push_back(a + (b - a) * k / n);
            x.push_back(b);
        }
        return x;
    }

    /// Value on each mesh interval; the mesh must contain every breakpoint.
    std::vector<double> interval_values(const std::vector<double>& x) const {
        std::vector<double> v(x.size() - 1);
        std::size_t piece = 0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double mid = 0.5 * (x[i] + x[i + 1]);
            while (piece + 1 < values.size() && mid >= edges[piece + 1]) ++piece;
            v[i] = values[piece];
        }
        return v;
    }
};

/// Discrete Hamiltonian -Laplacian + K V on the active nodes of a grid.
///
/// Stored as the symmetric stiffness matrix S and lumped (trapezoid) node
/// weights d; the operator is A = diag(d)^-1 S, so A u = lambda u is the
/// generalized problem S u = lambda diag(d) u. Neumann and Robin sides use
/// mirror ghost nodes (second order); Dirichlet nodes are eliminated; a node
/// on a cell interface carries the area-weighted mean of its adjacent cells.
struct DiscreteOperator {
    NodeGrid nodes;
    Boundary boundary;
    double K = 0.0;
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;
    std::vector<int> active_nodes;    ///< active index -> node index
    std::vector<int> node_to_active;  ///< node index -> active index, -1 if eliminated
    std::uint64_t fingerprint = 0;    ///< identifies (grid, potential, K, bc)

    int node_count() const { return nodes.node_count(); }
    int active_count() const { return static_cast<int>(active_nodes.size()); }
    int dim() const { return nodes.dim; }

    Eigen::VectorXd to_active(const Eigen::VectorXd& full) const {
        Eigen::VectorXd a(active_count());
        for (int k = 0; k < active_count(); ++k) a[k] = full[active_nodes[static_cast<std::size_t>(k)]];
        return a;
    }
    Eigen::VectorXd to_nodes(const Eigen::VectorXd& active) const {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(node_count());
        for (int n = 0; n < node_count(); ++n) {
            const int a = node_to_active[static_cast<std::size_t>(n)];
            if (a >= 0) f[n] = active[a];
        }
        return f;
    }
    /// A u on active nodes.
    Eigen::VectorXd apply_active(const Eigen::VectorXd& active) const {
        return (stiffness * active).cwiseQuotient(mass);
    }
    /// A u on the full node vector; eliminated nodes map to 0.
    Eigen::VectorXd apply(const Eigen::VectorXd& full) const { return to_nodes(apply_active(to_active(full))); }
};

namespace detail {

inline void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

inline std::uint64_t fingerprint(const NodeGrid& g, const std::vector<double>& values, double K,
                                 const Boundary& bc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv_mix(h, &g.dim, sizeof g.dim);
    fnv_mix(h, g.x.data(), g.x.size() * sizeof(double));
    fnv_mix(h, g.y.data(), g.y.size() * sizeof(double));
    fnv_mix(h, values.data(), values.size() * sizeof(double));
    fnv_mix(h, &K, sizeof K);
    for (const auto& s : bc.sides) {
        const int k = static_cast<int>(s.kind);
        fnv_mix(h, &k, sizeof k);
        fnv_mix(h, &s.h, sizeof s.h);
    }
    return h;
}

/// Dual (control-volume) lengths of a node mesh: half the adjacent intervals.
inline std::vector<double> dual_lengths(const std::vector<double>& x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double d = x[i + 1] - x[i];
        w[i] += 0.5 * d;
        w[i + 1] += 0.5 * d;
    }
    return w;
}

/// Assembly on a tensor grid with Dirichlet/Neumann/Robin sides.
/// `fine_values` holds one potential value per fine cell (interval in 1D).
inline DiscreteOperator assemble_tensor(NodeGrid g, const std::vector<double>& fine_values, double K,
                                        const Boundary& bc) {
    const int nx = g.nx(), ny = g.ny(), dim = g.dim;
    const bool two_d = dim == 2;
    DiscreteOperator op;
    op.K = K;
    op.boundary = bc;
    op.fingerprint = fingerprint(g, fine_values, K, bc);

    const std::vector<double> wx = dual_lengths(g.x);
    const std::vector<double> wy = two_d ? dual_lengths(g.y) : std::vector<double>{1.0};

    op.node_to_active.assign(static_cast<std::size_t>(nx * ny), -1);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            bool pinned = (i == 0 && bc.at(Side::x_low).kind == BoundaryKind::dirichlet) ||
                          (i == nx - 1 && bc.at(Side::x_high).kind == BoundaryKind::dirichlet);
            if (two_d)
                pinned = pinned || (j == 0 && bc.at(Side::y_low).kind == BoundaryKind::dirichlet) ||
                         (j == ny - 1 && bc.at(Side::y_high).kind == BoundaryKind::dirichlet);
            if (!pinned) {
                op.node_to_active[static_cast<std::size_t>(g.index(i, j))] =
                    static_cast<int>(op.active_nodes.size());
                op.active_nodes.push_back(g.index(i, j));
            }
        }
    }
    const int n = op.active_count();
    if (n == 0) throw ParameterError("grid has no active nodes");
    op.mass.resize(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * (two_d ? 5 : 3));

    auto act = [&](int i, int j) { return op.node_to_active[static_cast<std::size_t>(g.index(i, j))]; };
    auto edge = [&](int a, int b, double c) {
        if (a >= 0) diag[a] += c;
        if (b >= 0) diag[b] += c;
        if (a >= 0 && b >= 0) {
            trip.emplace_back(a, b, -c);
            trip.emplace_back(b, a, -c);
        }
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) edge(act(i, j), act(i + 1, j), wy[j] / (g.x[i + 1] - g.x[i]));
    if (two_d)
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i < nx; ++i) edge(act(i, j), act(i, j + 1), wx[i] / (g.y[j + 1] - g.y[j]));

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (const int a = act(i, j); a >= 0) op.mass[a] = wx[i] * wy[j];

    // K V, lumped: each fine cell gives an equal share of its measure to its corners.
    if (K != 0.0) {
        if (!two_d) {
            for (int i = 0; i + 1 < nx; ++i) {
                const double share = 0.5 * K * fine_values[static_cast<std::size_t>(i)] * (g.x[i + 1] - g.x[i]);
                if (const int a = act(i, 0); a >= 0) diag[a] += share;
                if (const int b = act(i + 1, 0); b >= 0) diag[b] += share;
            }
        } else {
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i + 1 < nx; ++i) {
                    const double share = 0.25 * K * fine_values[static_cast<std::size_t>(i + (nx - 1) * j)] *
                                         (g.x[i + 1] - g.x[i]) * (g.y[j + 1] - g.y[j]);
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            if (const int a = act(i + di, j + dj); a >= 0) diag[a] += share;
                }
        }
    }

    // Robin: boundary integral of h u^2 over the node's dual face.
    auto robin = [&](Side s, int i, int j, double face) {
        const auto& c = bc.at(s);
        if (c.kind != BoundaryKind::robin) return;
        if (const int a = act(i, j); a >= 0) diag[a] += c.h * face;
    };
    for (int j = 0; j < ny; ++j) {
        robin(Side::x_low, 0, j, wy[j]);
        robin(Side::x_high, nx - 1, j, wy[j]);
    }
    if (two_d)
        for (int i = 0; i < nx; ++i) {
            robin(Side::y_low, i, 0, wx[i]);
            robin(Side::y_high, i, ny - 1, wx[i]);
        }

    for (int a = 0; a < n; ++a) trip.emplace_back(a, a, diag[a]);
    op.stiffness.resize(n, n);
    op.stiffness.setFromTriplets(trip.begin(), trip.end());
    op.stiffness.makeCompressed();
    op.nodes = std::move(g);
    return op;
}

/// Periodic 1D assembly: the last node is identified with the first.
inline DiscreteOperator assemble_periodic(NodeGrid g, const std::vector<double>& interval_values, double K) {
    const int nodes = g.nx();
    const int n = nodes - 1;
    if (n < 3) throw ParameterError("periodic mesh needs at least 3 intervals");
    DiscreteOperator op;
    op.K = K;
    op.boundary = Boundary(BoundaryCondition::periodic());
    op.fingerprint = fingerprint(g, interval_values, K, op.boundary);
    op.node_to_active.resize(static_cast<std::size_t>(nodes));
    for (int i = 0; i < n; ++i) {
        op.node_to_active[static_cast<std::size_t>(i)] = i;
        op.active_nodes.push_back(i);
    }
    op.node_to_active[static_cast<std::size_t>(n)] = 0;
    op.mass = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i) {
        const int a = i, b = (i + 1) % n;
        const double d = g.x[static_cast<std::size_t>(i) + 1] - g.x[static_cast<std::size_t>(i)];
        const double c = 1.0 / d;
        diag[a] += c;
        diag[b] += c;
        trip.emplace_back(a, b, -c);
        trip.emplace_back(b, a, -c);
        op.mass[a] += 0.5 * d;
        op.mass[b] += 0.5 * d;
        const double share = 0.5 * K * interval_values[static_cast<std::size_t>(i)] * d;
        diag[a] += share;
        diag[b] += share;
    }
    for (int a = 0; a < n; ++a) trip.emplace_back(a, a, diag[a]);
    op.stiffness.resize(n, n);
    op.stiffness.setFromTriplets(trip.begin(), trip.end());
    op.stiffness.makeCompressed();
    op.nodes = std::move(g);
    return op;
}

inline std::vector<double> fine_cell_values(const PotentialField& field) {
    const GridSpec& gs = field.grid;
    const int m = gs.cells_per_side * gs.nodes_per_cell;
    const int r = gs.nodes_per_cell;
    if (gs.dim == 1) {
        std::vector<double> v(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = field.cell(i / r);
        return v;
    }
    std::vector<double> v(static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i + m * j)] = field.cell(i / r, j / r);
    return v;
}

}  // namespace detail

/// Assembles -Laplacian + K V for a lattice potential.
inline DiscreteOperator assemble(const GridSpec& grid, const PotentialField& field, double K,
                                 const Boundary& bc) {
    grid.validate();
    if (!(field.grid == grid)) throw UsageError("potential field was sampled on a different grid");
    if (!(K >= 0.0)) throw ParameterError("K must be >= 0");
    bc.validate(grid.dim);
    if (bc.periodic()) {
        return detail::assemble_periodic(NodeGrid::for_lattice(grid), detail::fine_cell_values(field), K);
    }
    return detail::assemble_tensor(NodeGrid::for_lattice(grid), detail::fine_cell_values(field), K, bc);
}

/// Assembles on an arbitrary 1D node mesh (one potential value per interval).
inline DiscreteOperator assemble_line(const std::vector<double>& x, const std::vector<double>& interval_values,
                                      double K, const Boundary& bc) {
    if (x.size() < 3 || interval_values.size() + 1 != x.size())
        throw ParameterError("line mesh needs >= 3 nodes and one value per interval");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i + 1] > x[i])) throw ParameterError("line mesh nodes must increase strictly");
    if (!(K >= 0.0)) throw ParameterError("K must be >= 0");
    bc.validate(1);
    NodeGrid g;
    g.dim = 1;
    g.x = x;
    if (bc.periodic()) return detail::assemble_periodic(std::move(g), interval_values, K);
    return detail::assemble_tensor(std::move(g), interval_values, K, bc);
}

inline DiscreteOperator assemble_line(const PiecewiseLine& line, double spacing, double K, const Boundary& bc) {
    const std::vector<double> x = line.mesh(spacing);
    return assemble_line(x, line.interval_values(x), K, bc);
}

/// Debug export of the stiffness matrix S: one `row col value` line per
/// stored entry, active indexing.
inline void write_triplets(std::ostream& os, const DiscreteOperator& op) {
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (int k = 0; k < op.stiffness.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.stiffness, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os.precision(old);
}

}  // namespace anderson
