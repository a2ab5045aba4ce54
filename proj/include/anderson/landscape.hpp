#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "anderson/errors.hpp"
#include "anderson/operator.hpp"
#include "anderson/partition.hpp"
#include "anderson/potential.hpp"
#include "anderson/solver.hpp"

namespace anderson {

/// Solution w of -Laplacian w + K V w = 1 on the operator's node grid.
struct Landscape {
    Eigen::VectorXd w;
    NodeGrid nodes;
    Boundary boundary;
    double K = 0.0;
    double residual = 0.0;  ///< ||A w - 1||_inf over active nodes
    std::uint64_t fingerprint = 0;

    int nx() const { return nodes.nx(); }
    int ny() const { return nodes.ny(); }
    double at(int i, int j = 0) const { return w[nodes.index(i, j)]; }
};

inline Landscape compute_landscape(const DiscreteOperator& op, double tol = 1e-8) {
    Landscape ls;
    ls.w = solve_linear(op, Eigen::VectorXd::Ones(op.node_count()), tol);
    ls.nodes = op.nodes;
    ls.boundary = op.boundary;
    ls.K = op.K;
    ls.fingerprint = op.fingerprint;
    const Eigen::VectorXd wa = op.to_active(ls.w);
    ls.residual = (op.apply_active(wa) - Eigen::VectorXd::Ones(wa.size())).cwiseAbs().maxCoeff();
    const double floor = -tol * std::max(1.0, ls.w.cwiseAbs().maxCoeff());
    if (ls.w.minCoeff() < floor) throw NumericalError("landscape has negative entries");
    return ls;
}

inline Landscape compute_landscape(const GridSpec& grid, const PotentialField& field, double K, const Boundary& bc,
                                   double tol = 1e-8) {
    return compute_landscape(assemble(grid, field, K, bc), tol);
}

/// Node index of the center of potential cell (a, b); needs an even r.
inline int cell_center_node(const GridSpec& grid, int a, int b = 0) {
    const int r = grid.nodes_per_cell;
    const int m = grid.nodes_per_axis();
    const int i = a * r + r / 2;
    const int j = grid.dim == 2 ? b * r + r / 2 : 0;
    return i + m * j;
}

namespace detail {

/// Overwrites region measures with the sum of node dual lengths/areas.
inline void measure_by_duals(SubregionPartition& part, const NodeGrid& g) {
    const std::vector<double> dx = dual_lengths(g.x);
    const std::vector<double> dy = g.dim == 2 ? dual_lengths(g.y) : std::vector<double>{1.0};
    for (auto& r : part.regions) {
        r.measure = 0.0;
        for (int idx : r.members)
            r.measure += dx[static_cast<std::size_t>(idx % g.nx())] * dy[static_cast<std::size_t>(idx / g.nx())];
    }
}

inline SubregionPartition valleys_1d(const Landscape& ls) {
    const int n = ls.nx();
    const Eigen::VectorXd& w = ls.w;
    // Split positions: the first node of each new region.
    std::vector<int> starts{0};
    int i = 1;
    while (i < n - 1) {
        if (!(w[i] < w[i - 1])) {
            ++i;
            continue;
        }
        int b = i;
        while (b + 1 < n && w[b + 1] == w[i]) ++b;
        if (b + 1 < n && w[b + 1] > w[b]) {
            int split = (i + b) / 2;
            // A lone minimum node joins the side with the higher neighbor.
            if (i == b && w[i + 1] > w[i - 1]) split = i;
            else if (i == b) split = i + 1;
            starts.push_back(split);
        }
        i = b + 1;
    }
    SubregionPartition part;
    part.dim = 1;
    part.nx = n;
    part.ny = 1;
    part.labels.assign(static_cast<std::size_t>(n), 0);
    starts.push_back(n);
    for (std::size_t r = 0; r + 1 < starts.size(); ++r)
        for (int k = starts[r]; k < starts[r + 1]; ++k) part.labels[static_cast<std::size_t>(k)] = static_cast<int>(r);
    finalize_regions(part, static_cast<int>(starts.size()) - 1, 1.0);
    return part;
}

/// Watershed by flooding from the local-maximum plateaus of w.
inline SubregionPartition valleys_2d(const Landscape& ls) {
    const int nx = ls.nx(), ny = ls.ny(), n = nx * ny;
    const Eigen::VectorXd& w = ls.w;
    SubregionPartition part;
    part.dim = 2;
    part.nx = nx;
    part.ny = ny;
    part.labels.assign(static_cast<std::size_t>(n), SubregionPartition::unlabeled);

    auto neighbors = [&](int idx, int out[4]) {
        const int i = idx % nx, j = idx / nx;
        int c = 0;
        if (i > 0) out[c++] = idx - 1;
        if (i + 1 < nx) out[c++] = idx + 1;
        if (j > 0) out[c++] = idx - nx;
        if (j + 1 < ny) out[c++] = idx + nx;
        return c;
    };

    // Seeds: connected plateaus of equal w with no strictly higher neighbor.
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    int count = 0;
    std::vector<int> plateau;
    for (int s = 0; s < n; ++s) {
        if (visited[static_cast<std::size_t>(s)]) continue;
        plateau.clear();
        plateau.push_back(s);
        visited[static_cast<std::size_t>(s)] = 1;
        bool is_max = true;
        for (std::size_t k = 0; k < plateau.size(); ++k) {
            int nb[4];
            const int c = neighbors(plateau[k], nb);
            for (int t = 0; t < c; ++t) {
                const int q = nb[t];
                if (w[q] > w[s]) is_max = false;
                if (w[q] == w[s] && !visited[static_cast<std::size_t>(q)]) {
                    visited[static_cast<std::size_t>(q)] = 1;
                    plateau.push_back(q);
                }
            }
        }
        if (!is_max) {
            for (int q : plateau) visited[static_cast<std::size_t>(q)] = 0;
            visited[static_cast<std::size_t>(s)] = 1;
            continue;
        }
        for (int q : plateau) part.labels[static_cast<std::size_t>(q)] = count;
        ++count;
    }

    struct Item {
        double w;
        int idx;
    };
    auto lower = [](const Item& a, const Item& b) { return a.w < b.w || (a.w == b.w && a.idx > b.idx); };
    std::priority_queue<Item, std::vector<Item>, decltype(lower)> queue(lower);
    std::vector<char> queued(static_cast<std::size_t>(n), 0);
    for (int idx = 0; idx < n; ++idx) {
        if (part.labels[static_cast<std::size_t>(idx)] == SubregionPartition::unlabeled) continue;
        int nb[4];
        const int c = neighbors(idx, nb);
        for (int t = 0; t < c; ++t) {
            const int q = nb[t];
            if (part.labels[static_cast<std::size_t>(q)] == SubregionPartition::unlabeled &&
                !queued[static_cast<std::size_t>(q)]) {
                queued[static_cast<std::size_t>(q)] = 1;
                queue.push({w[q], q});
            }
        }
    }
    while (!queue.empty()) {
        const int idx = queue.top().idx;
        queue.pop();
        int nb[4];
        const int c = neighbors(idx, nb);
        int best = -1;
        for (int t = 0; t < c; ++t) {
            const int q = nb[t];
            if (part.labels[static_cast<std::size_t>(q)] == SubregionPartition::unlabeled) continue;
            if (best < 0 || w[q] > w[best] || (w[q] == w[best] && q < best)) best = q;
        }
        part.labels[static_cast<std::size_t>(idx)] = part.labels[static_cast<std::size_t>(best)];
        for (int t = 0; t < c; ++t) {
            const int q = nb[t];
            if (part.labels[static_cast<std::size_t>(q)] == SubregionPartition::unlabeled &&
                !queued[static_cast<std::size_t>(q)]) {
                queued[static_cast<std::size_t>(q)] = 1;
                queue.push({w[q], q});
            }
        }
    }
    finalize_regions(part, count, 1.0);
    return part;
}

}  // namespace detail

/// Partition of the node grid into the basins of the landscape peaks.
///
/// 1D splits at interior local minima of w (plateau minima at their
/// midpoint). 2D floods from the maxima of w in order of decreasing w with
/// 4-connectivity; every node joins the region of its highest labeled
/// neighbor, so valley nodes are assigned and the partition is exhaustive.
inline SubregionPartition valley_partition(const Landscape& ls) {
    if (ls.nodes.dim != 1 && ls.nodes.dim != 2) throw UnsupportedError("valley partition supports 1D and 2D only");
    SubregionPartition part = ls.nodes.dim == 1 ? detail::valleys_1d(ls) : detail::valleys_2d(ls);
    detail::measure_by_duals(part, ls.nodes);
    return part;
}

/// max over nodes of |u| - |lambda| w. Non-positive when the inequality holds.
inline double check_fm_inequality(const EigenPair& pair, const Landscape& ls) {
    if (pair.fingerprint != ls.fingerprint)
        throw UsageError("eigenpair and landscape come from different operators");
    return (pair.u.cwiseAbs() - std::abs(pair.lambda) * ls.w).maxCoeff();
}

struct ExtendedSubregion {
    int base = 0;        ///< region index in its partition
    int factor = 1;      ///< 1, 2 or 4
    double measure = 0;  ///< factor * base measure
};

/// Mirror extension of a region across the reflecting (Neumann or Robin)
/// sides it touches: one doubling per axis.
inline ExtendedSubregion extend_subregion(int region, const SubregionPartition& part, const Boundary& bc) {
    if (region < 0 || region >= part.count()) throw UsageError("region index out of range");
    const Region& r = part.regions[static_cast<std::size_t>(region)];
    auto mirrors = [&](Side s) { return r.touches_side(s) && bc.at(s).reflecting(); };
    ExtendedSubregion e;
    e.base = region;
    if (mirrors(Side::x_low) || mirrors(Side::x_high)) e.factor *= 2;
    if (part.dim == 2 && (mirrors(Side::y_low) || mirrors(Side::y_high))) e.factor *= 2;
    e.measure = e.factor * r.measure;
    return e;
}

/// Zero-run component of a 1D Bernoulli field with the smallest extended
/// local Dirichlet eigenvalue (pi / L_ext)^2, or -1 if there are none.
inline int predicted_ground_component(const PotentialField& field, const Boundary& bc) {
    if (field.grid.dim != 1) throw UnsupportedError("ground-state prediction is implemented for 1D fields");
    const SubregionPartition zc = zero_components(field);
    int best = -1;
    double best_len = 0.0;
    for (int k = 0; k < zc.count(); ++k) {
        const double len = extend_subregion(k, zc, bc).measure;
        if (len > best_len) {
            best_len = len;
            best = k;
        }
    }
    return best;
}

inline double extended_dirichlet_eigenvalue(double extended_length) {
    return std::numbers::pi * std::numbers::pi / (extended_length * extended_length);
}

/// Landscape values at probe nodes for each K in `K_list` (rows follow K_list).
inline std::vector<std::vector<double>> limit_sweep(const PotentialField& field, const Boundary& bc,
                                                    const std::vector<double>& K_list,
                                                    const std::vector<int>& probes) {
    std::vector<std::vector<double>> out;
    out.reserve(K_list.size());
    for (double K : K_list) {
        const Landscape ls = compute_landscape(field.grid, field, K, bc);
        std::vector<double> row;
        row.reserve(probes.size());
        for (int p : probes) {
            if (p < 0 || p >= ls.w.size()) throw UsageError("probe node out of range");
            row.push_back(ls.w[p]);
        }
        out.push_back(std::move(row));
    }
    return out;
}

/// Row-major node values after a `# nx=.. ny=..` header.
inline void write_grid(std::ostream& os, const Eigen::VectorXd& values, int nx, int ny) {
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    os << "# nx=" << nx << " ny=" << ny << '\n';
    for (Eigen::Index k = 0; k < values.size(); ++k) os << values[k] << '\n';
    os.precision(old);
}

inline void write_grid(std::ostream& os, const Landscape& ls) { write_grid(os, ls.w, ls.nx(), ls.ny()); }

}  // namespace anderson
