#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/partition.hpp"
#include "anderson/random.hpp"

namespace anderson {

/// Lattice geometry: N potential cells per side of the unit square/interval,
/// each resolved by r finite-difference intervals per axis.
struct GridSpec {
    int dim = 1;
    int cells_per_side = 2;
    int nodes_per_cell = 8;

    int nodes_per_axis() const { return cells_per_side * nodes_per_cell + 1; }
    int node_count() const {
        const int n = nodes_per_axis();
        return dim == 1 ? n : n * n;
    }
    int cell_count() const { return dim == 1 ? cells_per_side : cells_per_side * cells_per_side; }
    double spacing() const { return 1.0 / (cells_per_side * nodes_per_cell); }

    void validate() const {
        if (dim != 1 && dim != 2) throw ParameterError("grid dim must be 1 or 2");
        if (cells_per_side < 2) throw ParameterError("grid needs at least 2 cells per side");
        if (nodes_per_cell < 2) throw ParameterError("grid needs at least 2 nodes per cell");
    }

    /// Default resolution: r = 8 in 1D, r = 4 in 2D.
    static GridSpec with_default_resolution(int dim, int cells) {
        return GridSpec{dim, cells, dim == 1 ? 8 : 4};
    }

    bool operator==(const GridSpec&) const = default;
};

enum class Distribution { bernoulli, uniform, normal, gamma };

inline const char* to_string(Distribution d) {
    switch (d) {
        case Distribution::bernoulli: return "bernoulli";
        case Distribution::uniform: return "uniform";
        case Distribution::normal: return "normal";
        case Distribution::gamma: return "gamma";
    }
    return "?";
}

inline Distribution distribution_from_string(const std::string& s) {
    if (s == "bernoulli") return Distribution::bernoulli;
    if (s == "uniform") return Distribution::uniform;
    if (s == "normal") return Distribution::normal;
    if (s == "gamma") return Distribution::gamma;
    throw ParameterError("unknown distribution '" + s + "'");
}

/// Per-cell distribution of the potential.
///
/// bernoulli(p, a): value a with probability p, else 0 (a = 1 is the classic
/// lattice). uniform(lo, hi). normal(mean, sd), clamped at 0 so the potential
/// stays nonnegative; this puts an atom of mass Phi(-mean/sd) at zero.
/// gamma(mean, sd) with shape mean^2/sd^2 and scale sd^2/mean.
struct DistributionSpec {
    Distribution kind = Distribution::bernoulli;
    double p = 0.5;
    double amplitude = 1.0;
    double lo = 0.0, hi = 1.0;
    double mean = 0.5, sd = 0.5;

    static DistributionSpec bernoulli(double p, double amplitude = 1.0) {
        DistributionSpec d;
        d.kind = Distribution::bernoulli;
        d.p = p;
        d.amplitude = amplitude;
        return d;
    }
    static DistributionSpec uniform(double lo, double hi) {
        DistributionSpec d;
        d.kind = Distribution::uniform;
        d.lo = lo;
        d.hi = hi;
        return d;
    }
    static DistributionSpec normal(double mean, double sd) {
        DistributionSpec d;
        d.kind = Distribution::normal;
        d.mean = mean;
        d.sd = sd;
        return d;
    }
    static DistributionSpec gamma(double mean, double sd) {
        DistributionSpec d;
        d.kind = Distribution::gamma;
        d.mean = mean;
        d.sd = sd;
        return d;
    }

    /// Distribution of the given family with prescribed mean and standard
    /// deviation. Bernoulli becomes the two-point law {0, a}; uniform needs
    /// sd <= mean/sqrt(3) to keep its support nonnegative.
    static DistributionSpec from_moments(Distribution kind, double mean, double sd) {
        if (!(mean > 0.0) || !(sd > 0.0)) throw ParameterError("mean and sd must be positive");
        switch (kind) {
            case Distribution::bernoulli: {
                const double p = mean * mean / (mean * mean + sd * sd);
                return bernoulli(p, mean / p);
            }
            case Distribution::uniform: {
                const double half = sd * std::sqrt(3.0);
                if (mean - half < -1e-12 * mean)
                    throw ParameterError("uniform law with this mean/sd would need negative values");
                return uniform(std::max(0.0, mean - half), mean + half);
            }
            case Distribution::normal: return normal(mean, sd);
            case Distribution::gamma: return gamma(mean, sd);
        }
        throw ParameterError("unknown distribution");
    }

    void validate() const {
        switch (kind) {
            case Distribution::bernoulli:
                if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("bernoulli p must lie in [0,1]");
                if (!(amplitude > 0.0)) throw ParameterError("bernoulli amplitude must be positive");
                break;
            case Distribution::uniform:
                if (!(lo >= 0.0 && lo < hi)) throw ParameterError("uniform needs 0 <= a < b");
                break;
            case Distribution::normal:
                if (!(sd > 0.0)) throw ParameterError("normal sd must be positive");
                break;
            case Distribution::gamma:
                if (!(sd > 0.0) || !(mean > 0.0)) throw ParameterError("gamma needs mean > 0 and sd > 0");
                break;
        }
    }

    /// Space-separated "kind params..." as used in the potential file header.
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << to_string(kind);
        switch (kind) {
            case Distribution::bernoulli: os << ' ' << p << ' ' << amplitude; break;
            case Distribution::uniform: os << ' ' << lo << ' ' << hi; break;
            case Distribution::normal:
            case Distribution::gamma: os << ' ' << mean << ' ' << sd; break;
        }
        return os.str();
    }

    template <class Rng>
    double draw(Rng& rng) const {
        switch (kind) {
            case Distribution::bernoulli:
                return std::bernoulli_distribution(p)(rng) ? amplitude : 0.0;
            case Distribution::uniform:
                return std::uniform_real_distribution<double>(lo, hi)(rng);
            case Distribution::normal:
                return std::max(0.0, std::normal_distribution<double>(mean, sd)(rng));
            case Distribution::gamma: {
                const double shape = mean * mean / (sd * sd);
                const double scale = sd * sd / mean;
                return std::gamma_distribution<double>(shape, scale)(rng);
            }
        }
        return 0.0;
    }
};

/// Piecewise-constant potential: one value per lattice cell, row-major
/// (cell (a, b) at index a + N*b).
struct PotentialField {
    GridSpec grid;
    DistributionSpec dist;
    std::uint64_t seed = 0;
    std::vector<double> cell_values;

    double cell(int a, int b = 0) const {
        return cell_values[static_cast<std::size_t>(a + grid.cells_per_side * b)];
    }

    /// Field with explicit cell values (hand-built or loaded from file).
    static PotentialField from_values(GridSpec grid, std::vector<double> values,
                                      DistributionSpec dist = DistributionSpec::bernoulli(0.5)) {
        grid.validate();
        if (values.size() != static_cast<std::size_t>(grid.cell_count()))
            throw ParameterError("expected " + std::to_string(grid.cell_count()) + " cell values");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("cell values must be finite and >= 0");
        PotentialField f;
        f.grid = grid;
        f.dist = dist;
        f.cell_values = std::move(values);
        return f;
    }
};

/// Draws N^d independent cell values. Cell i uses the generator stream
/// (seed, i), so the field is a pure function of (grid, dist, seed).
inline PotentialField sample_potential(const GridSpec& grid, const DistributionSpec& dist,
                                       std::uint64_t seed) {
    grid.validate();
    dist.validate();
    PotentialField f;
    f.grid = grid;
    f.dist = dist;
    f.seed = seed;
    f.cell_values.resize(static_cast<std::size_t>(grid.cell_count()));
    Engine rng = make_stream(seed, 0);
    for (double& v : f.cell_values) v = dist.draw(rng);
    return f;
}

struct Run {
    double value;
    int length;
    bool operator==(const Run&) const = default;
};

namespace detail {

/// True when every value is 0 or one common positive level.
inline bool is_two_level(const std::vector<double>& values) {
    double level = 0.0;
    for (double v : values) {
        if (v == 0.0) continue;
        if (level == 0.0) level = v;
        else if (v != level) return false;
    }
    return true;
}

}  // namespace detail

/// Maximal runs of equal values along a 1D Bernoulli field.
inline std::vector<Run> run_decomposition(const PotentialField& field) {
    if (field.grid.dim != 1) throw UnsupportedError("run decomposition is defined for 1D fields only");
    if (!detail::is_two_level(field.cell_values))
        throw UnsupportedError("run decomposition needs a two-level (Bernoulli) field");
    std::vector<Run> runs;
    for (double v : field.cell_values) {
        if (!runs.empty() && runs.back().value == v) ++runs.back().length;
        else runs.push_back({v, 1});
    }
    return runs;
}

/// Connected components of the zero cells: maximal runs in 1D,
/// 4-connected components in 2D. Labels are per cell, -1 on nonzero cells,
/// numbered in order of first appearance in row-major scan.
inline SubregionPartition zero_components(const PotentialField& field) {
    if (!detail::is_two_level(field.cell_values))
        throw UnsupportedError("zero components need a two-level (Bernoulli) field");
    const int n = field.grid.cells_per_side;
    SubregionPartition part;
    part.per_cell = true;
    part.dim = field.grid.dim;
    part.nx = n;
    part.ny = field.grid.dim == 1 ? 1 : n;
    part.labels.assign(field.cell_values.size(), SubregionPartition::unlabeled);
    int next = 0;
    std::queue<int> frontier;
    for (int start = 0; start < static_cast<int>(field.cell_values.size()); ++start) {
        if (field.cell_values[static_cast<std::size_t>(start)] != 0.0 ||
            part.labels[static_cast<std::size_t>(start)] != SubregionPartition::unlabeled)
            continue;
        part.labels[static_cast<std::size_t>(start)] = next;
        frontier.push(start);
        while (!frontier.empty()) {
            const int c = frontier.front();
            frontier.pop();
            const int i = c % n, j = c / n;
            const int nbr[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (const auto& q : nbr) {
                if (q[0] < 0 || q[0] >= part.nx || q[1] < 0 || q[1] >= part.ny) continue;
                const auto idx = static_cast<std::size_t>(q[0] + n * q[1]);
                if (field.cell_values[idx] == 0.0 && part.labels[idx] == SubregionPartition::unlabeled) {
                    part.labels[idx] = next;
                    frontier.push(static_cast<int>(idx));
                }
            }
        }
        ++next;
    }
    const double h = 1.0 / n;
    detail::finalize_regions(part, next, field.grid.dim == 1 ? h : h * h);
    return part;
}

/// Plain-text potential: header `dim N r seed dist...`, then one cell value per line.
inline void write_potential(std::ostream& os, const PotentialField& field) {
    os << field.grid.dim << ' ' << field.grid.cells_per_side << ' ' << field.grid.nodes_per_cell << ' '
       << field.seed << ' ' << field.dist.describe() << '\n';
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (double v : field.cell_values) os << v << '\n';
    os.precision(old);
}

inline PotentialField read_potential(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParameterError("potential file is empty");
    std::istringstream hs(header);
    GridSpec grid;
    std::uint64_t seed = 0;
    std::string kind;
    if (!(hs >> grid.dim >> grid.cells_per_side >> grid.nodes_per_cell >> seed >> kind))
        throw ParameterError("malformed potential header: '" + header + "'");
    DistributionSpec dist;
    dist.kind = distribution_from_string(kind);
    double a = 0, b = 0;
    if (!(hs >> a >> b)) throw ParameterError("potential header lacks distribution parameters");
    switch (dist.kind) {
        case Distribution::bernoulli: dist.p = a; dist.amplitude = b; break;
        case Distribution::uniform: dist.lo = a; dist.hi = b; break;
        default: dist.mean = a; dist.sd = b; break;
    }
    grid.validate();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(grid.cell_count()));
    double v;
    while (is >> v) values.push_back(v);
    PotentialField f = PotentialField::from_values(grid, std::move(values), dist);
    f.seed = seed;
    return f;
}

}  // namespace anderson
