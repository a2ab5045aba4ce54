#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <ostream>
#include <vector>

namespace anderson {

/// Sides of the unit square, in the order used by every per-side array.
enum class Side : int { x_low = 0, x_high = 1, y_low = 2, y_high = 3 };

struct Region {
    std::vector<int> members;  ///< node or cell indices, ascending
    int imin = 0, imax = 0, jmin = 0, jmax = 0;
    std::array<bool, 4> touches{};  ///< indexed by Side
    bool touches_corner = false;
    double measure = 0.0;  ///< length (1D) or area (2D)

    bool touches_side(Side s) const { return touches[static_cast<int>(s)]; }
    bool touches_boundary() const {
        return std::any_of(touches.begin(), touches.end(), [](bool t) { return t; });
    }
};

/// Labeled decomposition of a node or cell lattice into connected regions.
///
/// `labels` is row-major over an nx-by-ny lattice (ny == 1 in 1D); entries
/// equal to `unlabeled` belong to no region.
struct SubregionPartition {
    static constexpr int unlabeled = -1;

    bool per_cell = false;
    int dim = 1;
    int nx = 0, ny = 1;
    std::vector<int> labels;
    std::vector<Region> regions;

    int count() const { return static_cast<int>(regions.size()); }
    bool empty() const { return regions.empty(); }
    int label_at(int i, int j = 0) const { return labels[static_cast<std::size_t>(i + nx * j)]; }
};

namespace detail {

/// Fills region member lists, bounding boxes and boundary contact flags from `labels`.
/// `cell_measure` is the length/area carried by one lattice site.
inline void finalize_regions(SubregionPartition& part, int region_count, double cell_measure) {
    part.regions.assign(static_cast<std::size_t>(region_count), Region{});
    for (auto& r : part.regions) {
        r.imin = part.nx;
        r.jmin = part.ny;
        r.imax = -1;
        r.jmax = -1;
    }
    for (int j = 0; j < part.ny; ++j) {
        for (int i = 0; i < part.nx; ++i) {
            const int idx = i + part.nx * j;
            const int lab = part.labels[static_cast<std::size_t>(idx)];
            if (lab == SubregionPartition::unlabeled) continue;
            Region& r = part.regions[static_cast<std::size_t>(lab)];
            r.members.push_back(idx);
            r.imin = std::min(r.imin, i);
            r.imax = std::max(r.imax, i);
            r.jmin = std::min(r.jmin, j);
            r.jmax = std::max(r.jmax, j);
            const bool xl = i == 0, xh = i == part.nx - 1;
            r.touches[0] = r.touches[0] || xl;
            r.touches[1] = r.touches[1] || xh;
            if (part.dim == 2) {
                const bool yl = j == 0, yh = j == part.ny - 1;
                r.touches[2] = r.touches[2] || yl;
                r.touches[3] = r.touches[3] || yh;
                r.touches_corner = r.touches_corner || ((xl || xh) && (yl || yh));
            } else {
                r.touches_corner = r.touches_corner || xl || xh;
            }
        }
    }
    for (auto& r : part.regions) r.measure = static_cast<double>(r.members.size()) * cell_measure;
}

}  // namespace detail

/// Writes labels one per line, row-major, after a `# nx=.. ny=..` header.
inline void write_labels(std::ostream& os, const SubregionPartition& part) {
    os << "# nx=" << part.nx << " ny=" << part.ny << " regions=" << part.count() << '\n';
    for (int lab : part.labels) os << lab << '\n';
}

}  // namespace anderson
