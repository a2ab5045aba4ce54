#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anderson/errors.hpp"
#include "anderson/landscape.hpp"
#include "anderson/operator.hpp"
#include "anderson/parallel.hpp"
#include "anderson/partition.hpp"
#include "anderson/potential.hpp"
#include "anderson/random.hpp"
#include "anderson/runstats.hpp"
#include "anderson/solver.hpp"

namespace anderson {

inline constexpr double localization_threshold = 0.5;

/// max |u| over the boundary nodes > threshold (u normalized to ||u||_inf = 1).
inline bool is_boundary_localized(const Eigen::VectorXd& u, const NodeGrid& g,
                                  double threshold = localization_threshold) {
    const int nx = g.nx(), ny = g.ny();
    double best = 0.0;
    if (g.dim == 1) {
        best = std::max(std::abs(u[0]), std::abs(u[nx - 1]));
    } else {
        for (int i = 0; i < nx; ++i)
            best = std::max({best, std::abs(u[g.index(i, 0)]), std::abs(u[g.index(i, ny - 1)])});
        for (int j = 0; j < ny; ++j)
            best = std::max({best, std::abs(u[g.index(0, j)]), std::abs(u[g.index(nx - 1, j)])});
    }
    return best > threshold;
}

inline bool is_boundary_localized(const EigenPair& pair, const NodeGrid& g,
                                  double threshold = localization_threshold) {
    return is_boundary_localized(pair.u, g, threshold);
}

/// max |u| over the four corner nodes > threshold. 2D only.
inline bool is_corner_localized(const Eigen::VectorXd& u, const NodeGrid& g,
                                double threshold = localization_threshold) {
    if (g.dim != 2) throw UnsupportedError("corner localization is defined in 2D only");
    const int nx = g.nx(), ny = g.ny();
    const double best = std::max({std::abs(u[g.index(0, 0)]), std::abs(u[g.index(nx - 1, 0)]),
                                  std::abs(u[g.index(0, ny - 1)]), std::abs(u[g.index(nx - 1, ny - 1)])});
    return best > threshold;
}

inline bool is_corner_localized(const EigenPair& pair, const NodeGrid& g,
                                double threshold = localization_threshold) {
    return is_corner_localized(pair.u, g, threshold);
}

/// Pointwise max of |u_j| over the eigenpairs sharing pairs[index]'s cluster.
inline Eigen::VectorXd cluster_envelope(const std::vector<EigenPair>& pairs, std::size_t index = 0) {
    if (index >= pairs.size()) throw UsageError("eigenpair index out of range");
    Eigen::VectorXd env = pairs[index].u.cwiseAbs();
    for (const auto& p : pairs)
        if (p.cluster == pairs[index].cluster) env = env.cwiseMax(p.u.cwiseAbs());
    return env;
}

/// True when at least two regions contain a node with |u| > threshold.
inline bool is_multimodal(const Eigen::VectorXd& u, const SubregionPartition& part,
                          double threshold = localization_threshold) {
    if (part.empty()) throw UsageError("multimodality needs a non-empty partition");
    if (part.per_cell) throw UsageError("multimodality needs a node partition");
    if (static_cast<std::size_t>(u.size()) != part.labels.size())
        throw UsageError("eigenmode and partition have different sizes");
    int hit_regions = 0;
    for (const Region& r : part.regions) {
        for (int idx : r.members) {
            if (std::abs(u[idx]) > threshold) {
                if (++hit_regions >= 2) return true;
                break;
            }
        }
    }
    return false;
}

inline bool is_multimodal(const EigenPair& pair, const SubregionPartition& part,
                          double threshold = localization_threshold) {
    return is_multimodal(pair.u, part, threshold);
}

enum class Predicate { boundary, corner, multimodal };

inline const char* to_string(Predicate p) {
    switch (p) {
        case Predicate::boundary: return "boundary";
        case Predicate::corner: return "corner";
        case Predicate::multimodal: return "multimodal";
    }
    return "?";
}

inline Predicate predicate_from_string(const std::string& s) {
    if (s == "boundary") return Predicate::boundary;
    if (s == "corner") return Predicate::corner;
    if (s == "multimodal") return Predicate::multimodal;
    throw ParameterError("unknown predicate '" + s + "'");
}

struct Interval {
    double lo = 0.0, hi = 1.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Wilson score interval (default z = 1.96, i.e. 95%).
inline Interval wilson_interval(long long hits, long long n, double z = 1.96) {
    if (n <= 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double center = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    // The exact bounds at 0 and n hits are 0 and 1; rounding can miss them.
    return {hits == 0 ? 0.0 : std::max(0.0, center - half), hits == n ? 1.0 : std::min(1.0, center + half)};
}

struct ExperimentSpec {
    GridSpec grid = GridSpec::with_default_resolution(1, 50);
    DistributionSpec dist = DistributionSpec::bernoulli(0.5);
    double K = 1e3;
    Boundary bc = BoundaryCondition::neumann();
    int n_trials = 1000;
    std::uint64_t seed = 0;
    Predicate predicate = Predicate::boundary;
    int eigen_index = 1;   ///< 1-based
    double threshold = localization_threshold;
    unsigned threads = 0;

    void validate() const {
        grid.validate();
        dist.validate();
        bc.validate(grid.dim);
        if (n_trials < 1) throw ParameterError("n_trials must be >= 1");
        if (eigen_index < 1) throw ParameterError("eigen_index must be >= 1");
        if (!(K >= 0.0)) throw ParameterError("K must be >= 0");
        if (predicate == Predicate::corner && grid.dim != 2) throw UnsupportedError("corner predicate needs 2D");
    }
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    double lambda1 = 0.0;
    bool hit = false;
    bool failed = false;
    std::string error;
};

struct ProbabilityEstimate {
    double p_hat = 0.0;
    Interval ci;
    int n_trials = 0;  ///< successful trials
    int n_hits = 0;
    int n_failed = 0;
    std::vector<TrialRecord> records;
};

/// One trial: sample -> assemble -> eigenpairs -> predicate.
inline TrialRecord run_trial(const ExperimentSpec& spec, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = trial_seed(spec.seed, static_cast<std::uint64_t>(trial));
    const PotentialField field = sample_potential(spec.grid, spec.dist, rec.seed);
    const DiscreteOperator op = assemble(spec.grid, field, spec.K, spec.bc);
    // The multimodal test needs the whole degenerate cluster around the target.
    const int extra = spec.predicate == Predicate::multimodal ? 3 : 0;
    const int k = std::min(op.active_count(), spec.eigen_index + extra);
    const std::vector<EigenPair> pairs = smallest_eigenpairs(op, k);
    const auto idx = static_cast<std::size_t>(spec.eigen_index - 1);
    rec.lambda1 = pairs.front().lambda;
    switch (spec.predicate) {
        case Predicate::boundary: rec.hit = is_boundary_localized(pairs[idx], op.nodes, spec.threshold); break;
        case Predicate::corner: rec.hit = is_corner_localized(pairs[idx], op.nodes, spec.threshold); break;
        case Predicate::multimodal: {
            const Landscape ls = compute_landscape(op);
            rec.hit = is_multimodal(cluster_envelope(pairs, idx), valley_partition(ls), spec.threshold);
            break;
        }
    }
    return rec;
}

/// Frequency of the predicate over an ensemble, with a Wilson 95% interval.
///
/// Trial i uses potential seed (seed xor i). Trials whose numerics fail are
/// recorded and excluded; more than 1% failures aborts the experiment.
inline ProbabilityEstimate estimate_probability(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<TrialRecord> records(static_cast<std::size_t>(spec.n_trials));
    parallel_for(records.size(), spec.threads, [&](std::size_t i) {
        try {
            records[i] = run_trial(spec, static_cast<int>(i));
        } catch (const NumericalError& e) {
            records[i].trial = static_cast<int>(i);
            records[i].seed = trial_seed(spec.seed, i);
            records[i].failed = true;
            records[i].error = e.what();
        }
    });
    ProbabilityEstimate est;
    for (const auto& r : records) {
        if (r.failed) ++est.n_failed;
        else if (r.hit) ++est.n_hits;
    }
    if (est.n_failed * 100 > spec.n_trials) {
        std::ostringstream msg;
        msg << "experiment aborted: " << est.n_failed << " of " << spec.n_trials << " trials failed";
        for (const auto& r : records)
            if (r.failed) {
                msg << "; first failure at trial " << r.trial << " (seed " << r.seed << "): " << r.error;
                break;
            }
        throw NumericalError(msg.str());
    }
    est.n_trials = spec.n_trials - est.n_failed;
    est.p_hat = est.n_trials > 0 ? static_cast<double>(est.n_hits) / est.n_trials : 0.0;
    est.ci = wilson_interval(est.n_hits, est.n_trials);
    est.records = std::move(records);
    return est;
}

inline void write_trials_csv(std::ostream& os, const ProbabilityEstimate& est) {
    const auto old = os.precision(17);
    os << "trial,seed,lambda1,predicate,failure_flag\n";
    for (const auto& r : est.records)
        os << r.trial << ',' << r.seed << ',' << r.lambda1 << ',' << (r.hit ? 1 : 0) << ',' << (r.failed ? 1 : 0)
           << '\n';
    os.precision(old);
}

/// Run configuration read off an actual 1D Bernoulli lattice.
inline RunConfig lattice_run_config(const PotentialField& field) {
    const std::vector<Run> runs = run_decomposition(field);
    RunConfig rc;
    rc.v0 = field.cell_values.front() == 0.0 ? 0 : 1;
    rc.v1 = field.cell_values.back() == 0.0 ? 0 : 1;
    for (const Run& r : runs)
        if (r.value == 0.0) rc.lengths.push_back(r.length);
    return rc;
}

/// Frequency, over sampled 1D lattices, that the longest extended zero run
/// lies on the boundary (no PDE solve). Uses the same seeds as
/// estimate_probability so the two can be compared trial by trial.
inline Frequency lattice_boundary_frequency(const GridSpec& grid, double p, int n_trials, std::uint64_t seed) {
    if (grid.dim != 1) throw UnsupportedError("lattice boundary statistic is 1D");
    long long hits = 0;
    for (int i = 0; i < n_trials; ++i) {
        const PotentialField f =
            sample_potential(grid, DistributionSpec::bernoulli(p), trial_seed(seed, static_cast<std::uint64_t>(i)));
        const RunConfig rc = lattice_run_config(f);
        if (!rc.lengths.empty() && evaluate_flags(rc).longest_extended_on_boundary) ++hits;
    }
    return make_frequency(hits, n_trials);
}

struct DistributionStudyRow {
    Distribution kind = Distribution::bernoulli;
    double sigma = 0.0;
    double h = 0.0;
    int dim = 1;
    bool skipped = false;
    std::string note;
    ProbabilityEstimate boundary;
    ProbabilityEstimate corner;  ///< 2D only
};

struct DistributionStudyConfig {
    std::vector<Distribution> kinds{Distribution::bernoulli, Distribution::normal, Distribution::gamma,
                                    Distribution::uniform};
    double mean = 0.5;
    std::vector<double> sigmas{0.5, 0.5 / std::sqrt(3.0), 0.5 / 3.0};
    std::vector<double> hs{0.001, 0.01, 0.1, 1.0};
    std::vector<int> dims{1, 2};
    double K = 1e4;
    int cells_1d = 50;
    int cells_2d = 15;
    int trials_1d = 200;
    int trials_2d = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

/// Boundary (and, in 2D, corner) probabilities for each combination of
/// distribution family, standard deviation, Robin h and dimension.
/// Combinations whose moments the family cannot realize are reported as skipped.
inline std::vector<DistributionStudyRow> distribution_study(const DistributionStudyConfig& cfg) {
    std::vector<DistributionStudyRow> rows;
    for (int dim : cfg.dims) {
        for (Distribution kind : cfg.kinds) {
            for (double sigma : cfg.sigmas) {
                for (double h : cfg.hs) {
                    DistributionStudyRow row;
                    row.kind = kind;
                    row.sigma = sigma;
                    row.h = h;
                    row.dim = dim;
                    DistributionSpec dist;
                    try {
                        dist = DistributionSpec::from_moments(kind, cfg.mean, sigma);
                    } catch (const ParameterError& e) {
                        row.skipped = true;
                        row.note = e.what();
                        rows.push_back(std::move(row));
                        continue;
                    }
                    ExperimentSpec spec;
                    spec.grid = GridSpec::with_default_resolution(dim, dim == 1 ? cfg.cells_1d : cfg.cells_2d);
                    spec.dist = dist;
                    spec.K = cfg.K;
                    spec.bc = BoundaryCondition::robin(h);
                    spec.n_trials = dim == 1 ? cfg.trials_1d : cfg.trials_2d;
                    spec.seed = cfg.seed;
                    spec.threads = cfg.threads;
                    spec.predicate = Predicate::boundary;
                    row.boundary = estimate_probability(spec);
                    if (dim == 2) {
                        spec.predicate = Predicate::corner;
                        row.corner = estimate_probability(spec);
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

inline void write_distribution_study_csv(std::ostream& os, const std::vector<DistributionStudyRow>& rows) {
    os << "dim,distribution,sigma,h,P_b,P_b_lo,P_b_hi,P_c,P_c_lo,P_c_hi,trials,failed,note\n";
    const auto old = os.precision(10);
    for (const auto& r : rows) {
        os << r.dim << ',' << to_string(r.kind) << ',' << r.sigma << ',' << r.h << ',';
        if (r.skipped) {
            os << ",,,,,,0,0," << '"' << r.note << '"' << '\n';
            continue;
        }
        os << r.boundary.p_hat << ',' << r.boundary.ci.lo << ',' << r.boundary.ci.hi << ',';
        if (r.dim == 2) os << r.corner.p_hat << ',' << r.corner.ci.lo << ',' << r.corner.ci.hi << ',';
        else os << ",,,";
        os << r.boundary.n_trials << ',' << r.boundary.n_failed << ",\n";
    }
    os.precision(old);
}

}  // namespace anderson
