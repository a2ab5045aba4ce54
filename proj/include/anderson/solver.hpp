#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "anderson/errors.hpp"
#include "anderson/operator.hpp"
#include "anderson/random.hpp"

namespace anderson {

/// Eigenpair of a DiscreteOperator with ||u||_inf == 1 and the
/// largest-magnitude entry positive.
struct EigenPair {
    double lambda = 0.0;
    Eigen::VectorXd u;     ///< full node vector (eliminated nodes are 0)
    double residual = 0.0; ///< ||A u - lambda u||_inf
    int cluster = 0;       ///< pairs sharing an id are numerically degenerate
    std::uint64_t fingerprint = 0;
};

struct SolverOptions {
    double tol = 1e-8;          ///< relative: residual <= tol * max(1, lambda)
    int max_iterations = 10000; ///< operator applications before giving up
    double shift = -1.0;        ///< shift-invert pole; below the spectrum
    double cluster_tol = 1e-6;  ///< relative eigenvalue gap defining a cluster
    std::uint64_t seed = 0x6c616e637a6f73ULL;
};

/// Flips u so its largest-magnitude entry is positive and scales it to ||u||_inf = 1.
inline void normalize_mode(Eigen::VectorXd& u) {
    Eigen::Index at = 0;
    u.cwiseAbs().maxCoeff(&at);
    const double peak = u[at];
    if (peak == 0.0) throw DomainError("cannot normalize a zero vector");
    u /= peak;
    u[at] = 1.0;
}

/// Groups sorted pairs into clusters with |lambda_i - lambda_j| < tol * lambda_i.
inline void assign_clusters(std::vector<EigenPair>& pairs, double tol) {
    int id = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) {
            const double ref = std::max(std::abs(pairs[i - 1].lambda), 1e-300);
            if (std::abs(pairs[i].lambda - pairs[i - 1].lambda) >= tol * ref) ++id;
        }
        pairs[i].cluster = id;
    }
}

namespace detail {

using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

/// Orthonormalizes the columns of W against Q (first `q_cols` columns) and
/// among themselves. Returns the number of independent columns kept, which
/// are packed to the front of W.
inline int orthonormalize_block(const Eigen::MatrixXd& Q, int q_cols, Eigen::MatrixXd& W) {
    int kept = 0;
    for (int c = 0; c < W.cols(); ++c) {
        Eigen::VectorXd v = W.col(c);
        const double original = v.norm();
        if (original == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) {
            if (q_cols > 0) v -= Q.leftCols(q_cols) * (Q.leftCols(q_cols).transpose() * v);
            if (kept > 0) v -= W.leftCols(kept) * (W.leftCols(kept).transpose() * v);
        }
        const double norm = v.norm();
        if (norm <= 1e-10 * original) continue;
        W.col(kept++) = v / norm;
    }
    return kept;
}

}  // namespace detail

/// The k smallest eigenpairs of A = diag(d)^-1 S, ascending.
///
/// Restarted block Lanczos on the symmetric shift-inverted operator
/// d^{1/2} (S - shift d)^{-1} d^{1/2}, with full reorthogonalization and
/// Rayleigh-Ritz extraction. Blocks of k + 2 vectors capture degenerate
/// clusters that a single-vector Krylov space would miss.
inline std::vector<EigenPair> smallest_eigenpairs(const DiscreteOperator& op, int k,
                                                  const SolverOptions& opts = {}) {
    const int n = op.active_count();
    if (k < 1) throw ParameterError("k must be >= 1");
    if (k > n) throw ParameterError("k exceeds the number of active nodes");

    const Eigen::VectorXd sqrt_mass = op.mass.cwiseSqrt();
    Eigen::SparseMatrix<double> shifted = op.stiffness;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= opts.shift * op.mass[i];
    detail::Ldlt ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw SingularError("shifted operator could not be factorized");
    auto apply_inverse = [&](const Eigen::MatrixXd& X) {
        Eigen::MatrixXd Y = sqrt_mass.asDiagonal() * X;
        Y = ldlt.solve(Y);
        return Eigen::MatrixXd(sqrt_mass.asDiagonal() * Y);
    };

    const int block = std::min(n, k + 2);
    const int basis_max = std::min(n, std::max(6 * block, 40));

    Engine rng = make_stream(opts.seed, static_cast<std::uint64_t>(n));
    std::normal_distribution<double> gauss;
    auto random_block = [&](int cols) {
        Eigen::MatrixXd X(n, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < n; ++r) X(r, c) = gauss(rng);
        return X;
    };

    Eigen::MatrixXd start = random_block(block);
    int applications = 0;
    double best_worst = std::numeric_limits<double>::infinity();

    for (;;) {
        Eigen::MatrixXd V(n, basis_max), TV(n, basis_max);
        int cols = 0, applied = 0;
        {
            Eigen::MatrixXd W = start;
            const int kept = detail::orthonormalize_block(V, 0, W);
            V.leftCols(kept) = W.leftCols(kept);
            cols = kept;
        }
        while (applied < cols) {
            const int b0 = applied, nb = cols - applied;
            TV.middleCols(b0, nb) = apply_inverse(V.middleCols(b0, nb));
            applications += nb;
            applied = cols;
            if (cols >= basis_max) break;
            Eigen::MatrixXd W = TV.middleCols(b0, nb);
            int kept = detail::orthonormalize_block(V, cols, W);
            if (kept == 0) {
                // Invariant subspace reached; pad with fresh directions if room remains.
                W = random_block(std::min(nb, basis_max - cols));
                kept = detail::orthonormalize_block(V, cols, W);
                if (kept == 0) break;
            }
            kept = std::min(kept, basis_max - cols);
            V.middleCols(cols, kept) = W.leftCols(kept);
            cols += kept;
        }

        Eigen::MatrixXd H = V.leftCols(cols).transpose() * TV.leftCols(cols);
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(H);
        const int take = std::min(cols, std::max(block, k));

        std::vector<EigenPair> pairs;
        std::vector<Eigen::VectorXd> ritz;
        double worst = 0.0;
        for (int t = 0; t < take; ++t) {
            const int idx = cols - 1 - t;  // largest theta first -> smallest lambda
            Eigen::VectorXd y = V.leftCols(cols) * small.eigenvectors().col(idx);
            ritz.push_back(y);
            // T y is the same Ritz vector up to scale, with the rounding noise
            // of the basis damped by one more solve.
            const Eigen::VectorXd ty = TV.leftCols(cols) * small.eigenvectors().col(idx);
            Eigen::VectorXd ua = ty.cwiseQuotient(sqrt_mass);
            const double lam = ua.dot(op.stiffness * ua) / ua.dot(op.mass.cwiseProduct(ua));
            const double scale = ua.cwiseAbs().maxCoeff();
            const double res = (op.apply_active(ua) - lam * ua).cwiseAbs().maxCoeff() / scale;
            if (t < k) worst = std::max(worst, res / (opts.tol * std::max(1.0, std::abs(lam))));
            EigenPair p;
            p.lambda = lam;
            p.u = op.to_nodes(ua);
            p.residual = res;
            p.fingerprint = op.fingerprint;
            pairs.push_back(std::move(p));
        }
        best_worst = std::min(best_worst, worst);

        if (worst <= 1.0 || cols >= n) {
            std::sort(pairs.begin(), pairs.end(),
                      [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
            pairs.resize(static_cast<std::size_t>(k));
            for (auto& p : pairs) {
                normalize_mode(p.u);
                p.residual = (op.apply(p.u) - p.lambda * p.u).cwiseAbs().maxCoeff();
            }
            if (worst > 1.0)
                throw ConvergenceError("eigenpairs did not reach the requested tolerance",
                                       best_worst * opts.tol);
            assign_clusters(pairs, opts.cluster_tol);
            return pairs;
        }
        if (applications >= opts.max_iterations)
            throw ConvergenceError("eigensolver exceeded its iteration budget", best_worst * opts.tol);
        start.resize(n, block);
        for (int c = 0; c < block; ++c) start.col(c) = ritz[static_cast<std::size_t>(c)];
    }
}

/// Solves A w = rhs (full node vectors). Eliminated nodes of w are 0.
inline Eigen::VectorXd solve_linear(const DiscreteOperator& op, const Eigen::VectorXd& rhs, double tol = 1e-8) {
    if (rhs.size() != op.node_count()) throw UsageError("rhs length does not match the operator's grid");
    detail::Ldlt ldlt(op.stiffness);
    if (ldlt.info() != Eigen::Success) throw SingularError("operator could not be factorized");
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (pivots.minCoeff() <= 1e-12 * pivots.maxCoeff())
        throw SingularError("operator is singular (pure Neumann/periodic with no potential?)");

    const Eigen::VectorXd b = op.to_active(rhs);
    const Eigen::VectorXd mb = op.mass.cwiseProduct(b);
    Eigen::VectorXd w = ldlt.solve(mb);
    const double bnorm = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    double res = (op.apply_active(w) - b).cwiseAbs().maxCoeff();
    for (int refine = 0; refine < 3 && res > tol * bnorm; ++refine) {
        w += ldlt.solve(mb - op.stiffness * w);
        res = (op.apply_active(w) - b).cwiseAbs().maxCoeff();
    }
    if (res > tol * bnorm) throw ConvergenceError("linear solve residual above tolerance", res / bnorm);
    return op.to_nodes(w);
}

/// Discrete energy functional J(u) / <u, u>: (u^T S u) / (u^T diag(d) u).
inline double rayleigh_quotient(const Eigen::VectorXd& u, const DiscreteOperator& op) {
    if (u.size() != op.node_count()) throw UsageError("vector length does not match the operator's grid");
    const Eigen::VectorXd a = op.to_active(u);
    const double denom = a.dot(op.mass.cwiseProduct(a));
    if (denom == 0.0) throw DomainError("Rayleigh quotient of the zero vector");
    return a.dot(op.stiffness * a) / denom;
}

}  // namespace anderson
