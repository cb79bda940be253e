#pragma once

// Source/target pairing for feature interpolation: uniform random,
// label-based random, and entropic optimal transport (Sinkhorn).

#include <cstdint>
#include <optional>
#include <vector>

#include "gradapt/mat.hpp"

namespace gradapt {

// One target index per source index; index_s is [0..m) in order.
struct AlignmentPlan {
    std::vector<int> index_s;
    std::vector<int> index_t;

    int size() const { return static_cast<int>(index_s.size()); }
};

// Soft coupling with uniform marginal targets 1/m_s and 1/m_t.
struct TransportPlan {
    MatD p;  // m_s x m_t, nonnegative
    std::vector<double> row_marginal;
    std::vector<double> col_marginal;
    bool converged = false;
    int iterations = 0;            // sweeps spent, across epsilon stages
    double marginal_error = 0.0;   // max deviation from the marginal targets
    double epsilon = 0.0;          // final epsilon used
};

// C[i][j] = feature_weight * ||z_s[i] - z_t[j]||^2
//         + label_penalty  * 1[y_s[i] != y_t[j]].
// label_penalty defaults to 10x the median pairwise squared feature
// distance of the instance, so label mismatch dominates the feature term.
struct CostConfig {
    double feature_weight = 1.0;
    std::optional<double> label_penalty;  // empty = auto from the instance
};

enum class PairMode { argmax_row, sample_row };

// Each source index paired with a uniformly drawn target index.
AlignmentPlan random_align(int m_s, int m_t, std::uint64_t seed);

// For each source, a uniformly random target with equal pseudo-label when
// one exists; otherwise a uniform random target (fallback, counted into
// *num_fallback when given).
AlignmentPlan label_random_align(const std::vector<int>& y_s, const std::vector<int>& y_t_pseudo, std::uint64_t seed,
                                 int* num_fallback = nullptr);

// The auto label penalty for an instance (see CostConfig).
double resolve_label_penalty(const MatF& z_s, const MatF& z_t);

// Pass empty label vectors to drop the label term.
MatD build_cost_matrix(const MatF& z_s, const MatF& z_t, const std::vector<int>& y_s,
                       const std::vector<int>& y_t_pseudo, const CostConfig& cfg);

// The default epsilon rule: 0.05 * mean(C).
double default_sinkhorn_epsilon(const MatD& cost);

// Log-domain Sinkhorn with epsilon scaling (annealed from mean(C) down to
// the requested epsilon, warm-starting the potentials). Non-convergence
// within max_iters sweeps is reported via TransportPlan::converged, not an
// error; non-finite costs raise NumericError.
TransportPlan sinkhorn(const MatD& cost, double epsilon, int max_iters = 500, double tol = 1e-6);

// One target per source row, by row argmax (ties to the lowest index) or
// row-normalized sampling. An all-zero row raises DegeneratePlanError.
AlignmentPlan plan_to_pairs(const TransportPlan& plan, PairMode mode, std::uint64_t seed);

}  // namespace gradapt
