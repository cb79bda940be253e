#include "gradapt/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradapt/common.hpp"

namespace gradapt {

AlignmentPlan random_align(int m_s, int m_t, std::uint64_t seed) {
    if (m_s < 1 || m_t < 1) throw ConfigError("alignment needs nonempty source and target batches");
    AlignmentPlan plan;
    plan.index_s.resize(static_cast<std::size_t>(m_s));
    plan.index_t.resize(static_cast<std::size_t>(m_s));
    std::iota(plan.index_s.begin(), plan.index_s.end(), 0);
    Rng rng(seed);
    std::uniform_int_distribution<int> pick(0, m_t - 1);
    for (int& j : plan.index_t) j = pick(rng);
    return plan;
}

AlignmentPlan label_random_align(const std::vector<int>& y_s, const std::vector<int>& y_t_pseudo, std::uint64_t seed,
                                 int* num_fallback) {
    if (y_s.empty() || y_t_pseudo.empty()) throw ConfigError("alignment needs nonempty source and target batches");
    const int m_s = static_cast<int>(y_s.size());
    const int m_t = static_cast<int>(y_t_pseudo.size());

    // One shuffle of the target indices; each source takes its first match in
    // the shuffled order, which is uniform over that source's matches.
    std::vector<int> shuffled(static_cast<std::size_t>(m_t));
    std::iota(shuffled.begin(), shuffled.end(), 0);
    Rng rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    AlignmentPlan plan;
    plan.index_s.resize(static_cast<std::size_t>(m_s));
    plan.index_t.resize(static_cast<std::size_t>(m_s));
    std::iota(plan.index_s.begin(), plan.index_s.end(), 0);
    std::uniform_int_distribution<int> any(0, m_t - 1);
    int fallbacks = 0;
    for (int i = 0; i < m_s; ++i) {
        int match = -1;
        for (int j : shuffled) {
            if (y_t_pseudo[static_cast<std::size_t>(j)] == y_s[static_cast<std::size_t>(i)]) {
                match = j;
                break;
            }
        }
        if (match < 0) {
            // No target carries this class: fall back to a uniform target so
            // the batch keeps its size.
            match = any(rng);
            ++fallbacks;
        }
        plan.index_t[static_cast<std::size_t>(i)] = match;
    }
    if (num_fallback) *num_fallback = fallbacks;
    return plan;
}

namespace {

double squared_distance(const float* a, const float* b, int d) {
    double sq = 0;
    for (int c = 0; c < d; ++c) {
        const double diff = static_cast<double>(a[c]) - b[c];
        sq += diff * diff;
    }
    return sq;
}

}  // namespace

double resolve_label_penalty(const MatF& z_s, const MatF& z_t) {
    if (z_s.cols != z_t.cols) throw ShapeError("feature widths differ between source and target");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(z_s.rows) * z_t.rows);
    for (int i = 0; i < z_s.rows; ++i)
        for (int j = 0; j < z_t.rows; ++j) dists.push_back(squared_distance(z_s.row(i), z_t.row(j), z_s.cols));
    if (dists.empty()) return 0.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    return 10.0 * dists[mid];
}

MatD build_cost_matrix(const MatF& z_s, const MatF& z_t, const std::vector<int>& y_s,
                       const std::vector<int>& y_t_pseudo, const CostConfig& cfg) {
    if (z_s.cols != z_t.cols) throw ShapeError("feature widths differ between source and target");
    if (z_s.rows < 1 || z_t.rows < 1) throw ShapeError("cost matrix needs nonempty batches");
    if (cfg.feature_weight < 0) throw ConfigError("feature weight must be nonnegative");
    const bool with_labels = !y_s.empty() || !y_t_pseudo.empty();
    if (with_labels) {
        if (static_cast<int>(y_s.size()) != z_s.rows || static_cast<int>(y_t_pseudo.size()) != z_t.rows)
            throw ShapeError("label counts do not match feature rows");
    }
    double penalty = 0.0;
    if (with_labels) {
        penalty = cfg.label_penalty ? *cfg.label_penalty : resolve_label_penalty(z_s, z_t);
        if (penalty < 0) throw ConfigError("label penalty must be nonnegative");
    }

    MatD cost(z_s.rows, z_t.rows);
    for (int i = 0; i < z_s.rows; ++i) {
        for (int j = 0; j < z_t.rows; ++j) {
            double c = cfg.feature_weight * squared_distance(z_s.row(i), z_t.row(j), z_s.cols);
            if (with_labels && y_s[static_cast<std::size_t>(i)] != y_t_pseudo[static_cast<std::size_t>(j)])
                c += penalty;
            cost.at(i, j) = c;
        }
    }
    return cost;
}

double default_sinkhorn_epsilon(const MatD& cost) {
    if (cost.data.empty()) throw ShapeError("empty cost matrix");
    const double mean = std::accumulate(cost.data.begin(), cost.data.end(), 0.0) / cost.data.size();
    return 0.05 * mean;
}

namespace {

// One log-sum-exp over a strided slice of the cost matrix.
double lse_over(const std::vector<double>& vals) {
    const double mx = *std::max_element(vals.begin(), vals.end());
    if (!std::isfinite(mx)) return mx;
    double sum = 0;
    for (double v : vals) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

}  // namespace

TransportPlan sinkhorn(const MatD& cost, double epsilon, int max_iters, double tol) {
    if (cost.rows < 1 || cost.cols < 1) throw ShapeError("empty cost matrix");
    if (!all_finite(cost)) throw NumericError("cost matrix has non-finite entries");
    if (epsilon <= 0) throw ConfigError("sinkhorn epsilon must be positive");
    if (max_iters < 1) throw ConfigError("sinkhorn needs at least one iteration");

    const int m_s = cost.rows;
    const int m_t = cost.cols;
    const double log_a = std::log(1.0 / m_s);
    const double log_b = std::log(1.0 / m_t);

    TransportPlan plan;
    plan.row_marginal.assign(static_cast<std::size_t>(m_s), 1.0 / m_s);
    plan.col_marginal.assign(static_cast<std::size_t>(m_t), 1.0 / m_t);
    plan.p = MatD(m_s, m_t);

    std::vector<double> f(static_cast<std::size_t>(m_s), 0.0);
    std::vector<double> g(static_cast<std::size_t>(m_t), 0.0);
    std::vector<double> scratch(static_cast<std::size_t>(std::max(m_s, m_t)));

    // Epsilon scaling: start at mean(C) and halve toward the target, warm
    // starting the potentials at each stage. Small targets converge orders of
    // magnitude faster this way.
    const double mean_cost = std::accumulate(cost.data.begin(), cost.data.end(), 0.0) / cost.data.size();
    double eps = std::max(epsilon, mean_cost);
    if (eps <= 0) eps = epsilon;

    auto fill_plan_and_error = [&](double stage_eps) {
        double err = 0.0;
        std::vector<double> col_sums(static_cast<std::size_t>(m_t), 0.0);
        for (int i = 0; i < m_s; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < m_t; ++j) {
                const double v = std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                                           cost.at(i, j)) /
                                          stage_eps);
                plan.p.at(i, j) = v;
                row_sum += v;
                col_sums[static_cast<std::size_t>(j)] += v;
            }
            err = std::max(err, std::abs(row_sum - 1.0 / m_s));
        }
        for (int j = 0; j < m_t; ++j) err = std::max(err, std::abs(col_sums[static_cast<std::size_t>(j)] - 1.0 / m_t));
        return err;
    };

    int iters = 0;
    double err = 0.0;
    while (true) {
        const bool final_stage = eps <= epsilon * (1.0 + 1e-12);
        const double stage_tol = final_stage ? tol : std::max(tol, 1e-3);
        while (iters < max_iters) {
            ++iters;
            for (int i = 0; i < m_s; ++i) {
                scratch.resize(static_cast<std::size_t>(m_t));
                for (int j = 0; j < m_t; ++j)
                    scratch[static_cast<std::size_t>(j)] = (g[static_cast<std::size_t>(j)] - cost.at(i, j)) / eps;
                f[static_cast<std::size_t>(i)] = eps * (log_a - lse_over(scratch));
            }
            for (int j = 0; j < m_t; ++j) {
                scratch.resize(static_cast<std::size_t>(m_s));
                for (int i = 0; i < m_s; ++i)
                    scratch[static_cast<std::size_t>(i)] = (f[static_cast<std::size_t>(i)] - cost.at(i, j)) / eps;
                g[static_cast<std::size_t>(j)] = eps * (log_b - lse_over(scratch));
            }
            err = fill_plan_and_error(eps);
            if (err < stage_tol) break;
        }
        if (final_stage || iters >= max_iters) break;
        eps = std::max(epsilon, eps * 0.5);
    }

    plan.epsilon = eps;
    plan.iterations = iters;
    plan.marginal_error = err;
    plan.converged = eps <= epsilon * (1.0 + 1e-12) && err < tol;
    return plan;
}

AlignmentPlan plan_to_pairs(const TransportPlan& plan, PairMode mode, std::uint64_t seed) {
    const int m_s = plan.p.rows;
    const int m_t = plan.p.cols;
    if (m_s < 1 || m_t < 1) throw ShapeError("empty transport plan");

    AlignmentPlan pairs;
    pairs.index_s.resize(static_cast<std::size_t>(m_s));
    pairs.index_t.resize(static_cast<std::size_t>(m_s));
    std::iota(pairs.index_s.begin(), pairs.index_s.end(), 0);
    Rng rng(seed);

    for (int i = 0; i < m_s; ++i) {
        const double* row = plan.p.row(i);
        const double row_sum = std::accumulate(row, row + m_t, 0.0);
        if (row_sum <= 0.0) throw DegeneratePlanError("transport plan row " + std::to_string(i) + " is all zero");
        int choice = 0;
        if (mode == PairMode::argmax_row) {
            for (int j = 1; j < m_t; ++j)
                if (row[j] > row[choice]) choice = j;  // strict: ties keep the lowest index
        } else {
            std::uniform_real_distribution<double> u(0.0, row_sum);
            const double draw = u(rng);
            double acc = 0.0;
            choice = m_t - 1;  // catch-all for accumulated rounding
            for (int j = 0; j < m_t; ++j) {
                acc += row[j];
                if (draw < acc) {
                    choice = j;
                    break;
                }
            }
        }
        pairs.index_t[static_cast<std::size_t>(i)] = choice;
    }
    return pairs;
}

}  // namespace gradapt
