#include "gradapt/gift.hpp"

#include <cmath>
#include <random>

#include "gradapt/common.hpp"
#include "gradapt/self_train.hpp"

namespace gradapt {

void LambdaSchedule::validate() const {
    if (sequence.empty()) throw ConfigError("lambda schedule must be nonempty");
    if (sequence.front() != 0.0) throw ConfigError("lambda schedule must start at 0");
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        if (!(sequence[i] >= 0.0 && sequence[i] <= 1.0)) throw ConfigError("lambda values must lie in [0,1]");
        if (i > 0 && !(sequence[i] > sequence[i - 1])) throw ConfigError("lambda schedule must increase strictly");
    }
}

LambdaSchedule make_lambda_schedule(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("lambda step size must lie in (0,1]");
    LambdaSchedule schedule;
    double lambda = 0.0;
    schedule.sequence.push_back(lambda);
    while (lambda < 1.0) {
        lambda = lambda_scheduler(lambda, delta);
        // Inexact deltas (1/3, 1/7, ...) accumulate to just under 1; snap so
        // delta = 1/T always yields exactly T+1 values ending at 1.
        if (lambda >= 1.0 - 1e-9) lambda = 1.0;
        schedule.sequence.push_back(lambda);
    }
    schedule.validate();
    return schedule;
}

double lambda_scheduler(double current, double delta) {
    if (!(delta > 0.0)) throw ConfigError("lambda step size must be positive");
    if (!(current >= 0.0 && current <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
    return std::min(current + delta, 1.0);
}

const char* align_name(AlignKind kind) {
    switch (kind) {
        case AlignKind::random: return "random";
        case AlignKind::label_random: return "label_random";
        case AlignKind::sinkhorn: return "sinkhorn";
    }
    throw ConfigError("unknown alignment kind");
}

AlignKind align_from_name(const std::string& name) {
    if (name == "random") return AlignKind::random;
    if (name == "label_random") return AlignKind::label_random;
    if (name == "sinkhorn") return AlignKind::sinkhorn;
    throw ConfigError("unknown alignment kind: " + name);
}

void GiftConfig::validate() const {
    schedule.validate();
    if (split_point < 0) throw ConfigError("split point must be nonnegative");
    if (steps_per_lambda < 1) throw ConfigError("need at least one step per lambda");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
}

MatF interpolate_features(const MatF& z_s, const MatF& z_t, double lambda) {
    if (!z_s.same_shape(z_t)) throw ShapeError("interpolation operands shape mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
    if (lambda == 0.0) return z_s;
    if (lambda == 1.0) return z_t;
    const float s = static_cast<float>(1.0 - lambda);
    const float t = static_cast<float>(lambda);
    MatF out(z_s.rows, z_s.cols);
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] = s * z_s.data[j] + t * z_t.data[j];
    return out;
}

namespace {

void check_gift_inputs(const NetworkF& net, const LabeledDataset& source, const LabeledDataset& target, int L) {
    check_split(net, L);
    if (source.size() == 0 || target.size() == 0) throw ConfigError("adaptation needs nonempty source and target");
    if (!source.has_labels()) throw ConfigError("the source dataset must be labeled");
    if (source.dim() != net.input_dim() || target.dim() != net.input_dim())
        throw ShapeError("dataset dimension does not match the network input");
    if (source.num_classes != net.output_dim())
        throw ShapeError("source class count does not match the network output");
}

AlignmentPlan align_batch(AlignKind kind, const MatF& z_s, const MatF& z_t, const std::vector<int>& y_s,
                          const std::vector<int>& y_t, std::uint64_t seed, int* fallbacks) {
    switch (kind) {
        case AlignKind::random:
            return random_align(z_s.rows, z_t.rows, seed);
        case AlignKind::label_random: {
            int nf = 0;
            AlignmentPlan plan = label_random_align(y_s, y_t, seed, &nf);
            if (fallbacks) *fallbacks += nf;
            return plan;
        }
        case AlignKind::sinkhorn: {
            const MatD cost = build_cost_matrix(z_s, z_t, y_s, y_t, CostConfig{});
            const TransportPlan plan = sinkhorn(cost, default_sinkhorn_epsilon(cost));
            return plan_to_pairs(plan, PairMode::argmax_row, seed);
        }
    }
    throw ConfigError("unknown alignment kind");
}

GiftResult run_impl(const NetworkF& init_model, const LabeledDataset& source, const LabeledDataset& target,
                    const GiftConfig& cfg, const ShiftBins* eval_bins, bool uniform_lambda) {
    cfg.validate();
    const int L = cfg.split_point;
    check_gift_inputs(init_model, source, target, L);

    GiftResult res;
    res.net = clone_network(init_model);
    NetworkF teacher = clone_network(init_model);
    OptimizerState<float> opt = make_optimizer(res.net, cfg.optimizer);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int m = cfg.batch_size;
    const int k = init_model.output_dim();
    long global_step = 0;

    for (std::size_t slot = 0; slot < cfg.schedule.sequence.size(); ++slot) {
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(slot));
        double lambda_sum = 0.0;
        double retained_sum = 0.0;
        // Per-step draw order is fixed: source batch, target batch, alignment
        // seed, then (non-gradual only) the lambda value.
        for (int step = 0; step < cfg.steps_per_lambda; ++step) {
            const std::vector<int> i_s = sample_batch_indices(source.size(), m, rng);
            const std::vector<int> i_t = sample_batch_indices(target.size(), m, rng);
            const std::uint64_t align_seed = rng();
            const double lambda = uniform_lambda ? unit(rng) : cfg.schedule.sequence[slot];
            lambda_sum += lambda;

            const MatF x_s = select_rows(source.features, i_s);
            const MatF x_t = select_rows(target.features, i_t);
            std::vector<int> y_s;
            y_s.reserve(i_s.size());
            for (int i : i_s) y_s.push_back(source.labels[static_cast<std::size_t>(i)]);

            // Source features come from the student prefix (the arm gradients
            // flow through); target features and pseudo-labels from the teacher.
            const MatF z_s = forward_to_layer(cfg.teacher_source_features ? teacher : res.net, x_s, L);
            const MatF z_t = forward_to_layer(teacher, x_t, L);
            const std::vector<int> y_t = argmax_rows(forward_from_layer(teacher, z_t, L));

            const AlignmentPlan plan = align_batch(cfg.alignment, z_s, z_t, y_s, y_t, align_seed,
                                                   &res.align_fallbacks);
            const MatF z_s_pair = select_rows(z_s, plan.index_s);
            const MatF z_t_pair = select_rows(z_t, plan.index_t);
            const MatF zhat = interpolate_features(z_s_pair, z_t_pair, lambda);

            // The teacher suffix labels the interpolated batch and scores it.
            const MatF zhat_logits = forward_from_layer(teacher, zhat, L);
            const std::vector<float> conf = confidence_scores(zhat_logits);
            const std::vector<int> keep = filter_top_fraction(conf, cfg.alpha);
            if (keep.empty()) {
                ++res.skipped_steps;
                continue;
            }
            retained_sum += static_cast<double>(keep.size()) / static_cast<double>(conf.size());

            const std::vector<int> pseudo = argmax_rows(zhat_logits);
            std::vector<int> kept_labels;
            kept_labels.reserve(keep.size());
            for (int i : keep) kept_labels.push_back(pseudo[static_cast<std::size_t>(i)]);
            const MatF targets = one_hot(kept_labels, k);

            try {
                if (cfg.teacher_source_features) {
                    // Both arms are teacher-derived constants: suffix-only update.
                    train_step_features(res.net, opt, cfg.regularizer, select_rows(zhat, keep), targets, L);
                } else {
                    std::vector<int> x_rows;
                    x_rows.reserve(keep.size());
                    for (int i : keep) x_rows.push_back(plan.index_s[static_cast<std::size_t>(i)]);
                    MatF constant = select_rows(z_t_pair, keep);
                    const float lf = static_cast<float>(lambda);
                    for (float& v : constant.data) v *= lf;
                    train_step_blend(res.net, opt, cfg.regularizer, select_rows(x_s, x_rows), constant,
                                     static_cast<float>(1.0 - lambda), targets, L, cfg.stop_gradient);
                }
            } catch (NumericError& e) {
                e.step = global_step;
                throw;
            }
            ++global_step;
            ++res.total_steps;
        }
        teacher = clone_network(res.net);
        const double slot_lambda =
            uniform_lambda ? lambda_sum / cfg.steps_per_lambda : cfg.schedule.sequence[slot];
        append_trace_rows(res.trace, static_cast<int>(slot) + 1, slot_lambda, res.net, target.features, eval_bins,
                          retained_sum / cfg.steps_per_lambda);
    }

    if (cfg.final_self_train) {
        SelfTrainConfig st;
        st.alpha = cfg.alpha;
        st.steps_per_update = cfg.steps_per_lambda;
        st.batch_size = cfg.batch_size;
        st.optimizer = cfg.optimizer;
        st.regularizer = cfg.regularizer;
        st.seed = cfg.seed;
        const int round = static_cast<int>(cfg.schedule.sequence.size()) + 1;
        Rng rng = make_rng(cfg.seed, cfg.schedule.sequence.size());
        const RoundStats stats = run_self_train_round(res.net, teacher, strip_labels(target), st, opt, rng, round,
                                                      &global_step);
        res.total_steps += stats.steps;
        const double retained = std::ceil(cfg.alpha * cfg.batch_size) / cfg.batch_size;
        append_trace_rows(res.trace, round, 1.0, res.net, target.features, eval_bins, retained);
    }
    return res;
}

}  // namespace

GiftResult gift_run(const NetworkF& init_model, const LabeledDataset& source, const LabeledDataset& target,
                    const GiftConfig& cfg, const ShiftBins* eval_bins) {
    return run_impl(init_model, source, target, cfg, eval_bins, false);
}

GiftResult gift_nongradual_run(const NetworkF& init_model, const LabeledDataset& source, const LabeledDataset& target,
                               const GiftConfig& cfg, const ShiftBins* eval_bins) {
    return run_impl(init_model, source, target, cfg, eval_bins, true);
}

}  // namespace gradapt
