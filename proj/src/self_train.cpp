#include "gradapt/self_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradapt/common.hpp"

namespace gradapt {

void SelfTrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (num_teacher_updates < 1) throw ConfigError("need at least one teacher update");
    if (steps_per_update < 1) throw ConfigError("need at least one step per teacher update");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
}

std::vector<float> confidence_scores(const MatF& logits) {
    if (logits.cols < 2) throw ShapeError("confidence needs at least two classes");
    std::vector<float> scores(static_cast<std::size_t>(logits.rows));
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = logits.row(r);
        const auto [mn, mx] = std::minmax_element(row, row + logits.cols);
        scores[static_cast<std::size_t>(r)] = *mx - *mn;
    }
    return scores;
}

std::vector<int> filter_top_fraction(const std::vector<float>& scores, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (scores.empty()) return {};
    const int m = static_cast<int>(scores.size());
    const int keep = static_cast<int>(std::ceil(alpha * m));

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    // Descending score; equal scores keep the lower index first.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(keep));
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<int> argmax_rows(const MatF& logits) {
    std::vector<int> labels(static_cast<std::size_t>(logits.rows));
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = logits.row(r);
        int best = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (row[j] > row[best]) best = j;
        labels[static_cast<std::size_t>(r)] = best;
    }
    return labels;
}

double evaluate_accuracy(const NetworkF& net, const LabeledDataset& data) {
    if (!data.has_labels()) throw AnnotationMissingError("accuracy needs labels");
    if (data.size() == 0) throw ShapeError("accuracy needs a nonempty dataset");
    MatF logits = forward_full(net, data.features);
    const std::vector<int> pred = argmax_rows(logits);
    int hits = 0;
    for (int r = 0; r < data.size(); ++r) hits += pred[static_cast<std::size_t>(r)] == data.labels[static_cast<std::size_t>(r)] ? 1 : 0;
    return static_cast<double>(hits) / data.size();
}

PseudoBatch pseudo_label(const NetworkF& teacher, const MatF& x) {
    PseudoBatch pb;
    pb.features = x;
    pb.teacher_logits = forward_full(teacher, x);
    pb.pseudo_labels = argmax_rows(pb.teacher_logits);
    pb.confidence = confidence_scores(pb.teacher_logits);
    return pb;
}

std::vector<int> sample_batch_indices(int n, int batch_size, Rng& rng) {
    if (n < 1) throw ConfigError("cannot sample from an empty dataset");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(static_cast<std::size_t>(batch_size));
    for (int& i : idx) i = pick(rng);
    return idx;
}

namespace {

// Soft targets: the teacher's softmax distribution; hard: one-hot argmax.
MatF targets_for(const PseudoBatch& pb, const std::vector<int>& keep, bool soft) {
    const int k = pb.teacher_logits.cols;
    if (!soft) {
        std::vector<int> labels;
        labels.reserve(keep.size());
        for (int i : keep) labels.push_back(pb.pseudo_labels[static_cast<std::size_t>(i)]);
        return one_hot(labels, k);
    }
    MatF t(static_cast<int>(keep.size()), k);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const float* row = pb.teacher_logits.row(keep[r]);
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double sum = 0;
        for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
        for (int j = 0; j < k; ++j)
            t.at(static_cast<int>(r), j) = static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / sum);
    }
    return t;
}

}  // namespace

RoundStats run_self_train_round(NetworkF& student, const NetworkF& teacher, const LabeledDataset& target,
                                const SelfTrainConfig& cfg, OptimizerState<float>& opt, Rng& rng, int round_index,
                                long* global_step) {
    if (target.size() == 0) throw ConfigError("adaptation needs a nonempty target dataset");
    RoundStats stats;
    stats.round = round_index;
    double loss_sum = 0;
    double conf_sum = 0;
    long conf_count = 0;
    for (int step = 0; step < cfg.steps_per_update; ++step) {
        const std::vector<int> idx = sample_batch_indices(target.size(), cfg.batch_size, rng);
        const MatF x = select_rows(target.features, idx);
        const PseudoBatch pb = pseudo_label(teacher, x);
        const std::vector<int> keep = filter_top_fraction(pb.confidence, cfg.alpha);
        const MatF x_keep = select_rows(x, keep);
        const MatF targets = targets_for(pb, keep, cfg.soft_targets);
        for (int i : keep) {
            conf_sum += pb.confidence[static_cast<std::size_t>(i)];
            ++conf_count;
        }
        try {
            loss_sum += train_step(student, opt, cfg.regularizer, x_keep, targets);
        } catch (NumericError& e) {
            e.step = global_step ? *global_step : step;
            throw;
        }
        if (global_step) ++(*global_step);
    }
    stats.steps = cfg.steps_per_update;
    stats.mean_loss = loss_sum / cfg.steps_per_update;
    stats.mean_retained_confidence = conf_count > 0 ? conf_sum / conf_count : 0.0;
    return stats;
}

NetworkF self_train_once(const NetworkF& model, const LabeledDataset& target, const SelfTrainConfig& cfg) {
    cfg.validate();
    NetworkF student = clone_network(model);
    const NetworkF teacher = clone_network(model);
    OptimizerState<float> opt = make_optimizer(student, cfg.optimizer);
    Rng rng = make_rng(cfg.seed, 0);
    long global_step = 0;
    run_self_train_round(student, teacher, target, cfg, opt, rng, 1, &global_step);
    return student;
}

SelfTrainResult iterative_self_train(const NetworkF& model, const LabeledDataset& target, const SelfTrainConfig& cfg,
                                     const RoundCallback& on_round) {
    cfg.validate();
    SelfTrainResult result;
    result.net = clone_network(model);
    OptimizerState<float> opt = make_optimizer(result.net, cfg.optimizer);
    long global_step = 0;
    for (int round = 0; round < cfg.num_teacher_updates; ++round) {
        const NetworkF teacher = clone_network(result.net);
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(round));
        RoundStats stats =
            run_self_train_round(result.net, teacher, target, cfg, opt, rng, round + 1, &global_step);
        result.rounds.push_back(stats);
        if (on_round) on_round(stats, result.net);
    }
    return result;
}

SelfTrainResult gradual_self_train(const NetworkF& model, const ShiftSequence& seq, const SelfTrainConfig& cfg,
                                   const RoundCallback& on_round) {
    cfg.validate();
    if (seq.size() < 2) throw ConfigError("gradual self-training needs a sequence with intermediates");
    SelfTrainResult result;
    result.net = clone_network(model);
    OptimizerState<float> opt = make_optimizer(result.net, cfg.optimizer);
    long global_step = 0;
    // Snapshot 0 is the source distribution itself; adaptation starts at 1.
    for (int i = 1; i < seq.size(); ++i) {
        const NetworkF teacher = clone_network(result.net);
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(i - 1));
        RoundStats stats = run_self_train_round(result.net, teacher, seq.snapshots[static_cast<std::size_t>(i)], cfg,
                                                opt, rng, i, &global_step);
        result.rounds.push_back(stats);
        if (on_round) on_round(stats, result.net);
    }
    return result;
}

}  // namespace gradapt
