#pragma once

// Pseudo-labeling, confidence filtering, and the self-training baselines:
// one-step, iterative with teacher updates, and gradual over a ground-truth
// shift sequence. Adaptation never touches source data or true labels.

#include <cstdint>
#include <functional>
#include <vector>

#include "gradapt/dataset.hpp"
#include "gradapt/nn.hpp"
#include "gradapt/shift_bench.hpp"

namespace gradapt {

struct PseudoBatch {
    MatF features;                   // m x d batch inputs
    MatF teacher_logits;             // m x k
    std::vector<int> pseudo_labels;  // row-wise argmax of the logits
    std::vector<float> confidence;   // max - min logit per row
};

struct SelfTrainConfig {
    double alpha = 0.9;          // confidence fraction retained per batch
    int num_teacher_updates = 1; // rounds (teacher promotions)
    int steps_per_update = 100;  // optimizer steps per round
    int batch_size = 64;
    bool soft_targets = false;   // default: harden pseudo-labels to one-hot
    OptimizerConfig optimizer;
    RegularizerConfig regularizer;
    std::uint64_t seed = 0;

    void validate() const;
};

// score[i] = max_j logits[i][j] - min_j logits[i][j]; needs k >= 2.
std::vector<float> confidence_scores(const MatF& logits);

// Indices of the ceil(alpha*m) highest scores, ties broken toward the lowest
// index, output sorted ascending. Empty input gives empty output.
std::vector<int> filter_top_fraction(const std::vector<float>& scores, double alpha);

// Row-wise argmax with lowest-index ties.
std::vector<int> argmax_rows(const MatF& logits);

// Fraction of rows whose predicted class equals the label.
double evaluate_accuracy(const NetworkF& net, const LabeledDataset& data);

// Logits, argmax pseudo-labels, and confidences for a batch; the teacher is
// not modified.
PseudoBatch pseudo_label(const NetworkF& teacher, const MatF& x);

// Uniform draws with replacement; examples can reappear across batches.
std::vector<int> sample_batch_indices(int n, int batch_size, Rng& rng);

// Per-round diagnostics, aggregated over the round's steps.
struct RoundStats {
    int round = 0;  // 1-based teacher update index
    double mean_loss = 0.0;
    double mean_retained_confidence = 0.0;
    int steps = 0;
};

// One self-training round: the frozen teacher pseudo-labels sampled target
// batches, the student trains on the confidence-filtered portion. Exposed so
// every adaptation loop shares the exact same round semantics.
RoundStats run_self_train_round(NetworkF& student, const NetworkF& teacher, const LabeledDataset& target,
                                const SelfTrainConfig& cfg, OptimizerState<float>& opt, Rng& rng, int round_index,
                                long* global_step);

// Invoked after each teacher update with the round's stats and the student
// so far; the harness hooks per-bin evaluation here.
using RoundCallback = std::function<void(const RoundStats&, const NetworkF& student)>;

// One round of self-training against a frozen clone of the model.
NetworkF self_train_once(const NetworkF& model, const LabeledDataset& target, const SelfTrainConfig& cfg);

struct SelfTrainResult {
    NetworkF net;
    std::vector<RoundStats> rounds;
};

// num_teacher_updates rounds of {promote teacher <- student; train}. With
// one round this is bitwise identical to self_train_once.
SelfTrainResult iterative_self_train(const NetworkF& model, const LabeledDataset& target, const SelfTrainConfig& cfg,
                                     const RoundCallback& on_round = nullptr);

// One round per intermediate snapshot (index 0, the source end, is skipped):
// self-training along a ground-truth shift path.
SelfTrainResult gradual_self_train(const NetworkF& model, const ShiftSequence& seq, const SelfTrainConfig& cfg,
                                   const RoundCallback& on_round = nullptr);

}  // namespace gradapt
