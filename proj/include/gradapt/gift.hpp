#pragma once

// Gradual feature-space adaptation: a lambda-scheduled curriculum trains the
// student on interpolations between aligned source features (student prefix)
// and target features (teacher prefix), pseudo-labeled by the teacher suffix
// and filtered by confidence; the teacher is promoted after each lambda.

#include <cstdint>
#include <string>
#include <vector>

#include "gradapt/alignment.hpp"
#include "gradapt/dataset.hpp"
#include "gradapt/nn.hpp"
#include "gradapt/trace.hpp"

namespace gradapt {

// Interpolation coefficients, visited in order. The canonical schedule walks
// 0, delta, 2*delta, ... and always ends at exactly 1; custom sequences may
// stop early (e.g. {0} alone for pure self-distillation) but must start at 0
// and increase strictly within [0,1].
struct LambdaSchedule {
    std::vector<double> sequence;

    void validate() const;
};

// 0, delta, 2*delta, ..., 1 with 1 always the final value; delta in (0,1].
LambdaSchedule make_lambda_schedule(double delta);

// min(current + delta, 1); the linear default of the curriculum.
double lambda_scheduler(double current, double delta);

enum class AlignKind { random, label_random, sinkhorn };

const char* align_name(AlignKind kind);
AlignKind align_from_name(const std::string& name);

struct GiftConfig {
    int split_point = 1;               // feature layer L; prefix = layers [0, L)
    LambdaSchedule schedule = make_lambda_schedule(0.1);
    int steps_per_lambda = 100;
    double alpha = 0.9;                // confidence fraction retained per batch
    AlignKind alignment = AlignKind::label_random;
    int batch_size = 64;               // source and target batches share this size
    bool stop_gradient = false;        // freeze the prefix through the blend
    bool teacher_source_features = false;  // ablation: source arm from the teacher prefix
    bool final_self_train = false;     // one extra round on raw target inputs after lambda=1
    OptimizerConfig optimizer;
    RegularizerConfig regularizer;
    std::uint64_t seed = 0;

    void validate() const;
};

// z[r] = (1 - lambda) * z_s[r] + lambda * z_t[r]; the endpoints return the
// input batches exactly.
MatF interpolate_features(const MatF& z_s, const MatF& z_t, double lambda);

struct GiftResult {
    NetworkF net;
    CurriculumTrace trace;   // one row block per teacher update
    long total_steps = 0;    // optimizer steps actually taken
    int skipped_steps = 0;   // steps dropped because nothing was retained
    int align_fallbacks = 0; // label alignments that fell back to uniform
};

// The scheduled curriculum. Source must be labeled; target labels, when
// present, are ignored. eval_bins, when given, adds per-bin accuracy and
// confidence rows to the trace after every teacher update.
GiftResult gift_run(const NetworkF& init_model, const LabeledDataset& source, const LabeledDataset& target,
                    const GiftConfig& cfg, const ShiftBins* eval_bins = nullptr);

// Identical loop structure, but every batch draws lambda uniformly from
// [0,1] instead of following the schedule; the schedule only paces teacher
// updates. The trace records each slot's mean drawn lambda.
GiftResult gift_nongradual_run(const NetworkF& init_model, const LabeledDataset& source, const LabeledDataset& target,
                               const GiftConfig& cfg, const ShiftBins* eval_bins = nullptr);

}  // namespace gradapt
