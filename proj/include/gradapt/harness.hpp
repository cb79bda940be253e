#pragma once

// Config-driven experiment runner. Each replicate builds a shifted benchmark,
// trains a source model (optionally fine-tuned with feature interpolation),
// adapts it with the configured strategy, and evaluates before/after on the
// labeled target (and per shift bin). Emits a self-describing summary JSON,
// per-replicate trace CSVs, and model checkpoints. (config, seed) determines
// every number; the generated_at stamp is the only nondeterministic field.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradapt/gift.hpp"
#include "gradapt/nn.hpp"
#include "gradapt/self_train.hpp"
#include "gradapt/shift_bench.hpp"
#include "gradapt/trace.hpp"

namespace gradapt {

enum class FineTune { plain, convex_mixup, wasserstein_mixup };
enum class Adapt { none, self_train, iterative, gift, gift_nongradual, gradual_ground_truth };

const char* fine_tune_name(FineTune m);
FineTune fine_tune_from_name(const std::string& s);
const char* adapt_name(Adapt m);
Adapt adapt_from_name(const std::string& s);

// What data a replicate sees. target_draw "endpoint" shifts every target
// example by family.hi; "spread" draws each example's parameter uniformly
// from [family.lo, family.hi], so shift_values support binned evaluation.
// The gradual mode walks sequence_steps snapshots of the target pool from
// family.lo to family.hi and is evaluated on the endpoint like every other
// mode.
struct BenchmarkConfig {
    std::string kind = "two_moons";  // "two_moons" | "glyphs"
    int n_source = 800;
    int n_target = 800;
    float noise = 0.05f;
    int side = 12;                   // glyph raster side
    float glyph_jitter = 1.5f;       // glyph placement amplitude in pixels
    ShiftFamily family{ShiftKind::rotate2d, 0.0f, 90.0f};
    std::string target_draw = "endpoint";  // "endpoint" | "spread"
    int sequence_steps = 10;         // snapshots incl. both ends (gradual mode)
    int eval_bins = 0;               // >0: per-bin metrics and trace rows

    void validate() const;
};

// Source phase: from-scratch training on the labeled source set (steps),
// then an optional fine-tune phase that interpolates between source pairs
// at feature layer mixup_layer. convex blends features and labels through
// both prefixes; wasserstein blends each batch toward its per-batch-stats
// Monge image, which enters the backward pass as a constant. batch_size 0
// trains full-batch. mixup_random_layer redraws the blend layer uniformly
// from {0, ..., num_layers-1} every batch. The adaptation phase's proximal
// anchor is reset to the weights this phase ends with.
struct SourceConfig {
    std::vector<int> hidden = {32};
    std::string activation = "relu";
    int steps = 600;
    int batch_size = 0;
    FineTune fine_tune = FineTune::plain;
    int fine_tune_steps = 0;
    int mixup_layer = 1;
    bool mixup_random_layer = false;
    double mixup_beta_a = 1.0;
    double mixup_beta_b = 1.0;
    OptimizerConfig optimizer;
    RegularizerConfig regularizer;

    void validate() const;
};

// The replicate-level experiment. self_train holds the knobs for the
// self_train / iterative / gradual_ground_truth modes (self_train always
// performs exactly one teacher update); gift holds the knobs for gift /
// gift_nongradual. Module seeds are derived from the experiment seed per
// replicate, so the seed fields inside the module configs are ignored.
// batch_size 0 in either module config resolves to the target size (gift:
// min of source and target size). Empty out_dir writes nothing.
struct ExperimentConfig {
    std::string name = "experiment";
    BenchmarkConfig benchmark;
    SourceConfig source;
    Adapt adaptation = Adapt::self_train;
    SelfTrainConfig self_train;
    GiftConfig gift;
    int replicates = 1;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool write_checkpoints = true;

    // Copy with batch sizes resolved against the benchmark sizes.
    ExperimentConfig resolved() const;
    void validate() const;  // validates the resolved copy
};

// JSON round-trip. config_to_json materializes every field (defaults
// included) so emitted runs are self-describing; config_from_json rejects
// unknown keys. The gift schedule is accepted either as "delta" or as an
// explicit "schedule" array and always materializes as the array.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct ReplicateResult {
    int replicate = 0;
    std::uint64_t seed = 0;       // replicate base seed
    std::string status = "ok";    // or "<error kind>: message"
    double source_train_accuracy = 0.0;
    double target_accuracy_before = 0.0;
    double target_accuracy_after = 0.0;
    std::vector<double> bin_accuracy_before;  // -1 marks an empty bin
    std::vector<double> bin_accuracy_after;
    int teacher_updates = 0;
    int steps_per_update = 0;
    long total_adaptation_steps = 0;
    int align_fallbacks = 0;
    CurriculumTrace trace;
    NetworkF model;               // post-adaptation weights
};

struct ResultBundle {
    ExperimentConfig config;      // resolved copy
    std::vector<ReplicateResult> replicates;
    bool partial = false;         // at least one replicate failed
    nlohmann::json summary;
    std::vector<std::string> written;  // files emitted under out_dir
};

// Runs every replicate in its own worker (each owns its RNG streams and is a
// pure function of config and replicate index; results merge in index
// order). A failing replicate records its error in status and never aborts
// the others. Writes summary.json, trace_rep<k>.csv, and
// checkpoint_rep<k>.json under out_dir when set.
ResultBundle run_experiment(const ExperimentConfig& cfg);

// True when the two summary documents agree everywhere except the
// generated_at stamp.
bool summaries_match(nlohmann::json a, nlohmann::json b);

// ---------------------------------------------------------------------------
// Teacher-update sweeps
// ---------------------------------------------------------------------------

enum class SweepFixed { total_steps, steps_per_update };

const char* sweep_fixed_name(SweepFixed f);
SweepFixed sweep_fixed_from_name(const std::string& s);

struct SweepRow {
    std::string mode;
    int update_count = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double accuracy = 0.0;        // target accuracy after adaptation
    long total_steps = 0;
};

struct SweepTable {
    std::vector<SweepRow> rows;   // one per (mode, count, replicate)
};

// One run per (mode, count). The count replaces the mode's teacher-update
// knob: iterative's round count, gift's schedule length (count 1 is the {0}
// schedule, otherwise evenly spaced with delta 1/(count-1)), gradual's
// sequence length (count+1 snapshots). fixed=total_steps keeps the base
// config's updates x steps budget (steps = max(1, budget/count));
// fixed=steps_per_update keeps the base per-update step count. Modes none
// and self_train have no update knob and are rejected.
SweepTable sweep_teacher_updates(const ExperimentConfig& base, const std::vector<int>& counts, SweepFixed fixed,
                                 const std::vector<Adapt>& modes = {Adapt::iterative, Adapt::gift});

void write_sweep_csv(const SweepTable& table, std::ostream& out);
void write_sweep_csv(const SweepTable& table, const std::string& path);

// ---------------------------------------------------------------------------
// Plot-ready CSV extraction
// ---------------------------------------------------------------------------

struct PlotBundle {
    const ResultBundle* experiment = nullptr;
    const SweepTable* sweep = nullptr;
};

// Writes whichever files the bundle can support and returns their paths:
//   fig1_twomoons.csv   mode,replicate,seed,accuracy_before,accuracy_after
//   fig2_curriculum.csv update_index,bin_lo,bin_hi,accuracy,confidence
//                       (binned trace rows of the first ok replicate)
//   fig3_sweep.csv      mode,update_count,mean_accuracy,min_accuracy,max_accuracy
// Missing parts (no experiment, no trace, no sweep) add a warning and skip
// the file; values always equal the corresponding summary/sweep entries.
std::vector<std::string> emit_plot_data(const PlotBundle& bundle, const std::string& out_dir,
                                        std::vector<std::string>* warnings = nullptr);

}  // namespace gradapt
