#include "gradapt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "gradapt/common.hpp"
#include "gradapt/mixup.hpp"
#include "gradapt/nn_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gradapt {

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

const char* fine_tune_name(FineTune m) {
    switch (m) {
        case FineTune::plain: return "plain";
        case FineTune::convex_mixup: return "convex_mixup";
        default: return "wasserstein_mixup";
    }
}

FineTune fine_tune_from_name(const std::string& s) {
    if (s == "plain") return FineTune::plain;
    if (s == "convex_mixup") return FineTune::convex_mixup;
    if (s == "wasserstein_mixup") return FineTune::wasserstein_mixup;
    throw ConfigError("unknown fine-tune mode: " + s);
}

const char* adapt_name(Adapt m) {
    switch (m) {
        case Adapt::none: return "none";
        case Adapt::self_train: return "self_train";
        case Adapt::iterative: return "iterative";
        case Adapt::gift: return "gift";
        case Adapt::gift_nongradual: return "gift_nongradual";
        default: return "gradual_ground_truth";
    }
}

Adapt adapt_from_name(const std::string& s) {
    if (s == "none") return Adapt::none;
    if (s == "self_train") return Adapt::self_train;
    if (s == "iterative") return Adapt::iterative;
    if (s == "gift") return Adapt::gift;
    if (s == "gift_nongradual") return Adapt::gift_nongradual;
    if (s == "gradual_ground_truth") return Adapt::gradual_ground_truth;
    throw ConfigError("unknown adaptation mode: " + s);
}

const char* sweep_fixed_name(SweepFixed f) {
    return f == SweepFixed::total_steps ? "total_steps" : "steps_per_update";
}

SweepFixed sweep_fixed_from_name(const std::string& s) {
    if (s == "total_steps") return SweepFixed::total_steps;
    if (s == "steps_per_update") return SweepFixed::steps_per_update;
    throw ConfigError("unknown sweep-fixed kind: " + s);
}

namespace {

const char* opt_kind_name(OptKind k) { return k == OptKind::sgd_momentum ? "sgd_momentum" : "adam"; }

OptKind opt_kind_from_name(const std::string& s) {
    if (s == "sgd_momentum") return OptKind::sgd_momentum;
    if (s == "adam") return OptKind::adam;
    throw ConfigError("unknown optimizer kind: " + s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation and resolution
// ---------------------------------------------------------------------------

void BenchmarkConfig::validate() const {
    if (kind != "two_moons" && kind != "glyphs") throw ConfigError("unknown benchmark kind: " + kind);
    if (n_source < 4 || n_target < 4) throw ConfigError("benchmark needs at least 4 examples per domain");
    if (noise < 0.0f) throw ConfigError("noise must be nonnegative");
    if (kind == "glyphs" && side < 8) throw ConfigError("glyph rasters need side >= 8");
    if (glyph_jitter < 0.0f) throw ConfigError("glyph jitter must be nonnegative");
    family.validate();
    if (target_draw != "endpoint" && target_draw != "spread")
        throw ConfigError("unknown target draw: " + target_draw);
    if (sequence_steps < 2) throw ConfigError("shift sequence needs at least 2 snapshots");
    if (eval_bins < 0) throw ConfigError("eval_bins must be nonnegative");
}

void SourceConfig::validate() const {
    for (int h : hidden)
        if (h < 1) throw ConfigError("hidden layer sizes must be positive");
    act_from_name(activation);
    if (steps < 1) throw ConfigError("source training needs at least one step");
    if (batch_size < 0) throw ConfigError("batch size must be nonnegative");
    if (fine_tune_steps < 0) throw ConfigError("fine-tune steps must be nonnegative");
    if (mixup_layer < 0) throw ConfigError("mixup layer must be nonnegative");
    if (!(mixup_beta_a > 0.0) || !(mixup_beta_b > 0.0)) throw ConfigError("mixup Beta parameters must be positive");
}

ExperimentConfig ExperimentConfig::resolved() const {
    ExperimentConfig r = *this;
    if (r.self_train.batch_size == 0) r.self_train.batch_size = r.benchmark.n_target;
    if (r.gift.batch_size == 0) r.gift.batch_size = std::min(r.benchmark.n_source, r.benchmark.n_target);
    return r;
}

void ExperimentConfig::validate() const {
    benchmark.validate();
    source.validate();
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    const ExperimentConfig r = resolved();
    r.self_train.validate();
    r.gift.validate();
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

void require_keys(const json& j, const char* ctx, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(ctx) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + ctx);
    }
}

json optimizer_to_json(const OptimizerConfig& o) {
    json j;
    j["kind"] = opt_kind_name(o.kind);
    j["learning_rate"] = o.learning_rate;
    j["momentum"] = o.momentum;
    j["beta1"] = o.beta1;
    j["beta2"] = o.beta2;
    j["epsilon"] = o.epsilon;
    return j;
}

OptimizerConfig optimizer_from_json(const json& j) {
    require_keys(j, "optimizer", {"kind", "learning_rate", "momentum", "beta1", "beta2", "epsilon"});
    OptimizerConfig o;
    if (j.contains("kind")) o.kind = opt_kind_from_name(j.at("kind").get<std::string>());
    o.learning_rate = j.value("learning_rate", o.learning_rate);
    o.momentum = j.value("momentum", o.momentum);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.epsilon = j.value("epsilon", o.epsilon);
    return o;
}

json regularizer_to_json(const RegularizerConfig& r) {
    json j;
    j["weight_decay"] = r.weight_decay;
    j["proximal_weight"] = r.proximal_weight;
    return j;
}

RegularizerConfig regularizer_from_json(const json& j) {
    require_keys(j, "regularizer", {"weight_decay", "proximal_weight"});
    RegularizerConfig r;
    r.weight_decay = j.value("weight_decay", r.weight_decay);
    r.proximal_weight = j.value("proximal_weight", r.proximal_weight);
    return r;
}

json benchmark_to_json(const BenchmarkConfig& b) {
    json j;
    j["kind"] = b.kind;
    j["n_source"] = b.n_source;
    j["n_target"] = b.n_target;
    j["noise"] = b.noise;
    j["side"] = b.side;
    j["glyph_jitter"] = b.glyph_jitter;
    j["shift"] = {{"kind", shift_kind_name(b.family.kind)}, {"lo", b.family.lo}, {"hi", b.family.hi}};
    j["target_draw"] = b.target_draw;
    j["sequence_steps"] = b.sequence_steps;
    j["eval_bins"] = b.eval_bins;
    return j;
}

BenchmarkConfig benchmark_from_json(const json& j) {
    require_keys(j, "benchmark", {"kind", "n_source", "n_target", "noise", "side", "glyph_jitter", "shift",
                                  "target_draw", "sequence_steps", "eval_bins"});
    BenchmarkConfig b;
    b.kind = j.value("kind", b.kind);
    b.n_source = j.value("n_source", b.n_source);
    b.n_target = j.value("n_target", b.n_target);
    b.noise = j.value("noise", b.noise);
    b.side = j.value("side", b.side);
    b.glyph_jitter = j.value("glyph_jitter", b.glyph_jitter);
    if (j.contains("shift")) {
        const json& s = j.at("shift");
        require_keys(s, "benchmark.shift", {"kind", "lo", "hi"});
        if (s.contains("kind")) b.family.kind = shift_kind_from_name(s.at("kind").get<std::string>());
        b.family.lo = s.value("lo", b.family.lo);
        b.family.hi = s.value("hi", b.family.hi);
    }
    b.target_draw = j.value("target_draw", b.target_draw);
    b.sequence_steps = j.value("sequence_steps", b.sequence_steps);
    b.eval_bins = j.value("eval_bins", b.eval_bins);
    return b;
}

json source_to_json(const SourceConfig& s) {
    json j;
    j["hidden"] = s.hidden;
    j["activation"] = s.activation;
    j["steps"] = s.steps;
    j["batch_size"] = s.batch_size;
    j["fine_tune"] = fine_tune_name(s.fine_tune);
    j["fine_tune_steps"] = s.fine_tune_steps;
    j["mixup_layer"] = s.mixup_layer;
    j["mixup_random_layer"] = s.mixup_random_layer;
    j["mixup_beta"] = {s.mixup_beta_a, s.mixup_beta_b};
    j["optimizer"] = optimizer_to_json(s.optimizer);
    j["regularizer"] = regularizer_to_json(s.regularizer);
    return j;
}

SourceConfig source_from_json(const json& j) {
    require_keys(j, "source",
                 {"hidden", "activation", "steps", "batch_size", "fine_tune", "fine_tune_steps", "mixup_layer",
                  "mixup_random_layer", "mixup_beta", "optimizer", "regularizer"});
    SourceConfig s;
    if (j.contains("hidden")) s.hidden = j.at("hidden").get<std::vector<int>>();
    s.activation = j.value("activation", s.activation);
    s.steps = j.value("steps", s.steps);
    s.batch_size = j.value("batch_size", s.batch_size);
    if (j.contains("fine_tune")) s.fine_tune = fine_tune_from_name(j.at("fine_tune").get<std::string>());
    s.fine_tune_steps = j.value("fine_tune_steps", s.fine_tune_steps);
    s.mixup_layer = j.value("mixup_layer", s.mixup_layer);
    s.mixup_random_layer = j.value("mixup_random_layer", s.mixup_random_layer);
    if (j.contains("mixup_beta")) {
        const auto beta = j.at("mixup_beta").get<std::vector<double>>();
        if (beta.size() != 2) throw ConfigError("mixup_beta must hold exactly [alpha, beta]");
        s.mixup_beta_a = beta[0];
        s.mixup_beta_b = beta[1];
    }
    if (j.contains("optimizer")) s.optimizer = optimizer_from_json(j.at("optimizer"));
    if (j.contains("regularizer")) s.regularizer = regularizer_from_json(j.at("regularizer"));
    return s;
}

json self_train_to_json(const SelfTrainConfig& c) {
    json j;
    j["alpha"] = c.alpha;
    j["num_teacher_updates"] = c.num_teacher_updates;
    j["steps_per_update"] = c.steps_per_update;
    j["batch_size"] = c.batch_size;
    j["soft_targets"] = c.soft_targets;
    j["optimizer"] = optimizer_to_json(c.optimizer);
    j["regularizer"] = regularizer_to_json(c.regularizer);
    return j;
}

SelfTrainConfig self_train_from_json(const json& j) {
    require_keys(j, "self_train", {"alpha", "num_teacher_updates", "steps_per_update", "batch_size", "soft_targets",
                                   "optimizer", "regularizer"});
    SelfTrainConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.num_teacher_updates = j.value("num_teacher_updates", c.num_teacher_updates);
    c.steps_per_update = j.value("steps_per_update", c.steps_per_update);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.soft_targets = j.value("soft_targets", c.soft_targets);
    if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
    if (j.contains("regularizer")) c.regularizer = regularizer_from_json(j.at("regularizer"));
    return c;
}

json gift_to_json(const GiftConfig& c) {
    json j;
    j["split_point"] = c.split_point;
    j["schedule"] = c.schedule.sequence;
    j["steps_per_lambda"] = c.steps_per_lambda;
    j["alpha"] = c.alpha;
    j["alignment"] = align_name(c.alignment);
    j["batch_size"] = c.batch_size;
    j["stop_gradient"] = c.stop_gradient;
    j["teacher_source_features"] = c.teacher_source_features;
    j["final_self_train"] = c.final_self_train;
    j["optimizer"] = optimizer_to_json(c.optimizer);
    j["regularizer"] = regularizer_to_json(c.regularizer);
    return j;
}

GiftConfig gift_from_json(const json& j) {
    require_keys(j, "gift",
                 {"split_point", "delta", "schedule", "steps_per_lambda", "alpha", "alignment", "batch_size",
                  "stop_gradient", "teacher_source_features", "final_self_train", "optimizer", "regularizer"});
    if (j.contains("delta") && j.contains("schedule"))
        throw ConfigError("gift config accepts either 'delta' or 'schedule', not both");
    GiftConfig c;
    c.split_point = j.value("split_point", c.split_point);
    if (j.contains("delta")) c.schedule = make_lambda_schedule(j.at("delta").get<double>());
    if (j.contains("schedule")) c.schedule.sequence = j.at("schedule").get<std::vector<double>>();
    c.steps_per_lambda = j.value("steps_per_lambda", c.steps_per_lambda);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("alignment")) c.alignment = align_from_name(j.at("alignment").get<std::string>());
    c.batch_size = j.value("batch_size", c.batch_size);
    c.stop_gradient = j.value("stop_gradient", c.stop_gradient);
    c.teacher_source_features = j.value("teacher_source_features", c.teacher_source_features);
    c.final_self_train = j.value("final_self_train", c.final_self_train);
    if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
    if (j.contains("regularizer")) c.regularizer = regularizer_from_json(j.at("regularizer"));
    return c;
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg_in) {
    const ExperimentConfig cfg = cfg_in.resolved();
    json j;
    j["schema_version"] = 1;
    j["name"] = cfg.name;
    j["benchmark"] = benchmark_to_json(cfg.benchmark);
    j["source"] = source_to_json(cfg.source);
    j["adaptation"] = adapt_name(cfg.adaptation);
    j["self_train"] = self_train_to_json(cfg.self_train);
    j["gift"] = gift_to_json(cfg.gift);
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["write_checkpoints"] = cfg.write_checkpoints;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    try {
        require_keys(j, "config", {"schema_version", "name", "benchmark", "source", "adaptation", "self_train",
                                   "gift", "replicates", "seed", "out_dir", "write_checkpoints"});
        if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
            throw ConfigError("unsupported config schema version");
        ExperimentConfig cfg;
        cfg.name = j.value("name", cfg.name);
        if (j.contains("benchmark")) cfg.benchmark = benchmark_from_json(j.at("benchmark"));
        if (j.contains("source")) cfg.source = source_from_json(j.at("source"));
        if (j.contains("adaptation")) cfg.adaptation = adapt_from_name(j.at("adaptation").get<std::string>());
        if (j.contains("self_train")) cfg.self_train = self_train_from_json(j.at("self_train"));
        if (j.contains("gift")) cfg.gift = gift_from_json(j.at("gift"));
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.write_checkpoints = j.value("write_checkpoints", cfg.write_checkpoints);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Replicate execution
// ---------------------------------------------------------------------------

namespace {

struct ReplicateData {
    LabeledDataset source;
    LabeledDataset target_labeled;
    LabeledDataset target_unlabeled;
    ShiftBins bins;
    bool has_bins = false;
    ShiftSequence seq;  // gradual mode only
};

LabeledDataset make_pool(const BenchmarkConfig& b, int n, std::uint64_t seed) {
    if (b.kind == "two_moons") return make_two_moons(n, b.noise, seed);
    return make_glyphs(n, b.side, b.noise, seed, b.glyph_jitter);
}

ReplicateData build_data(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
    const BenchmarkConfig& b = cfg.benchmark;
    ReplicateData d;
    d.source = make_pool(b, b.n_source, derive_seed(rep_seed, 0));
    LabeledDataset pool = make_pool(b, b.n_target, derive_seed(rep_seed, 1));
    if (b.target_draw == "spread")
        d.target_labeled = make_perturbed_split(pool, b.family, {{b.family.lo, b.family.hi}},
                                                derive_seed(rep_seed, 2))[0];
    else
        d.target_labeled = apply_shift(pool, b.family, b.family.hi);
    d.target_unlabeled = strip_labels(d.target_labeled);
    if (b.eval_bins > 0) {
        d.bins = bin_by_shift(d.target_labeled, b.eval_bins);
        d.has_bins = true;
    }
    if (cfg.adaptation == Adapt::gradual_ground_truth) d.seq = make_shift_sequence(pool, b.family, b.sequence_steps);
    return d;
}

NetworkF train_source(const ExperimentConfig& cfg, const LabeledDataset& source, std::uint64_t rep_seed) {
    const SourceConfig& sc = cfg.source;
    std::vector<int> dims;
    dims.push_back(source.dim());
    for (int h : sc.hidden) dims.push_back(h);
    dims.push_back(source.num_classes);
    NetworkF net = init_mlp<float>(dims, derive_seed(rep_seed, 3), act_from_name(sc.activation));
    OptimizerState<float> opt = make_optimizer(net, sc.optimizer);
    Rng rng = make_rng(rep_seed, 4);

    const int n = source.size();
    const int bs = sc.batch_size == 0 ? n : std::min(sc.batch_size, n);
    const MatF y_full = one_hot(source.labels, source.num_classes);

    for (int s = 0; s < sc.steps; ++s) {
        if (sc.batch_size == 0) {
            train_step(net, opt, sc.regularizer, source.features, y_full);
        } else {
            const std::vector<int> idx = sample_batch_indices(n, bs, rng);
            train_step(net, opt, sc.regularizer, select_rows(source.features, idx), select_rows(y_full, idx));
        }
    }

    const int max_blend_layer = net.num_layers() - 1;  // blending logits is excluded
    for (int s = 0; s < sc.fine_tune_steps; ++s) {
        const std::vector<int> ia = sample_batch_indices(n, bs, rng);
        const std::vector<int> ib = sample_batch_indices(n, bs, rng);
        const double lam = sample_mixup_lambda(rng, sc.mixup_beta_a, sc.mixup_beta_b);
        int L = sc.mixup_layer;
        if (sc.mixup_random_layer) L = std::uniform_int_distribution<int>(0, max_blend_layer)(rng);
        const MatF xa = select_rows(source.features, ia);
        const MatF ya = select_rows(y_full, ia);
        if (sc.fine_tune == FineTune::convex_mixup) {
            const MatF xb = select_rows(source.features, ib);
            MatF yblend = select_rows(y_full, ib);
            for (std::size_t v = 0; v < yblend.data.size(); ++v)
                yblend.data[v] = static_cast<float>((1.0 - lam) * ya.data[v] + lam * yblend.data[v]);
            train_step_pair(net, opt, sc.regularizer, xa, xb, static_cast<float>(lam), yblend, L);
        } else if (sc.fine_tune == FineTune::wasserstein_mixup) {
            const MatF za = forward_to_layer(net, xa, L);
            const MatF zb = forward_to_layer(net, select_rows(source.features, ib), L);
            MatF transported = monge_map(za, gaussian_stats(za), gaussian_stats(zb));
            for (float& v : transported.data) v *= static_cast<float>(lam);
            train_step_blend(net, opt, sc.regularizer, xa, transported, static_cast<float>(1.0 - lam), ya, L, false);
        } else {
            train_step(net, opt, sc.regularizer, xa, ya);
        }
    }
    reset_init_snapshot(net);
    return net;
}

struct AdaptOutcome {
    NetworkF net;
    CurriculumTrace trace;
    int teacher_updates = 0;
    int steps_per_update = 0;
    long total_steps = 0;
    int align_fallbacks = 0;
};

AdaptOutcome run_adaptation(const ExperimentConfig& cfg, const NetworkF& src_net, const ReplicateData& d,
                            std::uint64_t rep_seed) {
    AdaptOutcome out;
    const ShiftBins* bins = d.has_bins ? &d.bins : nullptr;

    if (cfg.adaptation == Adapt::none) {
        out.net = clone_network(src_net);
        return out;
    }

    if (cfg.adaptation == Adapt::gift || cfg.adaptation == Adapt::gift_nongradual) {
        GiftConfig g = cfg.gift;
        g.seed = derive_seed(rep_seed, 6);
        const GiftResult r = cfg.adaptation == Adapt::gift
                                 ? gift_run(src_net, d.source, d.target_unlabeled, g, bins)
                                 : gift_nongradual_run(src_net, d.source, d.target_unlabeled, g, bins);
        out.net = r.net;
        out.trace = r.trace;
        out.teacher_updates = static_cast<int>(g.schedule.sequence.size()) + (g.final_self_train ? 1 : 0);
        out.steps_per_update = g.steps_per_lambda;
        out.total_steps = r.total_steps;
        out.align_fallbacks = r.align_fallbacks;
        return out;
    }

    SelfTrainConfig st = cfg.self_train;
    st.seed = derive_seed(rep_seed, 5);
    const double retained = std::ceil(st.alpha * st.batch_size) / st.batch_size;
    CurriculumTrace trace;
    const RoundCallback cb = [&](const RoundStats& rs, const NetworkF& student) {
        append_trace_rows(trace, rs.round, static_cast<double>(rs.round), student, d.target_unlabeled.features, bins,
                          retained);
    };

    if (cfg.adaptation == Adapt::self_train) {
        out.net = self_train_once(src_net, d.target_unlabeled, st);
        append_trace_rows(trace, 1, 1.0, out.net, d.target_unlabeled.features, bins, retained);
        out.teacher_updates = 1;
        out.steps_per_update = st.steps_per_update;
        out.total_steps = st.steps_per_update;
    } else if (cfg.adaptation == Adapt::iterative) {
        SelfTrainResult r = iterative_self_train(src_net, d.target_unlabeled, st, cb);
        out.net = std::move(r.net);
        out.teacher_updates = static_cast<int>(r.rounds.size());
        out.steps_per_update = st.steps_per_update;
        for (const RoundStats& rs : r.rounds) out.total_steps += rs.steps;
    } else {  // gradual_ground_truth
        SelfTrainResult r = gradual_self_train(src_net, d.seq, st, cb);
        out.net = std::move(r.net);
        out.teacher_updates = static_cast<int>(r.rounds.size());
        out.steps_per_update = st.steps_per_update;
        for (const RoundStats& rs : r.rounds) out.total_steps += rs.steps;
    }
    out.trace = std::move(trace);
    return out;
}

std::vector<double> bin_accuracies(const NetworkF& net, const ShiftBins& bins) {
    std::vector<double> acc;
    acc.reserve(bins.bins.size());
    for (const LabeledDataset& bin : bins.bins) acc.push_back(bin.size() > 0 ? evaluate_accuracy(net, bin) : -1.0);
    return acc;
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, int rep) {
    ReplicateResult r;
    r.replicate = rep;
    r.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(rep));
    try {
        const ReplicateData d = build_data(cfg, r.seed);
        const NetworkF net = train_source(cfg, d.source, r.seed);
        r.source_train_accuracy = evaluate_accuracy(net, d.source);
        r.target_accuracy_before = evaluate_accuracy(net, d.target_labeled);
        if (d.has_bins) r.bin_accuracy_before = bin_accuracies(net, d.bins);

        AdaptOutcome out = run_adaptation(cfg, net, d, r.seed);
        r.model = std::move(out.net);
        r.trace = std::move(out.trace);
        r.teacher_updates = out.teacher_updates;
        r.steps_per_update = out.steps_per_update;
        r.total_adaptation_steps = out.total_steps;
        r.align_fallbacks = out.align_fallbacks;
        r.target_accuracy_after = evaluate_accuracy(r.model, d.target_labeled);
        if (d.has_bins) r.bin_accuracy_after = bin_accuracies(r.model, d.bins);
    } catch (const ConfigError& e) {
        r.status = std::string("config error: ") + e.what();
    } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "numeric error: " << e.what();
        if (e.step >= 0) msg << " at step " << e.step;
        r.status = msg.str();
    } catch (const std::exception& e) {
        r.status = std::string("error: ") + e.what();
    }
    return r;
}

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json stats_json(const std::vector<double>& v) {
    json j;
    double mean = 0.0, lo = v.front(), hi = v.front();
    for (double x : v) {
        mean += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    j["mean"] = mean / static_cast<double>(v.size());
    j["min"] = lo;
    j["max"] = hi;
    return j;
}

json replicate_to_json(const ReplicateResult& r) {
    json j;
    j["replicate"] = r.replicate;
    j["seed"] = r.seed;
    j["status"] = r.status;
    if (r.status != "ok") return j;
    json m;
    m["source_train_accuracy"] = r.source_train_accuracy;
    m["target_accuracy_before"] = r.target_accuracy_before;
    m["target_accuracy_after"] = r.target_accuracy_after;
    if (!r.bin_accuracy_before.empty()) {
        m["bin_accuracy_before"] = r.bin_accuracy_before;
        m["bin_accuracy_after"] = r.bin_accuracy_after;
    }
    m["teacher_updates"] = r.teacher_updates;
    m["steps_per_update"] = r.steps_per_update;
    m["total_adaptation_steps"] = r.total_adaptation_steps;
    m["align_fallbacks"] = r.align_fallbacks;
    j["metrics"] = m;
    return j;
}

json build_summary(const ExperimentConfig& cfg, const std::vector<ReplicateResult>& reps) {
    json summary;
    summary["schema"] = "gda-summary";
    summary["schema_version"] = 1;
    summary["generated_at"] = timestamp_utc();
    summary["config"] = config_to_json(cfg);
    json arr = json::array();
    std::vector<double> before, after;
    for (const ReplicateResult& r : reps) {
        arr.push_back(replicate_to_json(r));
        if (r.status == "ok") {
            before.push_back(r.target_accuracy_before);
            after.push_back(r.target_accuracy_after);
        }
    }
    summary["replicates"] = std::move(arr);
    json agg;
    agg["replicates_ok"] = static_cast<int>(after.size());
    if (!after.empty()) {
        agg["target_accuracy_before"] = stats_json(before);
        agg["target_accuracy_after"] = stats_json(after);
    }
    summary["aggregate"] = std::move(agg);
    return summary;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text;
    if (!out.good()) throw ConfigError("failed writing output file: " + path);
}

}  // namespace

ResultBundle run_experiment(const ExperimentConfig& cfg_in) {
    const ExperimentConfig cfg = cfg_in.resolved();
    cfg.validate();

    ResultBundle bundle;
    bundle.config = cfg;
    bundle.replicates.reserve(static_cast<std::size_t>(cfg.replicates));

    // Bounded worker windows; results land in replicate order regardless of
    // finish order.
    const int slots = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    for (int start = 0; start < cfg.replicates; start += slots) {
        const int end = std::min(cfg.replicates, start + slots);
        std::vector<std::future<ReplicateResult>> futs;
        futs.reserve(static_cast<std::size_t>(end - start));
        for (int rep = start; rep < end; ++rep)
            futs.push_back(std::async(std::launch::async, [&cfg, rep] { return run_replicate(cfg, rep); }));
        for (auto& f : futs) bundle.replicates.push_back(f.get());
    }

    for (const ReplicateResult& r : bundle.replicates)
        if (r.status != "ok") bundle.partial = true;

    bundle.summary = build_summary(cfg, bundle.replicates);

    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir + ": " + ec.message());
        for (const ReplicateResult& r : bundle.replicates) {
            if (r.status != "ok") continue;
            const std::string tag = "_rep" + std::to_string(r.replicate);
            if (!r.trace.rows.empty()) {
                const std::string path = (fs::path(cfg.out_dir) / ("trace" + tag + ".csv")).string();
                write_trace_csv(r.trace, path);
                bundle.written.push_back(path);
            }
            if (cfg.write_checkpoints) {
                const std::string path = (fs::path(cfg.out_dir) / ("checkpoint" + tag + ".json")).string();
                save_network(r.model, path);
                bundle.written.push_back(path);
            }
        }
        const std::string summary_path = (fs::path(cfg.out_dir) / "summary.json").string();
        write_text_file(summary_path, bundle.summary.dump(2) + "\n");
        bundle.written.push_back(summary_path);
    }
    return bundle;
}

bool summaries_match(json a, json b) {
    a.erase("generated_at");
    b.erase("generated_at");
    return a == b;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

long base_update_count(const ExperimentConfig& cfg, Adapt mode) {
    switch (mode) {
        case Adapt::iterative: return cfg.self_train.num_teacher_updates;
        case Adapt::gift:
        case Adapt::gift_nongradual: return static_cast<long>(cfg.gift.schedule.sequence.size());
        case Adapt::gradual_ground_truth: return cfg.benchmark.sequence_steps - 1;
        default: throw ConfigError(std::string("mode has no teacher-update knob to sweep: ") + adapt_name(mode));
    }
}

int base_steps_per_update(const ExperimentConfig& cfg, Adapt mode) {
    if (mode == Adapt::gift || mode == Adapt::gift_nongradual) return cfg.gift.steps_per_lambda;
    return cfg.self_train.steps_per_update;
}

void apply_update_count(ExperimentConfig& cfg, Adapt mode, int count, int steps) {
    switch (mode) {
        case Adapt::iterative:
            cfg.self_train.num_teacher_updates = count;
            cfg.self_train.steps_per_update = steps;
            break;
        case Adapt::gift:
        case Adapt::gift_nongradual:
            cfg.gift.schedule = count == 1 ? LambdaSchedule{{0.0}} : make_lambda_schedule(1.0 / (count - 1));
            cfg.gift.steps_per_lambda = steps;
            break;
        default:  // gradual_ground_truth
            cfg.benchmark.sequence_steps = count + 1;
            cfg.self_train.steps_per_update = steps;
            break;
    }
}

}  // namespace

SweepTable sweep_teacher_updates(const ExperimentConfig& base, const std::vector<int>& counts, SweepFixed fixed,
                                 const std::vector<Adapt>& modes) {
    if (counts.empty()) throw ConfigError("sweep needs at least one update count");
    for (int c : counts)
        if (c < 1) throw ConfigError("sweep update counts must be >= 1");
    if (modes.empty()) throw ConfigError("sweep needs at least one mode");

    const ExperimentConfig resolved = base.resolved();
    resolved.validate();

    SweepTable table;
    for (Adapt mode : modes) {
        const long budget = base_update_count(resolved, mode) * base_steps_per_update(resolved, mode);
        for (int count : counts) {
            ExperimentConfig cfg = resolved;
            cfg.adaptation = mode;
            cfg.out_dir.clear();
            cfg.write_checkpoints = false;
            const int steps = fixed == SweepFixed::steps_per_update
                                  ? base_steps_per_update(resolved, mode)
                                  : static_cast<int>(std::max(1L, budget / count));
            apply_update_count(cfg, mode, count, steps);
            const ResultBundle bundle = run_experiment(cfg);
            for (const ReplicateResult& r : bundle.replicates) {
                SweepRow row;
                row.mode = adapt_name(mode);
                row.update_count = count;
                row.replicate = r.replicate;
                row.seed = r.seed;
                row.status = r.status;
                row.accuracy = r.target_accuracy_after;
                row.total_steps = r.total_adaptation_steps;
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

namespace {

// Numbers in plot/sweep CSVs render exactly as in the JSON summaries so the
// two artifact families never disagree.
std::string fmt_double(double v) { return json(v).dump(); }

}  // namespace

void write_sweep_csv(const SweepTable& table, std::ostream& out) {
    out << "mode,update_count,replicate,seed,status,accuracy,total_steps\n";
    for (const SweepRow& r : table.rows) {
        out << r.mode << ',' << r.update_count << ',' << r.replicate << ',' << r.seed << ',' << r.status << ','
            << fmt_double(r.accuracy) << ',' << r.total_steps << '\n';
    }
}

void write_sweep_csv(const SweepTable& table, const std::string& path) {
    std::ostringstream buf;
    write_sweep_csv(table, buf);
    write_text_file(path, buf.str());
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

std::vector<std::string> emit_plot_data(const PlotBundle& bundle, const std::string& out_dir,
                                        std::vector<std::string>* warnings) {
    std::vector<std::string> written;
    const auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    const bool has_exp = bundle.experiment != nullptr && !bundle.experiment->replicates.empty();
    const bool has_sweep = bundle.sweep != nullptr && !bundle.sweep->rows.empty();
    if (!has_exp && !has_sweep) {
        warn("empty bundle: nothing to emit");
        return written;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + out_dir + ": " + ec.message());

    if (has_exp) {
        const ResultBundle& exp = *bundle.experiment;
        const char* mode = adapt_name(exp.config.adaptation);

        std::ostringstream fig1;
        fig1 << "mode,replicate,seed,accuracy_before,accuracy_after\n";
        int ok_rows = 0;
        for (const ReplicateResult& r : exp.replicates) {
            if (r.status != "ok") continue;
            fig1 << mode << ',' << r.replicate << ',' << r.seed << ',' << fmt_double(r.target_accuracy_before) << ','
                 << fmt_double(r.target_accuracy_after) << '\n';
            ++ok_rows;
        }
        if (ok_rows > 0) {
            const std::string path = (fs::path(out_dir) / "fig1_twomoons.csv").string();
            write_text_file(path, fig1.str());
            written.push_back(path);
        } else {
            warn("no successful replicates: skipping fig1_twomoons.csv");
        }

        const CurriculumTrace* trace = nullptr;
        for (const ReplicateResult& r : exp.replicates) {
            bool binned = false;
            for (const TraceRow& row : r.trace.rows) binned = binned || row.bin_id >= 0;
            if (r.status == "ok" && binned) {
                trace = &r.trace;
                break;
            }
        }
        if (trace != nullptr) {
            std::ostringstream fig2;
            fig2 << "update_index,bin_lo,bin_hi,accuracy,confidence\n";
            for (const TraceRow& row : trace->rows) {
                if (row.bin_id < 0) continue;
                fig2 << row.update_index << ',' << fmt_double(row.bin_lo) << ',' << fmt_double(row.bin_hi) << ','
                     << fmt_double(row.accuracy) << ',' << fmt_double(row.mean_confidence) << '\n';
            }
            const std::string path = (fs::path(out_dir) / "fig2_curriculum.csv").string();
            write_text_file(path, fig2.str());
            written.push_back(path);
        } else {
            warn("no binned curriculum trace: skipping fig2_curriculum.csv");
        }
    } else {
        warn("no experiment results: skipping fig1_twomoons.csv and fig2_curriculum.csv");
    }

    if (has_sweep) {
        // Ordered aggregation per (mode, count) over ok rows, first-seen order.
        std::vector<std::pair<std::string, int>> keys;
        std::vector<std::vector<double>> groups;
        for (const SweepRow& r : bundle.sweep->rows) {
            if (r.status != "ok") continue;
            const std::pair<std::string, int> key{r.mode, r.update_count};
            std::size_t g = 0;
            while (g < keys.size() && keys[g] != key) ++g;
            if (g == keys.size()) {
                keys.push_back(key);
                groups.emplace_back();
            }
            groups[g].push_back(r.accuracy);
        }
        if (!keys.empty()) {
            std::ostringstream fig3;
            fig3 << "mode,update_count,mean_accuracy,min_accuracy,max_accuracy\n";
            for (std::size_t g = 0; g < keys.size(); ++g) {
                double mean = 0.0, lo = groups[g].front(), hi = groups[g].front();
                for (double a : groups[g]) {
                    mean += a;
                    lo = std::min(lo, a);
                    hi = std::max(hi, a);
                }
                mean /= static_cast<double>(groups[g].size());
                fig3 << keys[g].first << ',' << keys[g].second << ',' << fmt_double(mean) << ',' << fmt_double(lo)
                     << ',' << fmt_double(hi) << '\n';
            }
            const std::string path = (fs::path(out_dir) / "fig3_sweep.csv").string();
            write_text_file(path, fig3.str());
            written.push_back(path);
        } else {
            warn("sweep has no successful rows: skipping fig3_sweep.csv");
        }
    } else {
        warn("no sweep table: skipping fig3_sweep.csv");
    }
    return written;
}

}  // namespace gradapt
