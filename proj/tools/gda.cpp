// Command-line front end: run experiments, sweep teacher-update counts,
// export benchmark datasets, convert dataset files between formats, and
// extract plot-ready CSVs. Exit codes: 0 success, 2 config error, 3 numeric
// failure, 4 partial (some replicates failed).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradapt/common.hpp"
#include "gradapt/harness.hpp"

using namespace gradapt;
namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::string mode;
    int replicates = -1;
    long seed = -1;
};

void add_common_options(CLI::App* cmd, Overrides& ov, bool out_required = false) {
    cmd->add_option("--config", ov.config_path, "experiment config JSON")->required();
    auto* out = cmd->add_option("--out", ov.out_dir, "output directory");
    if (out_required) out->required();
    cmd->add_option("--seed", ov.seed, "override the experiment seed");
    cmd->add_option("--mode", ov.mode, "override the adaptation mode");
    cmd->add_option("--replicates", ov.replicates, "override the replicate count");
}

ExperimentConfig load_with_overrides(const Overrides& ov) {
    ExperimentConfig cfg = load_config(ov.config_path);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.mode.empty()) cfg.adaptation = adapt_from_name(ov.mode);
    if (ov.replicates >= 0) cfg.replicates = ov.replicates;
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    return cfg;
}

int bundle_exit_code(const ResultBundle& bundle) {
    if (!bundle.partial) return 0;
    bool any_ok = false;
    bool all_numeric = true;
    for (const ReplicateResult& r : bundle.replicates) {
        if (r.status == "ok") any_ok = true;
        else if (r.status.rfind("numeric", 0) != 0) all_numeric = false;
    }
    if (!any_ok && all_numeric) return 3;
    return 4;
}

void print_bundle(const ResultBundle& bundle) {
    for (const ReplicateResult& r : bundle.replicates) {
        std::cout << "replicate " << r.replicate << " seed " << r.seed << ": ";
        if (r.status == "ok")
            std::cout << "target accuracy " << r.target_accuracy_before << " -> " << r.target_accuracy_after << "\n";
        else
            std::cout << r.status << "\n";
    }
    const nlohmann::json& agg = bundle.summary.at("aggregate");
    std::cout << "ok replicates: " << agg.at("replicates_ok").get<int>() << "\n";
    if (agg.contains("target_accuracy_after"))
        std::cout << "mean target accuracy after adaptation: " << agg.at("target_accuracy_after").at("mean")
                  << "\n";
    for (const std::string& path : bundle.written) std::cout << "wrote " << path << "\n";
}

int cmd_run(const Overrides& ov) {
    const ResultBundle bundle = run_experiment(load_with_overrides(ov));
    print_bundle(bundle);
    return bundle_exit_code(bundle);
}

int cmd_sweep(const Overrides& ov, const std::vector<int>& counts, const std::string& fixed,
              const std::vector<std::string>& mode_names) {
    ExperimentConfig cfg = load_with_overrides(ov);
    const std::string out_dir = cfg.out_dir;
    cfg.out_dir.clear();

    std::vector<Adapt> modes;
    for (const std::string& name : mode_names) modes.push_back(adapt_from_name(name));

    const SweepTable table = sweep_teacher_updates(cfg, counts, sweep_fixed_from_name(fixed), modes);

    int failed = 0;
    for (const SweepRow& r : table.rows)
        if (r.status != "ok") ++failed;

    if (out_dir.empty()) {
        write_sweep_csv(table, std::cout);
    } else {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory: " + out_dir + ": " + ec.message());
        const std::string sweep_path = (fs::path(out_dir) / "sweep.csv").string();
        write_sweep_csv(table, sweep_path);
        std::cout << "wrote " << sweep_path << "\n";
        PlotBundle plots;
        plots.sweep = &table;
        std::vector<std::string> warnings;
        for (const std::string& path : emit_plot_data(plots, out_dir, &warnings)) std::cout << "wrote " << path << "\n";
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    }
    if (failed == static_cast<int>(table.rows.size())) return 3;
    return failed > 0 ? 4 : 0;
}

int cmd_gen_data(const Overrides& ov, const std::string& format) {
    const ExperimentConfig cfg = load_with_overrides(ov).resolved();
    cfg.validate();
    if (format != "json" && format != "bin") throw ConfigError("unknown dataset format: " + format);
    const std::string ext = format == "json" ? ".json" : ".bin";

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir + ": " + ec.message());

    // Replicate 0's draws, so a `run` with the same config sees this data.
    const std::uint64_t rep_seed = derive_seed(cfg.seed, 1000);
    const BenchmarkConfig& b = cfg.benchmark;
    const auto make_pool = [&](int n, std::uint64_t seed) {
        return b.kind == "two_moons" ? make_two_moons(n, b.noise, seed)
                                     : make_glyphs(n, b.side, b.noise, seed, b.glyph_jitter);
    };

    const LabeledDataset source = make_pool(b.n_source, derive_seed(rep_seed, 0));
    const LabeledDataset pool = make_pool(b.n_target, derive_seed(rep_seed, 1));
    const LabeledDataset target =
        b.target_draw == "spread"
            ? make_perturbed_split(pool, b.family, {{b.family.lo, b.family.hi}}, derive_seed(rep_seed, 2))[0]
            : apply_shift(pool, b.family, b.family.hi);

    const auto emit = [&](const LabeledDataset& ds, const std::string& stem) {
        const std::string path = (fs::path(cfg.out_dir) / (stem + ext)).string();
        save_dataset(ds, path);
        std::cout << "wrote " << path << " (" << ds.size() << " examples)\n";
    };
    emit(source, "source");
    emit(target, "target");
    if (cfg.adaptation == Adapt::gradual_ground_truth) {
        const ShiftSequence seq = make_shift_sequence(pool, b.family, b.sequence_steps);
        for (int i = 0; i < seq.size(); ++i) emit(seq.snapshots[i], "snapshot_" + std::to_string(i));
    }
    return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path) {
    const LabeledDataset ds = load_dataset(in_path);
    save_dataset(ds, out_path);
    std::cout << "wrote " << out_path << " (" << ds.size() << " examples)\n";
    return 0;
}

int cmd_plot_data(const Overrides& ov) {
    ExperimentConfig cfg = load_with_overrides(ov);
    const std::string out_dir = cfg.out_dir;
    cfg.out_dir.clear();  // the run itself writes nothing; the figures do
    const ResultBundle bundle = run_experiment(cfg);
    PlotBundle plots;
    plots.experiment = &bundle;
    std::vector<std::string> warnings;
    for (const std::string& path : emit_plot_data(plots, out_dir, &warnings)) std::cout << "wrote " << path << "\n";
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    return bundle_exit_code(bundle);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradual domain adaptation toolkit"};
    app.require_subcommand(1);

    Overrides run_ov, sweep_ov, gen_ov, plot_ov;
    std::vector<int> counts;
    std::string fixed = "total_steps";
    std::vector<std::string> sweep_modes = {"iterative", "gift"};
    std::string gen_format = "bin";
    std::string convert_in, convert_out;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    add_common_options(run, run_ov);

    CLI::App* sweep = app.add_subcommand("sweep", "vary the teacher-update count");
    add_common_options(sweep, sweep_ov);
    sweep->add_option("--counts", counts, "teacher-update counts")->required()->delimiter(',');
    sweep->add_option("--fixed", fixed, "hold total_steps or steps_per_update");
    sweep->add_option("--modes", sweep_modes, "adaptation modes to sweep")->delimiter(',');

    CLI::App* gen = app.add_subcommand("gen-data", "export the benchmark datasets");
    add_common_options(gen, gen_ov, true);
    gen->add_option("--format", gen_format, "dataset file format: bin or json");

    CLI::App* convert = app.add_subcommand("convert", "convert a dataset file between formats");
    convert->add_option("--in", convert_in, "input dataset path")->required();
    convert->add_option("--out", convert_out, "output dataset path")->required();

    CLI::App* plot = app.add_subcommand("plot-data", "run a config and emit figure CSVs");
    add_common_options(plot, plot_ov, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_ov);
        if (sweep->parsed()) return cmd_sweep(sweep_ov, counts, fixed, sweep_modes);
        if (gen->parsed()) return cmd_gen_data(gen_ov, gen_format);
        if (convert->parsed()) return cmd_convert(convert_in, convert_out);
        return cmd_plot_data(plot_ov);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
