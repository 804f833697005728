// lobx: command-line workbench driver.
//
//   ingest   ITCH file(s) -> snapshot CSV
//   synth    generate synthetic snapshot days (optional ceiling estimate)
//   label    build a labeled-sample archive for one day
//   run      rolling-protocol evaluation from a config file
//   compare  run several input variants over the same data
//   report   re-render the aggregate table from saved reports

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "lob/itch.hpp"
#include "lob/naive.hpp"
#include "lob/runner.hpp"

namespace fs = std::filesystem;
using namespace lob;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

runner::ExperimentConfig load_config(const std::string& path) {
    return runner::ExperimentConfig::from_json(slurp(path));
}

int cmd_ingest(const std::string& file, const std::string& symbol,
               const std::string& out) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file);
    itch::StreamStats stats;
    const auto messages = itch::stream_messages(in, &stats);
    book::ReconstructStats rstats;
    const auto snaps = book::reconstruct(messages, symbol, &rstats);
    book::write_snapshot_csv(out, snaps);
    std::cout << "messages: " << stats.yielded << " (skipped " << stats.skipped
              << " unsupported)\n"
              << "applied:  " << rstats.applied << " (other symbols "
              << rstats.other_symbol << ")\n"
              << "snapshots " << snaps.size() << " -> " << out << "\n";
    return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out, int ceiling_trials) {
    const auto cfg = synth::SynthConfig::from_json(slurp(config_path));
    if (!out.empty()) {
        synth::generate_csv_dir(cfg, out);
        std::cout << "wrote " << cfg.n_days << " days x " << cfg.events_per_day
                  << " events to " << out << "\n";
    }
    if (ceiling_trials > 0) {
        const double ceiling = synth::planted_ceiling(cfg, ceiling_trials);
        std::cout << "planted directional ceiling: " << ceiling << " (" << ceiling_trials
                  << " trials)\n";
    }
    return 0;
}

int cmd_label(const std::string& config_path, const std::string& day, double alpha,
              const std::string& out) {
    auto cfg = load_config(config_path);
    const auto store = runner::open_store(cfg);
    const auto names = store->names();
    const auto it = std::find(names.begin(), names.end(), day);
    if (it == names.end()) throw ConfigInvalid("day '" + day + "' not in the data set");
    const size_t idx = static_cast<size_t>(it - names.begin());
    if (idx < static_cast<size_t>(cfg.scaler_days))
        throw InsufficientHistory(day + " has no scaler history");

    std::vector<std::vector<book::BookSnapshot>> prior;
    std::vector<std::string> prior_names;
    for (size_t d = idx - cfg.scaler_days; d < idx; ++d) {
        prior.push_back(store->load(names[d]));
        prior_names.push_back(names[d]);
    }
    const auto scaler = features::fit_scaler(prior, prior_names,
                                             static_cast<size_t>(cfg.scaler_days));
    const auto f = features::build_day(store->load(day), scaler, cfg.variant);

    labeling::LabelingPolicy policy = cfg.policy;
    policy.alpha = alpha > 0.0 ? alpha : labeling::choose_alpha(
                                             labeling::targets_at_anchors(f.mid, policy));
    labeling::SampleArchive archive;
    archive.width = static_cast<uint32_t>(f.cols);
    archive.policy = policy;
    archive.samples = labeling::build_samples(f, policy, day);
    labeling::write_samples(out, archive);
    std::cout << "wrote " << archive.samples.size() << " samples (alpha " << policy.alpha
              << ", width " << f.cols << ") -> " << out << "\n";
    return 0;
}

void apply_overrides(runner::ExperimentConfig& cfg, const std::string& out,
                     uint64_t seed, int epochs, int stride, const std::string& variant,
                     const std::string& model, const std::string& preset, int train_days,
                     int scaler_days, const std::string& start_day,
                     const std::string& end_day) {
    if (!out.empty()) cfg.output_dir = out;
    if (seed != 0) cfg.train.seed = seed;
    if (epochs > 0) cfg.train.epochs = epochs;
    if (stride > 0) cfg.policy.stride = stride;
    if (!variant.empty()) cfg.variant = features::variant_from_name(variant);
    if (!model.empty()) {
        if (model == "naive")
            cfg.model = runner::ModelType::Naive;
        else if (model == "nn")
            cfg.model = runner::ModelType::Nn;
        else
            throw ConfigInvalid("model must be naive or nn");
    }
    if (!preset.empty()) cfg.preset = preset;
    if (train_days > 0) cfg.train_days = train_days;
    if (scaler_days > 0) cfg.scaler_days = scaler_days;
    if (!start_day.empty()) cfg.start_day = start_day;
    if (!end_day.empty()) cfg.end_day = end_day;
    cfg.validate();
}

int cmd_report(const std::string& dir) {
    std::vector<metrics::EvaluationReport> reports;
    std::vector<std::string> failed;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / "reports")) {
        if (entry.path().extension() != ".json") continue;
        const auto j = nlohmann::json::parse(slurp(entry.path()));
        if (j.value("failed", false)) {
            failed.push_back(j.value("day", entry.path().stem().string()));
            continue;
        }
        reports.push_back(metrics::EvaluationReport::from_json(j.dump()));
    }
    if (reports.empty()) {
        std::cout << "no successful day reports under " << dir << "\n";
        return 1;
    }
    std::sort(reports.begin(), reports.end(),
              [](const auto& a, const auto& b) { return a.day < b.day; });
    std::cout << metrics::render_report_table(reports, "saved reports: " + dir);
    if (!failed.empty()) {
        std::cout << "failed days:";
        for (const auto& d : failed) std::cout << ' ' << d;
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"limit-order-book prediction workbench"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "decode an ITCH day into a snapshot CSV");
    std::string in_file, symbol, out_file;
    ingest->add_option("--file", in_file, "ITCH input file")->required();
    ingest->add_option("--symbol", symbol, "symbol to reconstruct")->required();
    ingest->add_option("--out", out_file, "output CSV path")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic snapshot days");
    std::string synth_config, synth_out;
    int ceiling_trials = 0;
    synth_cmd->add_option("--config", synth_config, "synth config JSON")->required();
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--ceiling-trials", ceiling_trials,
                          "estimate the planted directional ceiling");

    // label
    auto* label = app.add_subcommand("label", "build a labeled-sample archive for a day");
    std::string label_config, label_day, label_out;
    double label_alpha = 0.0;
    label->add_option("--config", label_config, "experiment config JSON")->required();
    label->add_option("--day", label_day, "day name")->required();
    label->add_option("--out", label_out, "output archive path")->required();
    label->add_option("--alpha", label_alpha, "class threshold (default: fit on the day)");

    // run / compare share overrides
    std::string run_config, run_out, ov_variant, ov_model, ov_preset, ov_start, ov_end;
    uint64_t ov_seed = 0;
    int ov_epochs = 0, ov_stride = 0, ov_train_days = 0, ov_scaler_days = 0;
    const auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--config", run_config, "experiment config JSON")->required();
        cmd->add_option("--out", run_out, "output directory override");
        cmd->add_option("--seed", ov_seed, "training seed override");
        cmd->add_option("--epochs", ov_epochs, "epoch override");
        cmd->add_option("--stride", ov_stride, "anchor stride override");
        cmd->add_option("--variant", ov_variant, "feature variant override");
        cmd->add_option("--model", ov_model, "model type override (naive|nn)");
        cmd->add_option("--preset", ov_preset, "architecture preset override");
        cmd->add_option("--train-days", ov_train_days, "training day count override");
        cmd->add_option("--scaler-days", ov_scaler_days, "scaler day count override");
        cmd->add_option("--start-day", ov_start, "first test day");
        cmd->add_option("--end-day", ov_end, "last test day");
    };
    auto* run = app.add_subcommand("run", "rolling-protocol evaluation");
    add_overrides(run);
    auto* compare = app.add_subcommand("compare", "compare input variants on shared data");
    add_overrides(compare);
    std::string compare_variants_arg = "level1,prices";
    compare->add_option("--variants", compare_variants_arg,
                        "comma-separated variant list");

    // report
    auto* report = app.add_subcommand("report", "render the table from saved reports");
    std::string report_dir;
    report->add_option("--dir", report_dir, "experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(in_file, symbol, out_file);
        if (*synth_cmd) return cmd_synth(synth_config, synth_out, ceiling_trials);
        if (*label) return cmd_label(label_config, label_day, label_alpha, label_out);
        if (*run) {
            auto cfg = load_config(run_config);
            apply_overrides(cfg, run_out, ov_seed, ov_epochs, ov_stride, ov_variant,
                            ov_model, ov_preset, ov_train_days, ov_scaler_days, ov_start,
                            ov_end);
            const auto result = runner::run_experiment(cfg);
            std::cout << result.table;
            int failures = 0;
            for (const auto& d : result.days)
                if (d.failed) {
                    ++failures;
                    std::cerr << d.day << " failed: " << d.error << "\n";
                }
            std::cout << "reports under " << cfg.output_dir << "\n";
            return failures == static_cast<int>(result.days.size()) ? 1 : 0;
        }
        if (*compare) {
            auto cfg = load_config(run_config);
            apply_overrides(cfg, run_out, ov_seed, ov_epochs, ov_stride, ov_variant,
                            ov_model, ov_preset, ov_train_days, ov_scaler_days, ov_start,
                            ov_end);
            std::vector<features::Variant> variants;
            std::stringstream ss(compare_variants_arg);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) variants.push_back(features::variant_from_name(item));
            const auto cmp = runner::compare_variants(cfg, variants);
            std::cout << cmp.table;
            return 0;
        }
        if (*report) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
