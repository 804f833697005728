#include "lob/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lob/hash.hpp"
#include "lob/itch.hpp"
#include "lob/naive.hpp"

namespace lob::runner {

namespace fs = std::filesystem;
using book::BookSnapshot;
using labeling::Label;
using nlohmann::json;

// ---------------------------------------------------------------------
// config io
// ---------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (config_version != 1)
        throw ConfigInvalid("unsupported config_version " + std::to_string(config_version));
    if (data.source != "synth" && data.source != "csv" && data.source != "itch")
        throw ConfigInvalid("data.source must be synth, csv, or itch");
    if (data.source == "synth" && !data.synth_cfg)
        throw ConfigInvalid("synth source needs a synth section");
    if (data.source != "synth" && data.path.empty())
        throw ConfigInvalid(data.source + " source needs data.path");
    if (data.source == "itch" && data.symbol.empty())
        throw ConfigInvalid("itch source needs data.symbol");
    policy.validate();
    train.validate();
    if (train_days < 1) throw ConfigInvalid("train_days must be >= 1");
    if (scaler_days < 1) throw ConfigInvalid("scaler_days must be >= 1");
    if (eval_stride < 0) throw ConfigInvalid("eval_stride must be >= 0");
    if (model == ModelType::Naive && policy.target != labeling::TargetKind::RkK)
        throw ConfigInvalid("the naive baseline targets the symmetric return only");
    if (preset != "auto" && preset != "deeplob_full" && preset != "level1" &&
        preset != "slim")
        throw ConfigInvalid("unknown preset '" + preset + "'");
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["config_version"] = config_version;
    j["data"]["source"] = data.source;
    j["data"]["path"] = data.path;
    j["data"]["symbol"] = data.symbol;
    if (data.synth_cfg) j["data"]["synth"] = json::parse(data.synth_cfg->to_json());
    j["features"]["variant"] = features::variant_name(variant);
    j["policy"] = {{"k", policy.k},
                   {"k_prime", policy.k_prime},
                   {"target", policy.target == labeling::TargetKind::R1K ? "r1k" : "rkk"},
                   {"window", policy.window},
                   {"stride", policy.stride}};
    j["model"]["type"] = model == ModelType::Naive ? "naive" : "nn";
    j["model"]["preset"] = preset;
    j["train"] = json::parse(train.to_json());
    j["protocol"] = {{"train_days", train_days},
                     {"scaler_days", scaler_days},
                     {"eval_stride", eval_stride},
                     {"start_day", start_day},
                     {"end_day", end_day}};
    j["metrics"]["directional_denominator"] =
        dir_denom == metrics::DirectionalDenominator::BothDiverge ? "both_diverge"
                                                                  : "true_diverge";
    j["output"]["dir"] = output_dir;
    j["output"]["save_checkpoints"] = save_checkpoints;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.config_version = j.value("config_version", 1);
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.data.source = d.value("source", c.data.source);
        c.data.path = d.value("path", c.data.path);
        c.data.symbol = d.value("symbol", c.data.symbol);
        if (d.contains("synth")) c.data.synth_cfg = synth::SynthConfig::from_json(d["synth"].dump());
    }
    if (j.contains("features"))
        c.variant = features::variant_from_name(j["features"].value("variant", "level1"));
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        c.policy.k = p.value("k", c.policy.k);
        c.policy.k_prime = p.value("k_prime", c.policy.k_prime);
        const std::string target = p.value("target", "rkk");
        if (target == "rkk")
            c.policy.target = labeling::TargetKind::RkK;
        else if (target == "r1k")
            c.policy.target = labeling::TargetKind::R1K;
        else
            throw ConfigInvalid("policy.target must be rkk or r1k");
        c.policy.window = p.value("window", c.policy.window);
        c.policy.stride = p.value("stride", c.policy.stride);
    }
    if (j.contains("model")) {
        const std::string type = j["model"].value("type", "nn");
        if (type == "naive")
            c.model = ModelType::Naive;
        else if (type == "nn")
            c.model = ModelType::Nn;
        else
            throw ConfigInvalid("model.type must be naive or nn");
        c.preset = j["model"].value("preset", c.preset);
    }
    if (j.contains("train")) c.train = nn::TrainConfig::from_json(j["train"].dump());
    if (j.contains("protocol")) {
        const auto& p = j["protocol"];
        c.train_days = p.value("train_days", c.train_days);
        c.scaler_days = p.value("scaler_days", c.scaler_days);
        c.eval_stride = p.value("eval_stride", c.eval_stride);
        c.start_day = p.value("start_day", c.start_day);
        c.end_day = p.value("end_day", c.end_day);
    }
    if (j.contains("metrics")) {
        const std::string dd = j["metrics"].value("directional_denominator", "both_diverge");
        if (dd == "both_diverge")
            c.dir_denom = metrics::DirectionalDenominator::BothDiverge;
        else if (dd == "true_diverge")
            c.dir_denom = metrics::DirectionalDenominator::TrueDiverge;
        else
            throw ConfigInvalid("metrics.directional_denominator must be both_diverge or true_diverge");
    }
    if (j.contains("output")) {
        c.output_dir = j["output"].value("dir", c.output_dir);
        c.save_checkpoints = j["output"].value("save_checkpoints", c.save_checkpoints);
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------
// stores
// ---------------------------------------------------------------------

CsvDayStore::CsvDayStore(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::is_directory(dir_)) throw IoError("not a directory: " + dir_.string());
    for (const auto& entry : fs::directory_iterator(dir_))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            names_.push_back(entry.path().stem().string());
    std::sort(names_.begin(), names_.end());
    if (names_.empty()) throw IoError("no day CSVs under " + dir_.string());
}

std::vector<BookSnapshot> CsvDayStore::load(const std::string& name) const {
    return book::read_snapshot_csv(dir_ / (name + ".csv"));
}

namespace {

void ingest_itch_dir(const fs::path& itch_dir, const std::string& symbol,
                     const fs::path& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& entry : fs::directory_iterator(itch_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".itch") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw IoError("cannot open " + entry.path().string());
        const auto messages = itch::stream_messages(in);
        const auto snaps = book::reconstruct(messages, symbol);
        book::write_snapshot_csv(out_dir / (entry.path().stem().string() + ".csv"), snaps);
    }
}

} // namespace

std::unique_ptr<DayStore> open_store(const ExperimentConfig& cfg) {
    if (cfg.data.source == "csv") return std::make_unique<CsvDayStore>(cfg.data.path);
    if (cfg.output_dir.empty())
        throw ConfigInvalid(cfg.data.source + " source needs output.dir for materialized data");
    const fs::path data_dir = fs::path(cfg.output_dir) / "data";
    if (cfg.data.source == "synth") {
        synth::generate_csv_dir(*cfg.data.synth_cfg, data_dir);
    } else { // itch
        ingest_itch_dir(cfg.data.path, cfg.data.symbol, data_dir);
    }
    return std::make_unique<CsvDayStore>(data_dir);
}

size_t first_eligible_index(const ExperimentConfig& cfg) {
    return static_cast<size_t>(cfg.scaler_days) + static_cast<size_t>(cfg.train_days);
}

nn::ArchitectureSpec resolve_preset(const ExperimentConfig& cfg) {
    const int width = features::variant_width(cfg.variant);
    if (cfg.preset == "auto") {
        switch (cfg.variant) {
        case features::Variant::FullLOB: return nn::deeplob_full();
        case features::Variant::Level1: return nn::level1();
        default: return nn::slim(width);
        }
    }
    return nn::preset_by_name(cfg.preset, width);
}

// ---------------------------------------------------------------------
// rolling pipeline
// ---------------------------------------------------------------------

namespace {

/// Caches raw snapshots and per-day standardized features for one run.
/// A day's features use a scaler fit on its own preceding scaler_days.
class Pipeline {
public:
    Pipeline(const ExperimentConfig& cfg, const DayStore& store)
        : cfg_(cfg), store_(store), names_(store.names()) {}

    const std::vector<std::string>& names() const { return names_; }

    const std::vector<BookSnapshot>& raw(size_t idx) {
        auto it = raw_.find(idx);
        if (it == raw_.end())
            it = raw_.emplace(idx, store_.load(names_.at(idx))).first;
        return it->second;
    }

    const features::DayFeatures& prepared(size_t idx) {
        auto it = feat_.find(idx);
        if (it != feat_.end()) return it->second;
        if (idx < static_cast<size_t>(cfg_.scaler_days))
            throw InsufficientHistory("day " + names_.at(idx) + " has no scaler history");
        std::vector<std::vector<BookSnapshot>> prior;
        std::vector<std::string> prior_names;
        for (size_t d = idx - cfg_.scaler_days; d < idx; ++d) {
            prior.push_back(raw(d));
            prior_names.push_back(names_.at(d));
        }
        const auto scaler =
            features::fit_scaler(prior, prior_names, static_cast<size_t>(cfg_.scaler_days));
        auto f = features::build_day(raw(idx), scaler, cfg_.variant);
        return feat_.emplace(idx, std::move(f)).first->second;
    }

private:
    const ExperimentConfig& cfg_;
    const DayStore& store_;
    std::vector<std::string> names_;
    std::map<size_t, std::vector<BookSnapshot>> raw_;
    std::map<size_t, features::DayFeatures> feat_;
};

DayResult run_day_impl(const ExperimentConfig& cfg, const DayStore& store, size_t day_index,
                       Pipeline& pipe) {
    const auto& names = pipe.names();
    if (day_index >= names.size())
        throw ConfigInvalid("day index " + std::to_string(day_index) + " out of range");
    if (day_index < first_eligible_index(cfg))
        throw InsufficientHistory(names[day_index] + " needs " +
                                  std::to_string(first_eligible_index(cfg)) +
                                  " prior days");

    DayResult result;
    result.day = names[day_index];

    // alpha from the pooled training-day targets
    std::vector<double> pooled;
    for (size_t d = day_index - cfg.train_days; d < day_index; ++d) {
        const auto& f = pipe.prepared(d);
        const auto ys = labeling::targets_at_anchors(f.mid, cfg.policy);
        pooled.insert(pooled.end(), ys.begin(), ys.end());
    }
    labeling::LabelingPolicy policy = cfg.policy;
    policy.alpha = labeling::choose_alpha(pooled);
    if (policy.alpha <= 0.0)
        throw ConfigInvalid("degenerate alpha on training window of " + result.day);
    result.alpha = policy.alpha;

    // test-day truths (optionally scored at a denser anchor stride)
    labeling::LabelingPolicy eval_policy = policy;
    if (cfg.eval_stride > 0) eval_policy.stride = cfg.eval_stride;
    const auto& test = pipe.prepared(day_index);
    const auto anchors = labeling::anchor_indices(test.rows, eval_policy);
    const auto test_ys = labeling::targets_at_anchors(test.mid, eval_policy);
    std::vector<Label> truths;
    truths.reserve(test_ys.size());
    for (double y : test_ys) truths.push_back(labeling::classify(y, policy.alpha));

    std::vector<Label> preds;
    preds.reserve(truths.size());
    if (cfg.model == ModelType::Naive) {
        for (int t : anchors)
            preds.push_back(naive::naive_predict(test.mid, t, eval_policy));
        result.model_hash =
            fnv1a64({reinterpret_cast<const uint8_t*>(&policy.alpha), sizeof(double)});
    } else {
        std::vector<labeling::LabeledSample> train_set;
        for (size_t d = day_index - cfg.train_days; d < day_index; ++d) {
            auto day_samples = labeling::build_samples(pipe.prepared(d), policy, names[d]);
            for (auto& s : day_samples) train_set.push_back(std::move(s));
        }
        if (train_set.empty()) throw EmptyInput("no training samples for " + result.day);

        auto model = nn::Model::build(resolve_preset(cfg), cfg.train.seed);
        nn::train(model, train_set, cfg.train);
        result.model_hash = model.param_hash();

        const auto test_samples = labeling::build_samples(test, eval_policy, result.day);
        preds = nn::predict_batch(model, test_samples);

        if (cfg.save_checkpoints && !cfg.output_dir.empty()) {
            const fs::path dir = fs::path(cfg.output_dir) / "checkpoints";
            fs::create_directories(dir);
            model.save(dir / (result.day + ".lobm"));
        }
    }

    const auto cm = metrics::confusion(truths, preds);
    result.report = metrics::evaluate(result.day, cm, cfg.dir_denom);
    return result;
}

} // namespace

DayResult run_day(const ExperimentConfig& cfg, const DayStore& store, size_t day_index) {
    cfg.validate();
    Pipeline pipe(cfg, store);
    return run_day_impl(cfg, store, day_index, pipe);
}

RunResult run_range(const ExperimentConfig& cfg, const DayStore& store) {
    cfg.validate();
    Pipeline pipe(cfg, store);
    const auto& names = pipe.names();

    RunResult out;
    std::vector<metrics::EvaluationReport> ok_reports;
    for (size_t idx = first_eligible_index(cfg); idx < names.size(); ++idx) {
        if (!cfg.start_day.empty() && names[idx] < cfg.start_day) continue;
        if (!cfg.end_day.empty() && names[idx] > cfg.end_day) continue;
        DayResult dr;
        try {
            dr = run_day_impl(cfg, store, idx, pipe);
        } catch (const std::exception& e) {
            dr.day = names[idx];
            dr.failed = true;
            dr.error = e.what();
        }
        if (!dr.failed) ok_reports.push_back(dr.report);
        out.days.push_back(std::move(dr));
    }
    if (out.days.empty())
        throw InsufficientHistory("no eligible test days: need " +
                                  std::to_string(first_eligible_index(cfg) + 1) +
                                  " days of data");
    if (!ok_reports.empty()) {
        out.aggregate = metrics::aggregate_daily(ok_reports);
        out.table = metrics::render_report_table(
            ok_reports, std::string("variant=") + features::variant_name(cfg.variant) +
                            " model=" + (cfg.model == ModelType::Naive ? "naive" : "nn"));
    }
    return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_manifest(const ExperimentConfig& cfg, const DayStore& store,
                    const fs::path& dir) {
    json j;
    j["config"] = json::parse(cfg.to_json());
    j["config_digest"] = hex64(fnv1a64(cfg.to_json()));
    j["seed"] = cfg.train.seed;
    if (cfg.data.synth_cfg) j["synth_seed"] = cfg.data.synth_cfg->seed;
    j["core_version"] = "0.1.0";
    json inputs = json::array();
    if (const auto* csv = dynamic_cast<const CsvDayStore*>(&store)) {
        const fs::path data_dir = cfg.data.source == "csv"
                                      ? fs::path(cfg.data.path)
                                      : fs::path(cfg.output_dir) / "data";
        for (const auto& name : csv->names()) {
            const fs::path p = data_dir / (name + ".csv");
            inputs.push_back({{"name", name}, {"checksum", hex64(file_checksum(p))}});
        }
    }
    j["inputs"] = inputs;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
}

json day_result_json(const DayResult& dr) {
    if (dr.failed) return json{{"day", dr.day}, {"failed", true}, {"error", dr.error}};
    json j = json::parse(dr.report.to_json());
    j["failed"] = false;
    j["alpha"] = dr.alpha;
    j["model_hash"] = hex64(dr.model_hash);
    return j;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.output_dir.empty()) throw ConfigInvalid("run_experiment needs output.dir");
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    const auto store = open_store(cfg);
    write_manifest(cfg, *store, out_dir);

    const auto result = run_range(cfg, *store);

    const fs::path reports = out_dir / "reports";
    fs::create_directories(reports);
    for (const auto& dr : result.days)
        write_text(reports / (dr.day + ".json"), day_result_json(dr).dump(2) + "\n");

    json agg;
    agg["days"] = json::array();
    agg["failed_days"] = json::array();
    for (const auto& dr : result.days)
        (dr.failed ? agg["failed_days"] : agg["days"]).push_back(dr.day);
    for (const auto& [key, st] : result.aggregate)
        agg["metrics"][key] = {{"mean", st.mean},
                               {"std", st.stddev},
                               {"used", st.used},
                               {"excluded", st.excluded}};
    write_text(out_dir / "aggregate.json", agg.dump(2) + "\n");
    write_text(out_dir / "aggregate.txt", result.table);
    return result;
}

VariantComparison compare_variants(const ExperimentConfig& cfg,
                                   const std::vector<features::Variant>& variants) {
    if (variants.empty()) throw EmptyInput("no variants to compare");
    cfg.validate();
    const auto store = open_store(cfg);

    VariantComparison cmp;
    cmp.variants = variants;
    const char* keys[3] = {"overall_accuracy", "directional_accuracy", "volatility_accuracy"};
    for (const char* k : keys) cmp.rows[k] = {};

    for (const auto v : variants) {
        ExperimentConfig vcfg = cfg;
        vcfg.variant = v;
        vcfg.preset = "auto";
        const auto rr = run_range(vcfg, *store);
        for (const char* k : keys) {
            const auto it = rr.aggregate.find(k);
            cmp.rows[k].push_back(it == rr.aggregate.end() ? metrics::AggregateStat{}
                                                           : it->second);
        }
    }

    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s", "Accuracy");
    os << buf;
    for (const auto v : variants) {
        std::snprintf(buf, sizeof buf, " %18s", features::variant_name(v));
        os << buf;
    }
    os << '\n';
    const char* row_names[3] = {"Overall", "Directional", "Volatility"};
    for (size_t r = 0; r < 3; ++r) {
        std::snprintf(buf, sizeof buf, "%-12s", row_names[r]);
        os << buf;
        for (const auto& st : cmp.rows[keys[r]]) {
            char cell[32];
            if (st.used == 0)
                std::snprintf(cell, sizeof cell, "undef");
            else
                std::snprintf(cell, sizeof cell, "%.3f(%.3f)", st.mean, st.stddev);
            std::snprintf(buf, sizeof buf, " %18s", cell);
            os << buf;
        }
        os << '\n';
    }
    cmp.table = os.str();

    if (!cfg.output_dir.empty()) {
        json j;
        j["variants"] = json::array();
        for (const auto v : variants) j["variants"].push_back(features::variant_name(v));
        for (size_t r = 0; r < 3; ++r) {
            json row = json::array();
            for (const auto& st : cmp.rows[keys[r]])
                row.push_back({{"mean", st.mean},
                               {"std", st.stddev},
                               {"used", st.used},
                               {"excluded", st.excluded}});
            j["rows"][keys[r]] = row;
        }
        fs::create_directories(cfg.output_dir);
        write_text(fs::path(cfg.output_dir) / "comparison.json", j.dump(2) + "\n");
        write_text(fs::path(cfg.output_dir) / "comparison.txt", cmp.table);
    }
    return cmp;
}

} // namespace lob::runner
