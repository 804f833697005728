#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lob/features.hpp"
#include "lob/labeling.hpp"
#include "lob/metrics.hpp"
#include "lob/nn/train.hpp"
#include "lob/snapshot_csv.hpp"
#include "lob/synth.hpp"

namespace lob::runner {

enum class ModelType { Naive, Nn };

struct DataConfig {
    std::string source = "synth"; // synth | csv | itch
    std::string path;             // csv/itch directory
    std::string symbol;           // required for itch ingestion
    std::optional<synth::SynthConfig> synth_cfg;
};

/// Full experiment description: data, features, labeling, model,
/// training, and the rolling protocol. Serialized as the versioned
/// config file consumed by the CLI (schema in docs/formats.md).
struct ExperimentConfig {
    int config_version = 1;
    DataConfig data;
    features::Variant variant = features::Variant::Level1;
    labeling::LabelingPolicy policy; // alpha is refit per test day
    ModelType model = ModelType::Nn;
    std::string preset = "auto"; // auto | deeplob_full | level1 | slim
    nn::TrainConfig train;
    int train_days = 20;
    int scaler_days = 5;
    int eval_stride = 0; // test-day anchor stride; 0 = policy.stride
    metrics::DirectionalDenominator dir_denom = metrics::DirectionalDenominator::BothDiverge;
    std::string start_day, end_day; // optional inclusive test-day filter
    std::string output_dir;
    bool save_checkpoints = false;

    void validate() const;
    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
};

/// Day-keyed snapshot access. Names sort in trading order.
class DayStore {
public:
    virtual ~DayStore() = default;
    virtual std::vector<std::string> names() const = 0;
    virtual std::vector<book::BookSnapshot> load(const std::string& name) const = 0;
};

/// <day>.csv files in a directory.
class CsvDayStore final : public DayStore {
public:
    explicit CsvDayStore(std::filesystem::path dir);
    std::vector<std::string> names() const override { return names_; }
    std::vector<book::BookSnapshot> load(const std::string& name) const override;

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

struct DayResult {
    std::string day;
    bool failed = false;
    std::string error;
    metrics::EvaluationReport report;
    double alpha = 0.0;
    uint64_t model_hash = 0; // trained parameters (alpha hash for naive)
};

struct RunResult {
    std::vector<DayResult> days;
    std::map<std::string, metrics::AggregateStat> aggregate; // successful days
    std::string table;
};

/// Evaluates one test day under the rolling protocol: per-day scalers
/// from each day's own preceding scaler_days, alpha from the pooled
/// train_days targets, cold-start training, then test-day scoring.
/// Everything used to score the day derives from strictly earlier days.
DayResult run_day(const ExperimentConfig& cfg, const DayStore& store, size_t day_index);

/// All eligible test days; failures are recorded per day and do not
/// stop the range.
RunResult run_range(const ExperimentConfig& cfg, const DayStore& store);

/// Opens the store (materializing synthetic data or ingesting ITCH
/// under output_dir/data when needed), writes the manifest, runs the
/// range, and writes reports + aggregate files.
RunResult run_experiment(const ExperimentConfig& cfg);

struct VariantComparison {
    std::vector<features::Variant> variants;
    // rows: overall_accuracy / directional_accuracy / volatility_accuracy
    std::map<std::string, std::vector<metrics::AggregateStat>> rows;
    std::string table;
};

/// Runs the same data and policy under several input variants and lays
/// the accuracies out side by side.
VariantComparison compare_variants(const ExperimentConfig& cfg,
                                   const std::vector<features::Variant>& variants);

std::unique_ptr<DayStore> open_store(const ExperimentConfig& cfg);

/// First day index with enough history: scaler_days + train_days.
size_t first_eligible_index(const ExperimentConfig& cfg);

/// Picks the architecture for a variant ("auto" maps FullLOB to the
/// full-depth preset, Level1 to the level-1 preset, narrow variants to
/// the slim stack at their width).
nn::ArchitectureSpec resolve_preset(const ExperimentConfig& cfg);

} // namespace lob::runner
