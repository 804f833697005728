#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lob/labeling.hpp"

namespace lob::metrics {

using labeling::Label;

/// 3x3 confusion counts, rows = true class, columns = predicted class,
/// class order (UP, DOWN, STABLE). Merging partial matrices is entrywise
/// addition.
struct ConfusionMatrix {
    std::array<std::array<uint64_t, 3>, 3> counts{};

    void add(Label truth, Label pred) {
        ++counts[static_cast<size_t>(truth)][static_cast<size_t>(pred)];
    }
    uint64_t total() const;
    uint64_t row_sum(size_t r) const;
    uint64_t col_sum(size_t c) const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> truths, std::span<const Label> preds);

/// Rates that can be undefined (empty denominator) stay unset rather
/// than collapsing to 0 or 1.
struct ClassStats {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

std::array<ClassStats, 3> class_metrics(const ConfusionMatrix& cm);

double overall_accuracy(const ConfusionMatrix& cm);

/// Correct STABLE-vs-DIVERGE rate, where DIVERGE = UP + DOWN. A true UP
/// predicted DOWN still counts as a correct DIVERGE call.
double volatility_accuracy(const ConfusionMatrix& cm);

/// Denominator convention for directional accuracy.
enum class DirectionalDenominator {
    BothDiverge, // prediction and truth both diverge
    TrueDiverge, // truth diverges, any prediction
};

/// Direction hit rate. With BothDiverge: among samples whose truth and
/// prediction both diverge, the share where the direction matches.
/// Undefined (nullopt) when the denominator is empty.
std::optional<double> directional_accuracy(
    const ConfusionMatrix& cm,
    DirectionalDenominator denom = DirectionalDenominator::BothDiverge);

struct EvaluationReport {
    std::string day;
    ConfusionMatrix cm;
    std::array<ClassStats, 3> per_class;
    std::array<uint64_t, 3> sizes{}; // true-class counts
    double overall = 0.0;
    double volatility = 0.0;
    std::optional<double> directional;

    std::string to_json() const;
    static EvaluationReport from_json(const std::string& text);
};

/// Derives every rate from a confusion matrix.
EvaluationReport evaluate(const std::string& day, const ConfusionMatrix& cm,
                          DirectionalDenominator denom = DirectionalDenominator::BothDiverge);

struct AggregateStat {
    double mean = 0.0;
    double stddev = 0.0; // population
    int used = 0;
    int excluded = 0; // undefined values skipped
};

/// Unweighted daily mean and population std per metric. Undefined
/// values are excluded and counted. Keys: overall_accuracy,
/// volatility_accuracy, directional_accuracy, and
/// {precision,recall,f1}_{up,down,stable}.
std::map<std::string, AggregateStat> aggregate_daily(
    std::span<const EvaluationReport> reports);

/// Text table in the style of the per-target summary tables: one row per
/// class with precision/recall/F1/size, then the accuracy block.
std::string render_report_table(std::span<const EvaluationReport> reports,
                                const std::string& title);

} // namespace lob::metrics
