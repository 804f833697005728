#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lob/errors.hpp"
#include "lob/features.hpp"

namespace lob::labeling {

enum class Label : uint8_t { Up = 0, Down = 1, Stable = 2 };

const char* label_name(Label l);

/// Which return the classifier targets: the symmetric k-past/k'-future
/// form, or the current-price-based form (past horizon collapses to 1).
enum class TargetKind : uint8_t { RkK = 0, R1K = 1 };

struct LabelingPolicy {
    int k = 20;
    int k_prime = 20;
    double alpha = 0.0; // class threshold; fit with choose_alpha
    TargetKind target = TargetKind::RkK;
    int window = 100;
    int stride = 1;

    int past_horizon() const { return target == TargetKind::R1K ? 1 : k; }
    int future_horizon() const { return k_prime; }

    /// Structural invariants (alpha checked only where labeling happens).
    void validate() const;
};

/// p_k(t): mean of m(t-k+1..t). Throws IndexOutOfRange.
double past_avg(std::span<const double> m, int t, int k);

/// f_k(t): mean of m(t+1..t+k). Throws IndexOutOfRange.
double future_avg(std::span<const double> m, int t, int k);

/// (f_{k'}(t) - p_k(t)) / p_k(t). Throws IndexOutOfRange and
/// ZeroDenominator when |p_k(t)| < 1e-8.
double modified_return(std::span<const double> m, int t, int k, int k_prime);

/// Threshold giving roughly a one-third stable share: the empirical
/// 33.33rd percentile of |y|, interpolated on the empirical CDF p = i/n
/// so that an exactly divisible sample yields an order statistic.
double choose_alpha(std::span<const double> targets);

/// UP if y > alpha, DOWN if y < -alpha, STABLE otherwise (boundary
/// included). Requires alpha > 0.
Label classify(double y, double alpha);

/// Anchor indices for a day of n aligned observations: t runs from
/// window-1+past_horizon to n-1-future_horizon in steps of stride.
/// Throws DayTooShort when no anchor fits.
std::vector<int> anchor_indices(size_t n, const LabelingPolicy& policy);

/// y at each anchor (same order as anchor_indices).
std::vector<double> targets_at_anchors(std::span<const double> mid,
                                       const LabelingPolicy& policy);

struct LabeledSample {
    std::vector<double> window; // window x M, row-major, rows t-window+1..t
    double y = 0.0;
    Label label = Label::Stable;
    int t = 0;
    std::string day;
};

/// Windows + labels for one day. policy.alpha must be positive.
std::vector<LabeledSample> build_samples(const features::DayFeatures& day,
                                         const LabelingPolicy& policy,
                                         const std::string& day_name);

// ---------------------------------------------------------------------
// Labeled-sample archive: one binary columnar file per day. Layout is
// documented in docs/formats.md and guarded by the magic/version pair.
// ---------------------------------------------------------------------

struct SampleArchive {
    uint32_t width = 0; // M
    LabelingPolicy policy;
    std::vector<LabeledSample> samples;
};

void write_samples(const std::filesystem::path& path, const SampleArchive& archive);
SampleArchive read_samples(const std::filesystem::path& path);

} // namespace lob::labeling
