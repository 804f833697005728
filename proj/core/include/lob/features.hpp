#pragma once

#include <span>
#include <string>
#include <vector>

#include "lob/book.hpp"

namespace lob::features {

/// Input variants fed to the predictors. Width is the per-observation
/// feature count M.
enum class Variant { FullLOB, Level1, PricesOnly, VolumesOnly, PricesImbalance };

int variant_width(Variant v);
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Pooled z-score parameters: one (mean, std) pair over every price
/// entry of the fitting days and one over every volume entry. Prices
/// are converted to decimal USD before pooling.
struct Scaler {
    double price_mean = 0.0;
    double price_std = 1.0;
    double volume_mean = 0.0;
    double volume_std = 1.0;
    std::vector<std::string> fitted_over;
};

inline double price_usd(uint32_t px) { return static_cast<double>(px) / 10000.0; }

/// Fits the pooled scaler over `required` prior days (population std,
/// valid levels only). Throws InsufficientHistory when fewer days are
/// given, EmptyInput on an empty day, DegenerateStd on zero variance.
Scaler fit_scaler(std::span<const std::vector<book::BookSnapshot>> prior_days,
                  std::span<const std::string> day_names, size_t required = 5);

/// Z-scored feature row for one snapshot under a variant. Throws
/// InsufficientDepth when the snapshot is too shallow for the variant
/// (FullLOB needs 10 valid levels per side, the rest need level 1 on
/// both sides).
std::vector<double> standardize(const book::BookSnapshot& snap, const Scaler& scaler,
                                Variant variant);

/// Standardized mid-price of a two-sided snapshot.
double mid_value(const book::BookSnapshot& snap, const Scaler& scaler);

/// Level-1 volume imbalance in [-1, 1], signed toward the bid.
double imbalance(const book::BookSnapshot& snap);

/// One day of aligned model inputs: feature matrix, standardized mid
/// series, and timestamps all index the same kept snapshots. Snapshots
/// too shallow for the variant are dropped and counted.
struct DayFeatures {
    Variant variant = Variant::Level1;
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> x; // rows x cols, row-major
    std::vector<double> mid;
    std::vector<uint64_t> ts;
    size_t dropped = 0;

    std::span<const double> row(size_t r) const { return {x.data() + r * cols, cols}; }
};

DayFeatures build_day(std::span<const book::BookSnapshot> snaps, const Scaler& scaler,
                      Variant variant);

} // namespace lob::features
