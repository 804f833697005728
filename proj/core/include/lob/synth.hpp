#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lob/book.hpp"
#include "lob/labeling.hpp"

namespace lob::synth {

/// Tick-activity regimes: sigma values scale the per-event probability
/// of a price move, switching with the given per-event probability.
struct VolRegimes {
    double sigma_low = 0.4;
    double sigma_high = 2.5;
    double switch_prob = 0.002;
    bool operator==(const VolRegimes&) const = default;
};

/// Synthetic snapshot stream with controllable ground truth.
///
/// Price mechanics per event: a symmetric +-1 tick "noise" move fires
/// with the activity probability; independently, a queue-exhaustion
/// jump of jump_ticks fires with jump_hazard, directed up with
/// probability logistic(signal_beta * imbalance). The latent imbalance
/// follows a mean-reverting AR(1) and is redrawn after each jump
/// (queue replenishment), so past prices carry no information about the
/// current imbalance state while level-1 volumes reveal it directly.
/// With signal_beta = 0 jumps are symmetric coins and no feature
/// predicts direction.
///
/// Days open at mid0 plus overnight_gap_ticks per elapsed day; the gap
/// keeps each day's standardized prices well away from zero so the
/// modified-return denominators stay safe.
struct SynthConfig {
    int n_days = 10;
    int events_per_day = 2000;
    uint64_t seed = 1;
    double mid0 = 150.0;  // USD
    double tick = 0.01;   // USD
    double signal_beta = 0.0;
    std::optional<VolRegimes> vol_regimes;
    double volume_mean = 200.0;
    double volume_dispersion = 0.35; // lognormal sd of log-volume
    int depth = 10;

    double base_activity = 0.35;     // P(noise tick) per event
    double jump_hazard = 0.025;      // P(queue-exhaustion jump) per event
    double jump_ticks = 5.0;
    double imbalance_rho = 0.995;    // AR(1) persistence per event
    double imbalance_sd = 0.6;       // stationary sd
    double overnight_gap_ticks = 250.0;

    void validate() const;
    std::string to_json() const;
    static SynthConfig from_json(const std::string& text);
    bool operator==(const SynthConfig&) const = default;
};

struct DayData {
    std::vector<book::BookSnapshot> snaps;
    std::vector<double> latent_imbalance; // per event
};

/// One day, deterministic in (config.seed, day_index).
DayData generate_day(const SynthConfig& cfg, int day_index);

/// All days' snapshots (CSV-compatible with the book interchange format).
std::vector<std::vector<book::BookSnapshot>> generate(const SynthConfig& cfg);

/// Writes day_000.csv ... day_NNN.csv under dir.
void generate_csv_dir(const SynthConfig& cfg, const std::filesystem::path& dir);

std::string day_name(int day_index);

/// Monte Carlo estimate of the Bayes-optimal directional accuracy the
/// config plants: the hit rate of the predictor that reads the latent
/// imbalance (and the sign of the return denominator) among truly
/// diverging samples, with alpha fit on the simulated targets. Uses the
/// given policy, or the r_{1,20} default when none is supplied.
/// n_trials >= 1e4 anchor samples.
double planted_ceiling(const SynthConfig& cfg, int n_trials,
                       const labeling::LabelingPolicy* policy = nullptr);

} // namespace lob::synth
