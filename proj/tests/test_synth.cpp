#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lob/hash.hpp"
#include "lob/snapshot_csv.hpp"
#include "lob/synth.hpp"

using namespace lob;
using namespace lob::synth;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_days = 3;
    cfg.events_per_day = 400;
    cfg.seed = 424242;
    return cfg;
}

} // namespace

TEST_CASE("generation is deterministic per seed") {
    const auto cfg = small_config();
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    REQUIRE(a.size() == 3);
    CHECK(a == b);

    auto cfg2 = cfg;
    cfg2.seed = 7;
    CHECK(generate(cfg2) != a);
}

TEST_CASE("generated snapshots satisfy the book invariants") {
    auto cfg = small_config();
    cfg.vol_regimes = VolRegimes{};
    cfg.signal_beta = 2.0;
    for (const auto& day : generate(cfg)) {
        REQUIRE(!day.empty());
        uint64_t prev_ts = 0;
        for (const auto& s : day) {
            book::validate_snapshot(s); // throws on violation
            CHECK(s.valid_asks == cfg.depth);
            CHECK(s.valid_bids == cfg.depth);
            CHECK(s.timestamp_ns > prev_ts);
            CHECK(book::in_trading_hours(s.timestamp_ns));
            prev_ts = s.timestamp_ns;
        }
    }
}

TEST_CASE("csv emission matches the in-memory stream and is reproducible") {
    namespace fs = std::filesystem;
    const auto cfg = small_config();
    const auto dir1 = fs::temp_directory_path() / "lobx_synth_a";
    const auto dir2 = fs::temp_directory_path() / "lobx_synth_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    generate_csv_dir(cfg, dir1);
    generate_csv_dir(cfg, dir2);

    const auto days = generate(cfg);
    for (int d = 0; d < cfg.n_days; ++d) {
        const auto path1 = dir1 / (day_name(d) + ".csv");
        const auto path2 = dir2 / (day_name(d) + ".csv");
        CHECK(file_checksum(path1) == file_checksum(path2));
        const auto back = book::read_snapshot_csv(path1);
        REQUIRE(back.size() == days[d].size());
        CHECK(back == days[d]);
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("config json round trip") {
    auto cfg = small_config();
    cfg.vol_regimes = VolRegimes{0.3, 2.0, 0.01};
    cfg.signal_beta = 1.5;
    const auto back = SynthConfig::from_json(cfg.to_json());
    CHECK(back == cfg);

    SynthConfig plain = small_config();
    CHECK(!SynthConfig::from_json(plain.to_json()).vol_regimes.has_value());
}

TEST_CASE("config validation") {
    auto cfg = small_config();
    cfg.events_per_day = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg = small_config();
    cfg.tick = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg = small_config();
    cfg.imbalance_rho = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg = small_config();
    cfg.vol_regimes = VolRegimes{0.0, 1.0, 0.1};
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
}

TEST_CASE("planted ceiling: zero signal sits at one half") {
    SynthConfig cfg;
    cfg.events_per_day = 3000;
    cfg.seed = 99;
    cfg.signal_beta = 0.0;
    const double ceiling = planted_ceiling(cfg, 10'000);
    CHECK(ceiling == doctest::Approx(0.5).epsilon(0.03));

    CHECK_THROWS_AS(planted_ceiling(cfg, 100), ConfigInvalid);
}

TEST_CASE("planted ceiling rises with the signal strength") {
    SynthConfig cfg;
    cfg.events_per_day = 3000;
    cfg.seed = 12;
    cfg.signal_beta = 3.0;
    const double strong = planted_ceiling(cfg, 10'000);
    CHECK(strong > 0.6);
}

namespace {

// How strongly the realized volatility of an anchor's input window
// predicts a diverging label: the diverge-rate gap between high- and
// low-volatility halves. Regime switching should open the gap; a
// homogeneous walk should not.
double vol_conditioned_diverge_gap(const SynthConfig& cfg) {
    const auto days = generate(cfg);
    lob::labeling::LabelingPolicy pol;
    pol.target = lob::labeling::TargetKind::R1K;
    pol.k = 1;
    pol.k_prime = 20;
    pol.window = 100;
    pol.stride = 20; // no shared future points between anchors

    std::vector<double> window_vol, targets;
    std::vector<std::string> names(5, "prior");
    for (size_t d = 5; d < days.size(); ++d) {
        const std::span<const std::vector<lob::book::BookSnapshot>> hist{days};
        const auto scaler = lob::features::fit_scaler(hist.subspan(d - 5, 5), names, 5);
        const auto f =
            lob::features::build_day(days[d], scaler, lob::features::Variant::Level1);
        const auto anchors = lob::labeling::anchor_indices(f.rows, pol);
        for (int t : anchors) {
            double amp = 0.0;
            for (int i = t - pol.window + 2; i <= t; ++i)
                amp += std::fabs(f.mid[static_cast<size_t>(i)] -
                                 f.mid[static_cast<size_t>(i - 1)]);
            window_vol.push_back(amp);
            targets.push_back(lob::labeling::modified_return(f.mid, t, 1, pol.k_prime));
        }
    }
    const double alpha = lob::labeling::choose_alpha(targets);
    std::vector<double> sorted_vol = window_vol;
    std::sort(sorted_vol.begin(), sorted_vol.end());
    const double median = sorted_vol[sorted_vol.size() / 2];

    size_t hi_n = 0, hi_d = 0, lo_n = 0, lo_d = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const bool diverge =
            lob::labeling::classify(targets[i], alpha) != lob::labeling::Label::Stable;
        if (window_vol[i] > median) {
            ++hi_n;
            hi_d += diverge;
        } else {
            ++lo_n;
            lo_d += diverge;
        }
    }
    return static_cast<double>(hi_d) / hi_n - static_cast<double>(lo_d) / lo_n;
}

} // namespace

TEST_CASE("regimes make the stable/diverge split predictable from realized volatility") {
    SynthConfig flat;
    flat.n_days = 9;
    flat.events_per_day = 2500;
    flat.seed = 3030;
    flat.base_activity = 0.25;
    flat.jump_hazard = 0.05;

    SynthConfig clustered = flat;
    clustered.vol_regimes = VolRegimes{0.35, 2.2, 0.0025};

    const double gap_flat = vol_conditioned_diverge_gap(flat);
    const double gap_clustered = vol_conditioned_diverge_gap(clustered);
    CHECK(std::fabs(gap_flat) < 0.1);
    CHECK(gap_clustered > 0.25);
}
