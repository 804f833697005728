#include "lob/synth.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "lob/features.hpp"
#include "lob/rng.hpp"
#include "lob/snapshot_csv.hpp"

namespace lob::synth {

using book::BookSnapshot;
using book::Level;
using nlohmann::json;

void SynthConfig::validate() const {
    if (n_days < 1) throw ConfigInvalid("n_days must be >= 1");
    if (events_per_day < 1) throw ConfigInvalid("events_per_day must be >= 1");
    if (tick <= 0.0) throw ConfigInvalid("tick must be positive");
    if (mid0 <= 0.0) throw ConfigInvalid("mid0 must be positive");
    if (depth < 1 || depth > book::kDepth)
        throw ConfigInvalid("depth must be in [1, " + std::to_string(book::kDepth) + "]");
    if (volume_mean < 1.0) throw ConfigInvalid("volume_mean must be >= 1");
    if (volume_dispersion < 0.0) throw ConfigInvalid("volume_dispersion must be >= 0");
    if (base_activity < 0.0 || base_activity > 1.0)
        throw ConfigInvalid("base_activity must be a probability");
    if (jump_hazard < 0.0 || jump_hazard > 1.0)
        throw ConfigInvalid("jump_hazard must be a probability");
    if (jump_ticks < 0.0) throw ConfigInvalid("jump_ticks must be >= 0");
    if (imbalance_rho < 0.0 || imbalance_rho >= 1.0)
        throw ConfigInvalid("imbalance_rho must be in [0,1)");
    if (imbalance_sd <= 0.0) throw ConfigInvalid("imbalance_sd must be positive");
    if (overnight_gap_ticks < 0.0) throw ConfigInvalid("overnight_gap_ticks must be >= 0");
    if (vol_regimes) {
        if (vol_regimes->sigma_low <= 0.0 || vol_regimes->sigma_high <= 0.0)
            throw ConfigInvalid("regime sigmas must be positive");
        if (vol_regimes->switch_prob < 0.0 || vol_regimes->switch_prob > 1.0)
            throw ConfigInvalid("switch_prob must be a probability");
    }
}

std::string SynthConfig::to_json() const {
    json j{{"n_days", n_days},
           {"events_per_day", events_per_day},
           {"seed", seed},
           {"mid0", mid0},
           {"tick", tick},
           {"signal_beta", signal_beta},
           {"volume_mean", volume_mean},
           {"volume_dispersion", volume_dispersion},
           {"depth", depth},
           {"base_activity", base_activity},
           {"jump_hazard", jump_hazard},
           {"jump_ticks", jump_ticks},
           {"imbalance_rho", imbalance_rho},
           {"imbalance_sd", imbalance_sd},
           {"overnight_gap_ticks", overnight_gap_ticks}};
    if (vol_regimes)
        j["vol_regimes"] = {{"sigma_low", vol_regimes->sigma_low},
                            {"sigma_high", vol_regimes->sigma_high},
                            {"switch_prob", vol_regimes->switch_prob}};
    return j.dump();
}

SynthConfig SynthConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    SynthConfig c;
    c.n_days = j.value("n_days", c.n_days);
    c.events_per_day = j.value("events_per_day", c.events_per_day);
    c.seed = j.value("seed", c.seed);
    c.mid0 = j.value("mid0", c.mid0);
    c.tick = j.value("tick", c.tick);
    c.signal_beta = j.value("signal_beta", c.signal_beta);
    c.volume_mean = j.value("volume_mean", c.volume_mean);
    c.volume_dispersion = j.value("volume_dispersion", c.volume_dispersion);
    c.depth = j.value("depth", c.depth);
    c.base_activity = j.value("base_activity", c.base_activity);
    c.jump_hazard = j.value("jump_hazard", c.jump_hazard);
    c.jump_ticks = j.value("jump_ticks", c.jump_ticks);
    c.imbalance_rho = j.value("imbalance_rho", c.imbalance_rho);
    c.imbalance_sd = j.value("imbalance_sd", c.imbalance_sd);
    c.overnight_gap_ticks = j.value("overnight_gap_ticks", c.overnight_gap_ticks);
    if (j.contains("vol_regimes") && !j["vol_regimes"].is_null()) {
        VolRegimes vr;
        vr.sigma_low = j["vol_regimes"].value("sigma_low", vr.sigma_low);
        vr.sigma_high = j["vol_regimes"].value("sigma_high", vr.sigma_high);
        vr.switch_prob = j["vol_regimes"].value("switch_prob", vr.switch_prob);
        c.vol_regimes = vr;
    }
    c.validate();
    return c;
}

std::string day_name(int day_index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "day_%03d", day_index);
    return buf;
}

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

uint32_t draw_volume(Rng& rng, double mean, double dispersion) {
    // lognormal with unit-mean correction
    const double v = mean * std::exp(dispersion * rng.normal() - 0.5 * dispersion * dispersion);
    return v < 1.0 ? 1u : static_cast<uint32_t>(std::llround(v));
}

} // namespace

DayData generate_day(const SynthConfig& cfg, int day_index) {
    cfg.validate();
    Rng rng(mix64(cfg.seed ^ mix64(static_cast<uint64_t>(day_index) + 0x6461794cULL)));

    const int64_t tick_int = std::llround(cfg.tick * 10000.0);
    if (tick_int < 1) throw ConfigInvalid("tick below the price grid resolution");
    int64_t mid_ticks = std::llround(
        (cfg.mid0 + cfg.overnight_gap_ticks * cfg.tick * day_index) / cfg.tick);

    const uint64_t span_ns = book::kCloseNs - book::kOpenNs;
    const uint64_t dt = span_ns / static_cast<uint64_t>(cfg.events_per_day + 1);

    double imb = cfg.imbalance_sd * rng.normal();
    const double innov = cfg.imbalance_sd *
                         std::sqrt(1.0 - cfg.imbalance_rho * cfg.imbalance_rho);
    bool high_regime = rng.bernoulli(0.5);

    DayData day;
    day.snaps.reserve(cfg.events_per_day);
    day.latent_imbalance.reserve(cfg.events_per_day);

    for (int i = 0; i < cfg.events_per_day; ++i) {
        // latent state first
        imb = cfg.imbalance_rho * imb + innov * rng.normal();
        if (imb > 0.98) imb = 0.98;
        if (imb < -0.98) imb = -0.98;
        double sigma = 1.0;
        if (cfg.vol_regimes) {
            if (rng.bernoulli(cfg.vol_regimes->switch_prob)) high_regime = !high_regime;
            sigma = high_regime ? cfg.vol_regimes->sigma_high : cfg.vol_regimes->sigma_low;
        }

        // symmetric noise tick
        const double act = std::min(0.98, cfg.base_activity * sigma);
        if (rng.bernoulli(act)) mid_ticks += rng.bernoulli(0.5) ? 1 : -1;

        // queue-exhaustion jump toward the weak side; imbalance resets
        const double hazard = std::min(0.5, cfg.jump_hazard * sigma);
        if (hazard > 0.0 && rng.bernoulli(hazard)) {
            const double p_up = logistic(cfg.signal_beta * imb);
            const int64_t j = std::llround(cfg.jump_ticks);
            mid_ticks += rng.bernoulli(p_up) ? j : -j;
            imb = cfg.imbalance_sd * rng.normal();
            if (imb > 0.98) imb = 0.98;
            if (imb < -0.98) imb = -0.98;
        }

        if (mid_ticks < 10 + cfg.depth) mid_ticks = 10 + cfg.depth; // price floor

        BookSnapshot s;
        s.timestamp_ns = book::kOpenNs + dt * static_cast<uint64_t>(i + 1);
        const uint32_t bid_sz = std::max(
            1u, static_cast<uint32_t>(std::llround(
                    draw_volume(rng, cfg.volume_mean, cfg.volume_dispersion) * (1.0 + imb))));
        const uint32_t ask_sz = std::max(
            1u, static_cast<uint32_t>(std::llround(
                    draw_volume(rng, cfg.volume_mean, cfg.volume_dispersion) * (1.0 - imb))));
        for (int lvl = 0; lvl < cfg.depth; ++lvl) {
            const int64_t ask_px = (mid_ticks + 1 + lvl) * tick_int;
            const int64_t bid_px = (mid_ticks - 1 - lvl) * tick_int;
            s.asks[lvl] = Level{static_cast<uint32_t>(ask_px),
                                lvl == 0 ? ask_sz
                                         : draw_volume(rng, cfg.volume_mean,
                                                       cfg.volume_dispersion)};
            s.bids[lvl] = Level{static_cast<uint32_t>(bid_px),
                                lvl == 0 ? bid_sz
                                         : draw_volume(rng, cfg.volume_mean,
                                                       cfg.volume_dispersion)};
        }
        s.valid_asks = cfg.depth;
        s.valid_bids = cfg.depth;
        day.snaps.push_back(s);
        day.latent_imbalance.push_back(imb);
    }
    return day;
}

std::vector<std::vector<BookSnapshot>> generate(const SynthConfig& cfg) {
    std::vector<std::vector<BookSnapshot>> days;
    days.reserve(cfg.n_days);
    for (int d = 0; d < cfg.n_days; ++d) days.push_back(generate_day(cfg, d).snaps);
    return days;
}

void generate_csv_dir(const SynthConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (int d = 0; d < cfg.n_days; ++d) {
        const auto day = generate_day(cfg, d);
        book::write_snapshot_csv(dir / (day_name(d) + ".csv"), day.snaps);
    }
}

double planted_ceiling(const SynthConfig& cfg, int n_trials,
                       const labeling::LabelingPolicy* policy_in) {
    if (n_trials < 10'000) throw ConfigInvalid("planted_ceiling needs >= 1e4 trials");
    labeling::LabelingPolicy policy;
    policy.target = labeling::TargetKind::R1K;
    policy.k = 1;
    policy.k_prime = 20;
    policy.window = 100;
    policy.stride = 1;
    if (policy_in) policy = *policy_in;

    constexpr size_t kScalerDays = 5;
    SynthConfig sim = cfg;
    sim.seed = mix64(cfg.seed ^ 0x6365696c696e67ULL); // independent stream

    std::vector<std::vector<BookSnapshot>> history;
    std::vector<std::string> names;
    int day_index = 0;
    const auto next_day = [&]() {
        DayData d = generate_day(sim, day_index);
        history.push_back(d.snaps);
        names.push_back(day_name(day_index));
        ++day_index;
        return d;
    };
    for (size_t i = 0; i < kScalerDays; ++i) next_day();

    // pass 1: collect targets + Bayes calls; alpha comes from the pool
    std::vector<double> targets;
    std::vector<int> bayes_up; // 1 up, 0 down
    while (targets.size() < static_cast<size_t>(n_trials)) {
        const DayData d = next_day();
        const std::span<const std::vector<BookSnapshot>> hist{history};
        const auto scaler = features::fit_scaler(
            hist.subspan(history.size() - 1 - kScalerDays, kScalerDays),
            std::span<const std::string>{names}.subspan(history.size() - 1 - kScalerDays,
                                                        kScalerDays),
            kScalerDays);
        const auto f = features::build_day(d.snaps, scaler, features::Variant::Level1);
        const auto anchors = labeling::anchor_indices(f.rows, policy);
        for (int t : anchors) {
            const double y = labeling::modified_return(f.mid, t, policy.past_horizon(),
                                                       policy.future_horizon());
            const double p = labeling::past_avg(f.mid, t, policy.past_horizon());
            const double drift = d.latent_imbalance[static_cast<size_t>(t)] *
                                 (cfg.signal_beta >= 0.0 ? 1.0 : -1.0);
            // predict the sign of (f - p)/p: drift sign times denominator sign
            const bool up = (drift >= 0.0) == (p >= 0.0);
            targets.push_back(y);
            bayes_up.push_back(up ? 1 : 0);
        }
    }

    const double alpha = labeling::choose_alpha(targets);
    uint64_t diverge = 0, hits = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const auto truth = labeling::classify(targets[i], alpha);
        if (truth == labeling::Label::Stable) continue;
        ++diverge;
        const bool truth_up = truth == labeling::Label::Up;
        if (truth_up == (bayes_up[i] == 1)) ++hits;
    }
    if (diverge == 0) throw EmptyInput("no diverging samples in ceiling estimate");
    return static_cast<double>(hits) / static_cast<double>(diverge);
}

} // namespace lob::synth
