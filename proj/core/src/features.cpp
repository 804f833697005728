#include "lob/features.hpp"

#include <cmath>

namespace lob::features {

using book::BookSnapshot;

int variant_width(Variant v) {
    switch (v) {
    case Variant::FullLOB: return 40;
    case Variant::Level1: return 4;
    case Variant::PricesOnly: return 2;
    case Variant::VolumesOnly: return 2;
    case Variant::PricesImbalance: return 3;
    }
    throw Error("unreachable variant");
}

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::FullLOB: return "full_lob";
    case Variant::Level1: return "level1";
    case Variant::PricesOnly: return "prices";
    case Variant::VolumesOnly: return "volumes";
    case Variant::PricesImbalance: return "prices_imbalance";
    }
    throw Error("unreachable variant");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::FullLOB, Variant::Level1, Variant::PricesOnly,
                      Variant::VolumesOnly, Variant::PricesImbalance})
        if (name == variant_name(v)) return v;
    throw ConfigInvalid("unknown variant '" + name + "'");
}

namespace {

struct Moments {
    double sum = 0.0, sumsq = 0.0;
    uint64_t n = 0;
    void add(double v) {
        sum += v;
        sumsq += v * v;
        ++n;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double pop_std() const {
        const double m = mean();
        const double var = sumsq / static_cast<double>(n) - m * m;
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
};

// Degenerate-variance guard; exact zero up to fp slop of the
// sum-of-squares formula.
constexpr double kStdFloor = 1e-12;

} // namespace

Scaler fit_scaler(std::span<const std::vector<BookSnapshot>> prior_days,
                  std::span<const std::string> day_names, size_t required) {
    if (prior_days.size() < required)
        throw InsufficientHistory("need " + std::to_string(required) +
                                  " prior days, have " + std::to_string(prior_days.size()));
    Moments px, vol;
    for (const auto& day : prior_days) {
        if (day.empty()) throw EmptyInput("scaler fitting day has no snapshots");
        for (const auto& s : day) {
            for (int i = 0; i < s.valid_asks; ++i) {
                px.add(price_usd(s.asks[i].price));
                vol.add(static_cast<double>(s.asks[i].volume));
            }
            for (int i = 0; i < s.valid_bids; ++i) {
                px.add(price_usd(s.bids[i].price));
                vol.add(static_cast<double>(s.bids[i].volume));
            }
        }
    }
    if (px.n == 0) throw EmptyInput("no valid levels in scaler fitting days");

    Scaler sc;
    sc.price_mean = px.mean();
    sc.price_std = px.pop_std();
    sc.volume_mean = vol.mean();
    sc.volume_std = vol.pop_std();
    if (sc.price_std <= kStdFloor) throw DegenerateStd("price std is zero");
    if (sc.volume_std <= kStdFloor) throw DegenerateStd("volume std is zero");
    sc.fitted_over.assign(day_names.begin(), day_names.end());
    return sc;
}

namespace {

void require_level1(const BookSnapshot& s) {
    if (!s.two_sided())
        throw InsufficientDepth("snapshot at ts " + std::to_string(s.timestamp_ns) +
                                " is one-sided");
}

} // namespace

std::vector<double> standardize(const BookSnapshot& s, const Scaler& sc, Variant variant) {
    const auto zp = [&](uint32_t px) { return (price_usd(px) - sc.price_mean) / sc.price_std; };
    const auto zv = [&](uint32_t v) {
        return (static_cast<double>(v) - sc.volume_mean) / sc.volume_std;
    };

    std::vector<double> out;
    switch (variant) {
    case Variant::FullLOB: {
        if (s.valid_asks < book::kDepth || s.valid_bids < book::kDepth)
            throw InsufficientDepth("snapshot at ts " + std::to_string(s.timestamp_ns) +
                                    " has fewer than " + std::to_string(book::kDepth) +
                                    " levels per side");
        out.reserve(40);
        for (int i = 0; i < book::kDepth; ++i) {
            out.push_back(zp(s.asks[i].price));
            out.push_back(zv(s.asks[i].volume));
            out.push_back(zp(s.bids[i].price));
            out.push_back(zv(s.bids[i].volume));
        }
        break;
    }
    case Variant::Level1:
        require_level1(s);
        out = {zp(s.asks[0].price), zv(s.asks[0].volume), zp(s.bids[0].price),
               zv(s.bids[0].volume)};
        break;
    case Variant::PricesOnly:
        require_level1(s);
        out = {zp(s.asks[0].price), zp(s.bids[0].price)};
        break;
    case Variant::VolumesOnly:
        require_level1(s);
        out = {zv(s.asks[0].volume), zv(s.bids[0].volume)};
        break;
    case Variant::PricesImbalance:
        require_level1(s);
        out = {zp(s.asks[0].price), zp(s.bids[0].price), imbalance(s)};
        break;
    }
    for (double v : out)
        if (!std::isfinite(v)) throw Error("non-finite feature value");
    return out;
}

double mid_value(const BookSnapshot& s, const Scaler& sc) {
    require_level1(s);
    const double mid = (price_usd(s.asks[0].price) + price_usd(s.bids[0].price)) / 2.0;
    return (mid - sc.price_mean) / sc.price_std;
}

double imbalance(const BookSnapshot& s) {
    require_level1(s);
    const double b = s.bids[0].volume;
    const double a = s.asks[0].volume;
    if (b <= 0.0 || a <= 0.0)
        throw InsufficientDepth("level-1 volume is zero at ts " +
                                std::to_string(s.timestamp_ns));
    return (b - a) / (b + a);
}

DayFeatures build_day(std::span<const BookSnapshot> snaps, const Scaler& scaler,
                      Variant variant) {
    DayFeatures f;
    f.variant = variant;
    f.cols = static_cast<size_t>(variant_width(variant));
    for (const auto& s : snaps) {
        std::vector<double> row;
        double mid;
        try {
            row = standardize(s, scaler, variant);
            mid = mid_value(s, scaler);
        } catch (const InsufficientDepth&) {
            ++f.dropped;
            continue;
        }
        f.x.insert(f.x.end(), row.begin(), row.end());
        f.mid.push_back(mid);
        f.ts.push_back(s.timestamp_ns);
        ++f.rows;
    }
    return f;
}

} // namespace lob::features
