#include "lob/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lob::labeling {

const char* label_name(Label l) {
    switch (l) {
    case Label::Up: return "UP";
    case Label::Down: return "DOWN";
    case Label::Stable: return "STABLE";
    }
    throw Error("unreachable label");
}

void LabelingPolicy::validate() const {
    if (k < 1) throw ConfigInvalid("policy k must be >= 1");
    if (k_prime < 1) throw ConfigInvalid("policy k_prime must be >= 1");
    if (window < 1) throw ConfigInvalid("policy window must be >= 1");
    if (stride < 1) throw ConfigInvalid("policy stride must be >= 1");
}

double past_avg(std::span<const double> m, int t, int k) {
    if (k < 1) throw IndexOutOfRange("past_avg k must be >= 1");
    if (t - k + 1 < 0 || t >= static_cast<int>(m.size()))
        throw IndexOutOfRange("past_avg at t=" + std::to_string(t) +
                              ", k=" + std::to_string(k) + ", n=" + std::to_string(m.size()));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += m[t - i];
    return sum / k;
}

double future_avg(std::span<const double> m, int t, int k) {
    if (k < 1) throw IndexOutOfRange("future_avg k must be >= 1");
    if (t < 0 || t + k > static_cast<int>(m.size()) - 1)
        throw IndexOutOfRange("future_avg at t=" + std::to_string(t) +
                              ", k=" + std::to_string(k) + ", n=" + std::to_string(m.size()));
    double sum = 0.0;
    for (int i = 1; i <= k; ++i) sum += m[t + i];
    return sum / k;
}

double modified_return(std::span<const double> m, int t, int k, int k_prime) {
    const double p = past_avg(m, t, k);
    const double f = future_avg(m, t, k_prime);
    if (std::fabs(p) < 1e-8)
        throw ZeroDenominator("past average at t=" + std::to_string(t) + " is " +
                              std::to_string(p));
    return (f - p) / p;
}

double choose_alpha(std::span<const double> targets) {
    std::vector<double> mags;
    mags.reserve(targets.size());
    for (double y : targets)
        if (std::isfinite(y)) mags.push_back(std::fabs(y));
    if (mags.size() < 3)
        throw EmptyInput("choose_alpha needs at least 3 finite targets, got " +
                         std::to_string(mags.size()));
    std::sort(mags.begin(), mags.end());

    const double n = static_cast<double>(mags.size());
    const double h = n / 3.0; // rank of the 33.33rd percentile, 1-based
    if (h <= 1.0) return mags.front();
    const size_t lo = static_cast<size_t>(h); // floor, 1-based
    const double frac = h - static_cast<double>(lo);
    if (lo >= mags.size()) return mags.back();
    return mags[lo - 1] + frac * (mags[lo] - mags[lo - 1]);
}

Label classify(double y, double alpha) {
    if (y > alpha) return Label::Up;
    if (y < -alpha) return Label::Down;
    return Label::Stable;
}

std::vector<int> anchor_indices(size_t n, const LabelingPolicy& policy) {
    policy.validate();
    const int first = policy.window - 1 + policy.past_horizon();
    const int last = static_cast<int>(n) - 1 - policy.future_horizon();
    if (first > last)
        throw DayTooShort("day of " + std::to_string(n) + " observations is shorter than " +
                          std::to_string(policy.window + policy.past_horizon() +
                                         policy.future_horizon()));
    std::vector<int> anchors;
    for (int t = first; t <= last; t += policy.stride) anchors.push_back(t);
    return anchors;
}

std::vector<double> targets_at_anchors(std::span<const double> mid,
                                       const LabelingPolicy& policy) {
    const auto anchors = anchor_indices(mid.size(), policy);
    std::vector<double> ys;
    ys.reserve(anchors.size());
    for (int t : anchors)
        ys.push_back(modified_return(mid, t, policy.past_horizon(), policy.future_horizon()));
    return ys;
}

std::vector<LabeledSample> build_samples(const features::DayFeatures& day,
                                         const LabelingPolicy& policy,
                                         const std::string& day_name) {
    if (policy.alpha <= 0.0)
        throw ConfigInvalid("build_samples requires a positive alpha");
    const auto anchors = anchor_indices(day.rows, policy);
    std::vector<LabeledSample> out;
    out.reserve(anchors.size());
    for (int t : anchors) {
        LabeledSample s;
        s.t = t;
        s.day = day_name;
        s.y = modified_return(day.mid, t, policy.past_horizon(), policy.future_horizon());
        s.label = classify(s.y, policy.alpha);
        const size_t begin = static_cast<size_t>(t - policy.window + 1) * day.cols;
        const size_t len = static_cast<size_t>(policy.window) * day.cols;
        s.window.assign(day.x.begin() + begin, day.x.begin() + begin + len);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------
// archive io
// ---------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'O', 'B', 'S', 'A', 'M', 'P', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("truncated archive " + path.string());
    return v;
}

} // namespace

void write_samples(const std::filesystem::path& path, const SampleArchive& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    put(out, uint32_t{1}); // version
    put(out, a.width);
    put(out, static_cast<uint32_t>(a.policy.window));
    put(out, static_cast<uint64_t>(a.samples.size()));
    put(out, static_cast<int32_t>(a.policy.k));
    put(out, static_cast<int32_t>(a.policy.k_prime));
    put(out, a.policy.alpha);
    put(out, static_cast<uint8_t>(a.policy.target));
    put(out, static_cast<int32_t>(a.policy.stride));

    const size_t window_len = static_cast<size_t>(a.policy.window) * a.width;
    for (const auto& s : a.samples) {
        if (s.window.size() != window_len)
            throw IoError("sample window size mismatch in archive write");
        out.write(reinterpret_cast<const char*>(s.window.data()),
                  static_cast<std::streamsize>(window_len * sizeof(double)));
    }
    for (const auto& s : a.samples) put(out, s.y);
    for (const auto& s : a.samples) put(out, static_cast<uint8_t>(s.label));
    for (const auto& s : a.samples) put(out, static_cast<int64_t>(s.t));
    if (!out) throw IoError("write failed for " + path.string());
}

SampleArchive read_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw IoError(path.string() + ": not a labeled-sample archive");
    const auto version = get<uint32_t>(in, path);
    if (version != 1)
        throw IoError(path.string() + ": unsupported archive version " +
                      std::to_string(version));

    SampleArchive a;
    a.width = get<uint32_t>(in, path);
    a.policy.window = static_cast<int>(get<uint32_t>(in, path));
    const auto count = get<uint64_t>(in, path);
    a.policy.k = get<int32_t>(in, path);
    a.policy.k_prime = get<int32_t>(in, path);
    a.policy.alpha = get<double>(in, path);
    a.policy.target = static_cast<TargetKind>(get<uint8_t>(in, path));
    a.policy.stride = get<int32_t>(in, path);

    const size_t window_len = static_cast<size_t>(a.policy.window) * a.width;
    a.samples.resize(count);
    for (auto& s : a.samples) {
        s.window.resize(window_len);
        in.read(reinterpret_cast<char*>(s.window.data()),
                static_cast<std::streamsize>(window_len * sizeof(double)));
        if (!in) throw IoError("truncated archive " + path.string());
    }
    for (auto& s : a.samples) s.y = get<double>(in, path);
    for (auto& s : a.samples) s.label = static_cast<Label>(get<uint8_t>(in, path));
    for (auto& s : a.samples) s.t = static_cast<int>(get<int64_t>(in, path));
    return a;
}

} // namespace lob::labeling
