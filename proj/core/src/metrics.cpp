#include "lob/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace lob::metrics {

using nlohmann::json;

uint64_t ConfusionMatrix::total() const {
    uint64_t n = 0;
    for (const auto& row : counts)
        for (uint64_t c : row) n += c;
    return n;
}

uint64_t ConfusionMatrix::row_sum(size_t r) const {
    return counts[r][0] + counts[r][1] + counts[r][2];
}

uint64_t ConfusionMatrix::col_sum(size_t c) const {
    return counts[0][c] + counts[1][c] + counts[2][c];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) counts[i][j] += other.counts[i][j];
    return *this;
}

ConfusionMatrix confusion(std::span<const Label> truths, std::span<const Label> preds) {
    if (truths.size() != preds.size())
        throw LengthMismatch(std::to_string(truths.size()) + " truths vs " +
                             std::to_string(preds.size()) + " predictions");
    if (truths.empty()) throw EmptyInput("confusion of zero samples");
    ConfusionMatrix cm;
    for (size_t i = 0; i < truths.size(); ++i) cm.add(truths[i], preds[i]);
    return cm;
}

std::array<ClassStats, 3> class_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyInput("class metrics of an empty matrix");
    std::array<ClassStats, 3> out;
    for (size_t c = 0; c < 3; ++c) {
        const uint64_t col = cm.col_sum(c);
        const uint64_t row = cm.row_sum(c);
        const uint64_t hit = cm.counts[c][c];
        if (col > 0) out[c].precision = static_cast<double>(hit) / static_cast<double>(col);
        if (row > 0) out[c].recall = static_cast<double>(hit) / static_cast<double>(row);
        if (out[c].precision && out[c].recall && (*out[c].precision + *out[c].recall) > 0.0)
            out[c].f1 = 2.0 * *out[c].precision * *out[c].recall /
                        (*out[c].precision + *out[c].recall);
    }
    return out;
}

double overall_accuracy(const ConfusionMatrix& cm) {
    const uint64_t n = cm.total();
    if (n == 0) throw EmptyInput("accuracy of an empty matrix");
    const uint64_t diag = cm.counts[0][0] + cm.counts[1][1] + cm.counts[2][2];
    return static_cast<double>(diag) / static_cast<double>(n);
}

namespace {
constexpr size_t kUp = 0, kDown = 1, kStable = 2;
}

double volatility_accuracy(const ConfusionMatrix& cm) {
    const uint64_t n = cm.total();
    if (n == 0) throw EmptyInput("volatility accuracy of an empty matrix");
    const uint64_t stable_hit = cm.counts[kStable][kStable];
    const uint64_t diverge_hit = cm.counts[kUp][kUp] + cm.counts[kUp][kDown] +
                                 cm.counts[kDown][kUp] + cm.counts[kDown][kDown];
    return static_cast<double>(stable_hit + diverge_hit) / static_cast<double>(n);
}

std::optional<double> directional_accuracy(const ConfusionMatrix& cm,
                                           DirectionalDenominator denom) {
    const uint64_t hits = cm.counts[kUp][kUp] + cm.counts[kDown][kDown];
    uint64_t base = 0;
    switch (denom) {
    case DirectionalDenominator::BothDiverge:
        base = cm.counts[kUp][kUp] + cm.counts[kUp][kDown] + cm.counts[kDown][kUp] +
               cm.counts[kDown][kDown];
        break;
    case DirectionalDenominator::TrueDiverge:
        base = cm.row_sum(kUp) + cm.row_sum(kDown);
        break;
    }
    if (base == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(base);
}

EvaluationReport evaluate(const std::string& day, const ConfusionMatrix& cm,
                          DirectionalDenominator denom) {
    EvaluationReport r;
    r.day = day;
    r.cm = cm;
    r.per_class = class_metrics(cm);
    for (size_t c = 0; c < 3; ++c) r.sizes[c] = cm.row_sum(c);
    r.overall = overall_accuracy(cm);
    r.volatility = volatility_accuracy(cm);
    r.directional = directional_accuracy(cm, denom);
    return r;
}

namespace {

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

const char* class_key(size_t c) {
    switch (c) {
    case kUp: return "up";
    case kDown: return "down";
    default: return "stable";
    }
}

} // namespace

std::string EvaluationReport::to_json() const {
    json j;
    j["day"] = day;
    j["confusion"] = cm.counts;
    j["sizes"] = {{"up", sizes[0]}, {"down", sizes[1]}, {"stable", sizes[2]}};
    j["evaluated"] = cm.total();
    j["overall_accuracy"] = overall;
    j["volatility_accuracy"] = volatility;
    j["directional_accuracy"] = opt_json(directional);
    json pc;
    for (size_t c = 0; c < 3; ++c) {
        pc[class_key(c)] = {{"precision", opt_json(per_class[c].precision)},
                            {"recall", opt_json(per_class[c].recall)},
                            {"f1", opt_json(per_class[c].f1)}};
    }
    j["per_class"] = pc;
    return j.dump(2);
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    EvaluationReport r;
    r.day = j.at("day").get<std::string>();
    r.cm.counts = j.at("confusion").get<std::array<std::array<uint64_t, 3>, 3>>();
    r.sizes = {j.at("sizes").at("up").get<uint64_t>(),
               j.at("sizes").at("down").get<uint64_t>(),
               j.at("sizes").at("stable").get<uint64_t>()};
    r.overall = j.at("overall_accuracy").get<double>();
    r.volatility = j.at("volatility_accuracy").get<double>();
    r.directional = opt_from(j.at("directional_accuracy"));
    for (size_t c = 0; c < 3; ++c) {
        const auto& pc = j.at("per_class").at(class_key(c));
        r.per_class[c].precision = opt_from(pc.at("precision"));
        r.per_class[c].recall = opt_from(pc.at("recall"));
        r.per_class[c].f1 = opt_from(pc.at("f1"));
    }
    return r;
}

std::map<std::string, AggregateStat> aggregate_daily(
    std::span<const EvaluationReport> reports) {
    if (reports.empty()) throw EmptyInput("aggregate of zero reports");

    const auto collect = [&](auto&& get) {
        AggregateStat st;
        double sum = 0.0, sumsq = 0.0;
        for (const auto& r : reports) {
            const std::optional<double> v = get(r);
            if (!v) {
                ++st.excluded;
                continue;
            }
            sum += *v;
            sumsq += *v * *v;
            ++st.used;
        }
        if (st.used > 0) {
            st.mean = sum / st.used;
            const double var = sumsq / st.used - st.mean * st.mean;
            st.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
        }
        return st;
    };

    std::map<std::string, AggregateStat> out;
    out["overall_accuracy"] =
        collect([](const EvaluationReport& r) { return std::optional<double>(r.overall); });
    out["volatility_accuracy"] =
        collect([](const EvaluationReport& r) { return std::optional<double>(r.volatility); });
    out["directional_accuracy"] =
        collect([](const EvaluationReport& r) { return r.directional; });
    for (size_t c = 0; c < 3; ++c) {
        const std::string suffix = class_key(c);
        out["precision_" + suffix] =
            collect([c](const EvaluationReport& r) { return r.per_class[c].precision; });
        out["recall_" + suffix] =
            collect([c](const EvaluationReport& r) { return r.per_class[c].recall; });
        out["f1_" + suffix] =
            collect([c](const EvaluationReport& r) { return r.per_class[c].f1; });
    }
    return out;
}

namespace {

std::string cell(const AggregateStat& st) {
    if (st.used == 0) return "undef";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f(%.3f)", st.mean, st.stddev);
    return buf;
}

} // namespace

std::string render_report_table(std::span<const EvaluationReport> reports,
                                const std::string& title) {
    const auto agg = aggregate_daily(reports);
    std::array<uint64_t, 3> sizes{};
    for (const auto& r : reports)
        for (size_t c = 0; c < 3; ++c) sizes[c] += r.sizes[c];

    std::ostringstream os;
    os << title << " (" << reports.size() << " days)\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %-14s %-14s %-14s %10s\n", "", "Precision",
                  "Recall", "F1-Score", "Size");
    os << buf;
    const char* names[3] = {"UP", "DOWN", "STABLE"};
    const char* keys[3] = {"up", "down", "stable"};
    for (size_t c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof buf, "%-8s %-14s %-14s %-14s %10llu\n", names[c],
                      cell(agg.at(std::string("precision_") + keys[c])).c_str(),
                      cell(agg.at(std::string("recall_") + keys[c])).c_str(),
                      cell(agg.at(std::string("f1_") + keys[c])).c_str(),
                      static_cast<unsigned long long>(sizes[c]));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-22s %s\n", "Overall accuracy",
                  cell(agg.at("overall_accuracy")).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %s\n", "Directional accuracy",
                  cell(agg.at("directional_accuracy")).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %s\n", "Volatility accuracy",
                  cell(agg.at("volatility_accuracy")).c_str());
    os << buf;
    return os.str();
}

} // namespace lob::metrics
