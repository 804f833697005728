#include "lob/naive.hpp"

namespace lob::naive {

using labeling::Label;
using labeling::LabelingPolicy;
using labeling::modified_return;

double truncated_series(std::span<const double> m, int s, int t, int k, int k_prime) {
    if (s >= t) throw IndexOutOfRange("truncated series needs s < t");
    if (s <= t - k_prime) return modified_return(m, s, k, k_prime);
    return modified_return(m, s, k, t - s);
}

Label naive_predict(std::span<const double> m, int t, const LabelingPolicy& policy) {
    if (policy.target != labeling::TargetKind::RkK)
        throw ConfigInvalid("naive prediction targets the symmetric return only");
    if (policy.alpha <= 0.0) throw ConfigInvalid("naive prediction requires a positive alpha");
    const double x = truncated_series(m, t - 1, t, policy.k, policy.k_prime);
    return labeling::classify(x, policy.alpha);
}

} // namespace lob::naive
